#include "hill/diffcore/optimizer.hpp"

#include <cmath>

#include "hill/error.hpp"

namespace hill::ad {

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::sgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer_kind(const std::string& name) {
    if (name == "sgd") return OptimizerKind::sgd;
    if (name == "adam") return OptimizerKind::adam;
    throw Error(ErrorCode::invalid_argument, "unknown optimizer '" + name + "'");
}

void OptimizerConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw Error(ErrorCode::invalid_argument, "learning_rate must be positive");
    }
    if (momentum < 0.0 || momentum >= 1.0) throw Error(ErrorCode::invalid_argument, "momentum must be in [0,1)");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
        throw Error(ErrorCode::invalid_argument, "adam betas must be in [0,1)");
    }
    if (!(epsilon > 0.0)) throw Error(ErrorCode::invalid_argument, "epsilon must be positive");
}

template <class T>
Optimizer<T>::Optimizer(OptimizerConfig config) : config_(config) {
    config_.validate();
}

template <class T>
void Optimizer<T>::step(std::span<const Tensor<T>> params, const Gradients<T>& grads) {
    if (!m_.empty() && m_.size() != params.size()) {
        throw Error(ErrorCode::shape_mismatch, "optimizer tracks " + std::to_string(m_.size()) +
                                                   " parameters, step given " + std::to_string(params.size()));
    }
    std::vector<std::vector<T>> gs;
    gs.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& p = params[i];
        if (p.frozen()) {
            throw Error(ErrorCode::frozen_violation, "optimizer step on frozen parameter #" + std::to_string(i));
        }
        auto g = grads.of(p);
        for (T v : g) {
            if (!std::isfinite(v)) {
                throw Error(ErrorCode::non_finite, "gradient of parameter #" + std::to_string(i) + " is not finite");
            }
        }
        if (!m_.empty() && m_[i].size() != p.size()) {
            throw Error(ErrorCode::shape_mismatch, "moment buffer size mismatch for parameter #" + std::to_string(i));
        }
        gs.push_back(std::move(g));
    }
    if (m_.empty()) {
        for (const auto& p : params) {
            m_.emplace_back(p.size(), T{0});
            v_.emplace_back(config_.kind == OptimizerKind::adam ? p.size() : 0, T{0});
        }
    }
    ++step_count_;
    const double lr = config_.learning_rate;
    if (config_.kind == OptimizerKind::sgd) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            auto w = params[i].mutable_data();
            auto& buf = m_[i];
            for (std::size_t j = 0; j < w.size(); ++j) {
                double d = gs[i][j];
                if (config_.momentum > 0.0) {
                    buf[j] = static_cast<T>(config_.momentum * double(buf[j]) + d);
                    d = buf[j];
                }
                w[j] = static_cast<T>(double(w[j]) - lr * d);
            }
        }
        return;
    }
    const double b1 = config_.beta1, b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_count_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_count_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto w = params[i].mutable_data();
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t j = 0; j < w.size(); ++j) {
            const double g = gs[i][j];
            const double mj = b1 * double(m[j]) + (1.0 - b1) * g;
            const double vj = b2 * double(v[j]) + (1.0 - b2) * g * g;
            m[j] = static_cast<T>(mj);
            v[j] = static_cast<T>(vj);
            const double update = lr * (mj / c1) / (std::sqrt(vj / c2) + config_.epsilon);
            w[j] = static_cast<T>(double(w[j]) - update);
        }
    }
}

template <class T>
void Optimizer<T>::restore(std::uint64_t step_count, std::vector<std::vector<T>> m, std::vector<std::vector<T>> v) {
    if (m.size() != v.size()) throw Error(ErrorCode::format_error, "moment buffer count mismatch");
    step_count_ = step_count;
    m_ = std::move(m);
    v_ = std::move(v);
}

template class Optimizer<float>;
template class Optimizer<double>;

}  // namespace hill::ad
