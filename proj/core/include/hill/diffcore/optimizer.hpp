#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hill/diffcore/backward.hpp"
#include "hill/diffcore/tensor.hpp"

namespace hill::ad {

enum class OptimizerKind { sgd, adam };

std::string to_string(OptimizerKind kind);
OptimizerKind parse_optimizer_kind(const std::string& name);

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::adam;
    double learning_rate = 1e-3;
    double momentum = 0.0;  // sgd only
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const;
};

template <class T>
class Optimizer {
public:
    Optimizer() = default;
    explicit Optimizer(OptimizerConfig config);

    // Applies one update. All gradients are checked for finiteness before any
    // parameter is touched; on failure nothing changes and non_finite is thrown.
    void step(std::span<const Tensor<T>> params, const Gradients<T>& grads);

    const OptimizerConfig& config() const noexcept { return config_; }
    std::uint64_t step_count() const noexcept { return step_count_; }

    // Moment buffers, one per parameter in step() order. Empty before the first step.
    const std::vector<std::vector<T>>& first_moments() const noexcept { return m_; }
    const std::vector<std::vector<T>>& second_moments() const noexcept { return v_; }

    void restore(std::uint64_t step_count, std::vector<std::vector<T>> m, std::vector<std::vector<T>> v);

private:
    OptimizerConfig config_;
    std::uint64_t step_count_ = 0;
    std::vector<std::vector<T>> m_;
    std::vector<std::vector<T>> v_;
};

extern template class Optimizer<float>;
extern template class Optimizer<double>;

}  // namespace hill::ad
