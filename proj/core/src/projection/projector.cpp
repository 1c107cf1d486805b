#include "hill/projection/projector.hpp"

#include <cmath>
#include <cstring>

#include "hill/diffcore/backward.hpp"
#include "hill/diffcore/ops.hpp"
#include "hill/error.hpp"
#include "hill/util/rng.hpp"

namespace hill::projection {

namespace {

template <class V>
double pooled_std_impl(std::span<const V> values) {
    if (values.empty()) return 0.0;
    double mean = 0.0;
    for (V v : values) mean += static_cast<double>(v);
    mean /= static_cast<double>(values.size());
    double ss = 0.0;
    for (V v : values) {
        const double d = static_cast<double>(v) - mean;
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(values.size()));
}

}  // namespace

double pooled_population_std(std::span<const float> values) { return pooled_std_impl(values); }
double pooled_population_std(std::span<const double> values) { return pooled_std_impl(values); }

template <class T>
Projector<T> Projector<T>::init(std::size_t latent_dim, std::size_t hidden, std::size_t num_classes,
                                std::uint64_t seed) {
    if (latent_dim < 2 || hidden < 2) throw Error(ErrorCode::invalid_argument, "projector: latent and hidden dims must be >= 2");
    if (num_classes < 2) throw Error(ErrorCode::invalid_argument, "projector: need at least 2 classes");
    Projector p;
    p.latent_dim_ = latent_dim;
    p.hidden_ = hidden;
    p.num_classes_ = num_classes;
    std::size_t index = 0;
    auto make = [&](ad::Shape shape, std::size_t fan_in) {
        Rng rng(derive_seed(seed, 0x9A0EC7, index++));
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::vector<T> values(ad::numel(shape));
        for (auto& v : values) v = static_cast<T>(rng.uniform(-bound, bound));
        return ad::Tensor<T>::parameter(std::move(shape), std::move(values));
    };
    p.params_ = {make({latent_dim, hidden}, latent_dim), make({hidden}, latent_dim), make({hidden, 2}, hidden),
                 make({2}, hidden)};
    p.aux_ = {make({2, num_classes}, 2), make({num_classes}, 2)};
    return p;
}

template <class T>
Projector<T> Projector<T>::restore(std::size_t latent_dim, std::size_t hidden, std::size_t num_classes,
                                   std::vector<ad::Tensor<T>> params, std::vector<ad::Tensor<T>> aux, bool frozen,
                                   std::optional<double> sigma_ref) {
    const ad::Shape expected[] = {{latent_dim, hidden}, {hidden}, {hidden, 2}, {2}};
    if (params.size() != 4) throw Error(ErrorCode::format_error, "projector: expected 4 parameters");
    for (std::size_t i = 0; i < 4; ++i) {
        if (params[i].shape() != expected[i]) {
            throw Error(ErrorCode::shape_mismatch, "projector parameter " + std::to_string(i) + " has shape " +
                                                       ad::to_string(params[i].shape()));
        }
    }
    if (frozen && !(sigma_ref && *sigma_ref > 0.0)) {
        throw Error(ErrorCode::format_error, "projector: frozen without a positive sigma_ref");
    }
    if (!frozen && aux.size() != 2) throw Error(ErrorCode::format_error, "projector: unfrozen state needs the aux head");
    Projector p;
    p.latent_dim_ = latent_dim;
    p.hidden_ = hidden;
    p.num_classes_ = num_classes;
    p.params_ = std::move(params);
    p.aux_ = frozen ? std::vector<ad::Tensor<T>>{} : std::move(aux);
    p.frozen_ = frozen;
    p.sigma_ref_ = sigma_ref;
    if (frozen) {
        for (const auto& t : p.params_) t.freeze();
    }
    return p;
}

template <class T>
ad::Tensor<T> Projector<T>::project(const ad::Tensor<T>& z) const {
    if (z.shape().size() != 2 || z.dim(1) != latent_dim_) {
        throw Error(ErrorCode::shape_mismatch, "projector expects [B," + std::to_string(latent_dim_) + "], got " +
                                                   ad::to_string(z.shape()));
    }
    const auto h = ad::tanh(ad::add(ad::matmul(z, params_[0]), params_[1]));
    return ad::add(ad::matmul(h, params_[2]), params_[3]);
}

template <class T>
double Projector<T>::epoch1_step(const ad::Tensor<T>& z, std::span<const int> labels, ad::Optimizer<T>& optimizer) {
    if (frozen_) throw Error(ErrorCode::frozen_violation, "epoch1_step on a frozen projector");
    const auto p = project(ad::detach(z));
    const auto logits = ad::add(ad::matmul(p, aux_[0]), aux_[1]);
    const auto loss = ad::softmax_cross_entropy(logits, labels);
    const auto grads = ad::backward(loss);
    std::vector<ad::Tensor<T>> all = params_;
    all.insert(all.end(), aux_.begin(), aux_.end());
    optimizer.step(all, grads);
    return static_cast<double>(loss.item());
}

template <class T>
void Projector<T>::freeze(std::span<const T> reference_points) {
    if (frozen_) throw Error(ErrorCode::frozen_violation, "projector is already frozen");
    if (reference_points.size() % 2 != 0 || reference_points.size() < 4) {
        throw Error(ErrorCode::invalid_argument, "freeze needs at least 2 reference points");
    }
    const double sigma = pooled_population_std(reference_points);
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw Error(ErrorCode::invalid_argument, "degenerate reference points: pooled std is 0");
    }
    sigma_ref_ = sigma;
    frozen_ = true;
    aux_.clear();
    for (const auto& t : params_) t.freeze();
}

template <class T>
std::vector<ad::Tensor<T>> Projector<T>::mutable_parameters() const {
    if (frozen_) throw Error(ErrorCode::frozen_violation, "projector parameters are frozen");
    return params_;
}

template <class T>
std::vector<std::uint8_t> Projector<T>::parameter_bytes() const {
    std::vector<std::uint8_t> bytes;
    for (const auto& t : params_) {
        const auto* raw = reinterpret_cast<const std::uint8_t*>(t.data().data());
        bytes.insert(bytes.end(), raw, raw + t.size() * sizeof(T));
    }
    return bytes;
}

template class Projector<float>;
template class Projector<double>;

}  // namespace hill::projection
