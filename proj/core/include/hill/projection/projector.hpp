#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "hill/diffcore/optimizer.hpp"
#include "hill/diffcore/tensor.hpp"

namespace hill::projection {

// Population standard deviation pooled over every coordinate.
double pooled_population_std(std::span<const float> values);
double pooled_population_std(std::span<const double> values);

// 2D side branch off the latent tap: tanh(z W1 + b1) W2 + b2. During the first
// epoch an auxiliary 2->C head trains it on detached latents; after freeze()
// its parameters are immutable and sigma_ref records the reference scale.
template <class T>
class Projector {
public:
    Projector() = default;

    static Projector init(std::size_t latent_dim, std::size_t hidden, std::size_t num_classes, std::uint64_t seed);

    // Restores a projector from persisted parameters (W1, b1, W2, b2 and, when
    // not frozen, aux weight/bias).
    static Projector restore(std::size_t latent_dim, std::size_t hidden, std::size_t num_classes,
                             std::vector<ad::Tensor<T>> params, std::vector<ad::Tensor<T>> aux, bool frozen,
                             std::optional<double> sigma_ref);

    // [B, D] -> [B, 2]. Differentiable in z whether or not frozen.
    ad::Tensor<T> project(const ad::Tensor<T>& z) const;

    // One cross-entropy step of the auxiliary head on project(detach(z)).
    // Returns the loss before the update.
    double epoch1_step(const ad::Tensor<T>& z, std::span<const int> labels, ad::Optimizer<T>& optimizer);

    // reference_points is [M, 2] row-major, M >= 2.
    void freeze(std::span<const T> reference_points);

    bool frozen() const noexcept { return frozen_; }
    std::optional<double> sigma_ref() const noexcept { return sigma_ref_; }
    std::size_t latent_dim() const noexcept { return latent_dim_; }
    std::size_t hidden() const noexcept { return hidden_; }
    std::size_t num_classes() const noexcept { return num_classes_; }

    const std::vector<ad::Tensor<T>>& parameters() const noexcept { return params_; }
    const std::vector<ad::Tensor<T>>& aux_parameters() const noexcept { return aux_; }
    // Throws frozen_violation once frozen.
    std::vector<ad::Tensor<T>> mutable_parameters() const;
    // Raw bytes of the projection parameters, for stability checks.
    std::vector<std::uint8_t> parameter_bytes() const;

    template <class U>
    Projector<U> cast() const {
        std::vector<ad::Tensor<U>> p, a;
        for (const auto& t : params_) p.push_back(ad::cast_leaf<U>(t));
        for (const auto& t : aux_) a.push_back(ad::cast_leaf<U>(t));
        return Projector<U>::restore(latent_dim_, hidden_, num_classes_, std::move(p), std::move(a), frozen_,
                                     sigma_ref_);
    }

private:
    std::size_t latent_dim_ = 0;
    std::size_t hidden_ = 0;
    std::size_t num_classes_ = 0;
    std::vector<ad::Tensor<T>> params_;  // W1, b1, W2, b2
    std::vector<ad::Tensor<T>> aux_;     // Wa, ba; cleared on freeze
    bool frozen_ = false;
    std::optional<double> sigma_ref_;
};

extern template class Projector<float>;
extern template class Projector<double>;

}  // namespace hill::projection
