#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>

#include "hill/diffcore/tensor.hpp"

namespace hill::ad {

struct GradientCheckOptions {
    double epsilon = 1e-3;
    // Coordinates sampled per parameter; 0 checks every coordinate.
    std::size_t samples_per_parameter = 0;
    std::uint64_t seed = 0;
};

struct GradientCheckReport {
    double max_relative_error = 0.0;
    std::size_t coordinates_checked = 0;
};

// Compares reverse-mode gradients with central differences. Relative error is
// |ga - gn| / max(1e-8, |ga| + |gn|). `build_loss` must rebuild the scalar loss
// from the current parameter values each call.
template <class T>
GradientCheckReport gradient_check(const std::function<Tensor<T>()>& build_loss,
                                   std::span<const Tensor<T>> params,
                                   const GradientCheckOptions& options = {});

}  // namespace hill::ad
