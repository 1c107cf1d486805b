#pragma once

#include <optional>
#include <span>

#include "hill/diffcore/tensor.hpp"
#include "hill/guidance/layout.hpp"
#include "hill/types.hpp"

namespace hill::guidance {

struct TermWeights {
    double center = 1.0;
    double spread = 1.0;
    double separation = 1.0;
};

struct GuidanceConfig {
    double alpha = 0.5;
    double lambda = 0.1;
    TermWeights weights;
    std::optional<double> sigma_ref;

    void validate() const;
};

template <class T>
struct HumanLoss {
    ad::Tensor<T> total;
    ad::Tensor<T> center;
    ad::Tensor<T> spread;
    ad::Tensor<T> separation;
};

// Over batch classes C_B that the layout covers (C_B'' = those with >= 2 points):
//   center     = mean_{c in C_B}   ||mu_c - t_c||^2
//   spread     = mean_{c in C_B''} (r_c - rho_c)^2
//   separation = mean_{i<j in C_B} (||mu_i - mu_j|| - delta_ij)^2
// total = w_center*center + w_spread*spread + w_sep*separation.
template <class T>
HumanLoss<T> human_loss(const ad::Tensor<T>& points, std::span<const int> labels, const TargetLayout* layout,
                        const TermWeights& weights = {});

template <class T>
struct ScaleTerms {
    ad::Tensor<T> scale_model;  // pooled population std / sigma_ref
    ad::Tensor<T> penalty;      // lambda * |1 - scale_model|
};

template <class T>
ScaleTerms<T> scale_penalty(const ad::Tensor<T>& points, double sigma_ref, double lambda);

template <class T>
struct GlobalLoss {
    ad::Tensor<T> loss;
    LossBreakdown breakdown;
};

// Without a layout the loss is exactly the cross-entropy node. With one:
// alpha * L_CE + (1 - alpha) * L_human + lambda * |1 - scale_model|.
// `points` may be empty when no layout is active.
template <class T>
GlobalLoss<T> global_loss(const ad::Tensor<T>& logits, std::span<const int> labels, const ad::Tensor<T>& points,
                          const TargetLayout* layout, const GuidanceConfig& config);

}  // namespace hill::guidance
