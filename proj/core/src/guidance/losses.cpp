#include "hill/guidance/losses.hpp"

#include <cmath>
#include <map>

#include "hill/diffcore/ops.hpp"
#include "hill/error.hpp"
#include "hill/projection/projector.hpp"

namespace hill::guidance {

void GuidanceConfig::validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorCode::invalid_argument, "alpha: must be in [0,1]");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error(ErrorCode::invalid_argument, "lambda: must be >= 0");
    if (!(weights.center >= 0.0 && weights.spread >= 0.0 && weights.separation >= 0.0)) {
        throw Error(ErrorCode::invalid_argument, "weights: must be >= 0");
    }
    if (sigma_ref && !(*sigma_ref > 0.0)) throw Error(ErrorCode::invalid_argument, "sigma_ref: must be > 0");
}

namespace {

template <class T>
ad::Tensor<T> constant(std::initializer_list<double> values) {
    std::vector<T> v;
    for (double x : values) v.push_back(static_cast<T>(x));
    const std::size_t n = v.size();
    return ad::Tensor<T>::input({n}, std::move(v));
}

template <class T>
ad::Tensor<T> mean_or_zero(const std::vector<ad::Tensor<T>>& terms) {
    if (terms.empty()) return ad::Tensor<T>::scalar(T{0});
    return ad::mean(ad::concat<T>(terms));
}

template <class T>
void check_points(const ad::Tensor<T>& points, std::size_t batch) {
    if (points.shape().size() != 2 || points.dim(1) != 2 || points.dim(0) != batch) {
        throw Error(ErrorCode::shape_mismatch, "expected points [" + std::to_string(batch) + ",2], got " +
                                                   ad::to_string(points.shape()));
    }
}

}  // namespace

template <class T>
HumanLoss<T> human_loss(const ad::Tensor<T>& points, std::span<const int> labels, const TargetLayout* layout,
                        const TermWeights& weights) {
    if (layout == nullptr) throw Error(ErrorCode::wrong_state, "human_loss: no active layout");
    check_points(points, labels.size());

    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (layout->target(labels[i]) != nullptr) groups[labels[i]].push_back(i);
    }
    if (groups.empty()) throw Error(ErrorCode::invalid_argument, "human_loss: no batch class has a target");

    std::vector<int> present;
    std::vector<ad::Tensor<T>> centers;
    std::vector<ad::Tensor<T>> center_terms;
    std::vector<ad::Tensor<T>> spread_terms;
    for (const auto& [label, rows] : groups) {
        const ClassTarget& target = *layout->target(label);
        const auto members = ad::gather_rows<T>(points, rows);
        const auto mu = ad::mean_rows(members);
        center_terms.push_back(ad::sum(ad::squared_difference(mu, constant<T>({target.center.x, target.center.y}))));
        if (rows.size() >= 2) {
            const auto r = ad::mean(ad::norm_last(ad::sub(members, mu)));
            spread_terms.push_back(ad::squared_difference(r, constant<T>({target.spread})));
        }
        present.push_back(label);
        centers.push_back(mu);
    }
    std::vector<ad::Tensor<T>> sep_terms;
    for (std::size_t i = 0; i < present.size(); ++i) {
        for (std::size_t j = i + 1; j < present.size(); ++j) {
            const auto d = ad::norm_last(ad::sub(centers[i], centers[j]));
            sep_terms.push_back(ad::squared_difference(d, constant<T>({layout->separation(present[i], present[j])})));
        }
    }

    HumanLoss<T> out;
    out.center = mean_or_zero(center_terms);
    out.spread = mean_or_zero(spread_terms);
    out.separation = mean_or_zero(sep_terms);
    out.total = ad::add(ad::add(ad::scale(out.center, weights.center), ad::scale(out.spread, weights.spread)),
                        ad::scale(out.separation, weights.separation));
    return out;
}

template <class T>
ScaleTerms<T> scale_penalty(const ad::Tensor<T>& points, double sigma_ref, double lambda) {
    if (!(sigma_ref > 0.0)) throw Error(ErrorCode::invalid_argument, "scale_penalty: sigma_ref must be > 0");
    if (points.shape().size() != 2 || points.dim(1) != 2) {
        throw Error(ErrorCode::shape_mismatch, "scale_penalty: expected [B,2], got " + ad::to_string(points.shape()));
    }
    if (points.dim(0) < 2) throw Error(ErrorCode::invalid_argument, "scale_penalty: needs at least 2 points");
    const auto flat = ad::reshape(points, {points.size(), 1});
    const auto centered = ad::sub(flat, ad::mean(flat));
    const auto std_dev = ad::sqrt(ad::mean(ad::mul(centered, centered)));
    ScaleTerms<T> out;
    out.scale_model = ad::scale(std_dev, 1.0 / sigma_ref);
    out.penalty = ad::scale(ad::abs(ad::add_scalar(out.scale_model, -1.0)), lambda);
    return out;
}

template <class T>
GlobalLoss<T> global_loss(const ad::Tensor<T>& logits, std::span<const int> labels, const ad::Tensor<T>& points,
                          const TargetLayout* layout, const GuidanceConfig& config) {
    config.validate();
    GlobalLoss<T> out;
    const auto ce = ad::softmax_cross_entropy(logits, labels);
    out.breakdown.l_ce = static_cast<double>(ce.item());
    if (layout == nullptr) {
        out.loss = ce;
        out.breakdown.l_global = out.breakdown.l_ce;
        if (points && config.sigma_ref) {
            out.breakdown.scale_model = projection::pooled_population_std(points.data()) / *config.sigma_ref;
        }
        return out;
    }
    if (!points) throw Error(ErrorCode::invalid_argument, "global_loss: points required with an active layout");
    if (!config.sigma_ref) throw Error(ErrorCode::wrong_state, "global_loss: sigma_ref unset (projector not frozen)");
    const auto human = human_loss(points, labels, layout, config.weights);
    const auto scale = scale_penalty(points, *config.sigma_ref, config.lambda);
    out.loss = ad::add(ad::add(ad::scale(ce, config.alpha), ad::scale(human.total, 1.0 - config.alpha)), scale.penalty);

    auto& b = out.breakdown;
    b.l_human = static_cast<double>(human.total.item());
    b.center_term = static_cast<double>(human.center.item());
    b.spread_term = static_cast<double>(human.spread.item());
    b.separation_term = static_cast<double>(human.separation.item());
    b.scale_model = static_cast<double>(scale.scale_model.item());
    b.scale_penalty = static_cast<double>(scale.penalty.item());
    b.l_global = static_cast<double>(out.loss.item());
    return out;
}

#define HILL_INSTANTIATE_GUIDANCE(T)                                                                        \
    template HumanLoss<T> human_loss(const ad::Tensor<T>&, std::span<const int>, const TargetLayout*,      \
                                     const TermWeights&);                                                  \
    template ScaleTerms<T> scale_penalty(const ad::Tensor<T>&, double, double);                            \
    template GlobalLoss<T> global_loss(const ad::Tensor<T>&, std::span<const int>, const ad::Tensor<T>&,   \
                                       const TargetLayout*, const GuidanceConfig&);

HILL_INSTANTIATE_GUIDANCE(float)
HILL_INSTANTIATE_GUIDANCE(double)

#undef HILL_INSTANTIATE_GUIDANCE

}  // namespace hill::guidance
