#include "hill/diffcore/gradient_check.hpp"

#include <algorithm>
#include <cmath>

#include "hill/diffcore/backward.hpp"
#include "hill/error.hpp"
#include "hill/util/rng.hpp"

namespace hill::ad {

namespace {

template <class T>
double evaluate(const std::function<Tensor<T>()>& build_loss) {
    const double v = static_cast<double>(build_loss().item());
    if (!std::isfinite(v)) throw Error(ErrorCode::non_finite, "loss became non-finite during perturbation");
    return v;
}

}  // namespace

template <class T>
GradientCheckReport gradient_check(const std::function<Tensor<T>()>& build_loss, std::span<const Tensor<T>> params,
                                   const GradientCheckOptions& options) {
    if (!(options.epsilon > 0.0)) throw Error(ErrorCode::invalid_argument, "epsilon must be positive");
    const Tensor<T> loss = build_loss();
    const Gradients<T> grads = backward(loss);

    GradientCheckReport report;
    Rng rng(options.seed);
    for (const auto& p : params) {
        const std::vector<T> analytic = grads.of(p);
        std::vector<std::size_t> coords(p.size());
        for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
        if (options.samples_per_parameter > 0 && options.samples_per_parameter < coords.size()) {
            rng.shuffle(coords);
            coords.resize(options.samples_per_parameter);
            std::sort(coords.begin(), coords.end());
        }
        auto values = p.mutable_data();
        for (auto i : coords) {
            const T original = values[i];
            values[i] = static_cast<T>(double(original) + options.epsilon);
            const double plus = evaluate(build_loss);
            values[i] = static_cast<T>(double(original) - options.epsilon);
            const double minus = evaluate(build_loss);
            values[i] = original;
            const double numeric = (plus - minus) / (2.0 * options.epsilon);
            const double a = analytic[i];
            const double rel = std::fabs(a - numeric) / std::max(1e-8, std::fabs(a) + std::fabs(numeric));
            report.max_relative_error = std::max(report.max_relative_error, rel);
            ++report.coordinates_checked;
        }
    }
    return report;
}

template GradientCheckReport gradient_check(const std::function<Tensor<float>()>&, std::span<const Tensor<float>>,
                                            const GradientCheckOptions&);
template GradientCheckReport gradient_check(const std::function<Tensor<double>()>&, std::span<const Tensor<double>>,
                                            const GradientCheckOptions&);

}  // namespace hill::ad
