#include "hill/models/backbone.hpp"

#include <cmath>

#include "hill/diffcore/ops.hpp"
#include "hill/error.hpp"
#include "hill/util/rng.hpp"

namespace hill::models {

std::string to_string(BackboneKind kind) { return kind == BackboneKind::mlp ? "mlp" : "conv1d"; }
std::string to_string(Activation act) { return act == Activation::relu ? "relu" : "tanh"; }

BackboneKind parse_backbone_kind(const std::string& name) {
    if (name == "mlp") return BackboneKind::mlp;
    if (name == "conv1d") return BackboneKind::conv1d;
    throw Error(ErrorCode::invalid_argument, "model: unknown backbone kind '" + name + "'");
}

Activation parse_activation(const std::string& name) {
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    throw Error(ErrorCode::invalid_argument, "activation: unknown '" + name + "'");
}

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorCode::invalid_argument, what);
}

std::size_t conv_output_length(const BackboneSpec& s) {
    std::size_t len = s.input_shape[1];
    for (std::size_t i = 0; i < s.conv_channels.size(); ++i) {
        if (len < s.kernel_size) return 0;
        len = len - s.kernel_size + 1;
    }
    return len;
}

std::size_t pooled_length(const BackboneSpec& s) {
    const std::size_t len = conv_output_length(s);
    return s.pool_window == 0 ? 1 : len / s.pool_window;
}

}  // namespace

void BackboneSpec::validate() const {
    require(num_classes >= 2, "num_classes: must be >= 2");
    require(dropout_rate >= 0.0 && dropout_rate < 1.0, "dropout_rate: must be in [0,1)");
    for (auto w : hidden_widths) require(w > 0, "hidden_widths: zero width");
    if (kind == BackboneKind::mlp) {
        require(input_shape.size() == 1 && input_shape[0] > 0, "input_shape: mlp expects {features}");
        require(conv_channels.empty(), "conv_channels: not allowed for mlp");
        require(latent_tap >= 1 && latent_tap <= hidden_widths.size(),
                "latent_tap: must index a hidden layer (1.." + std::to_string(hidden_widths.size()) + ")");
        return;
    }
    require(input_shape.size() == 2 && input_shape[0] > 0 && input_shape[1] > 0,
            "input_shape: conv1d expects {channels, length}");
    require(!conv_channels.empty(), "conv_channels: conv1d needs at least one layer");
    for (auto c : conv_channels) require(c > 0, "conv_channels: zero width");
    require(kernel_size >= 1, "kernel_size: must be >= 1");
    const std::size_t len = conv_output_length(*this);
    require(len >= 1, "kernel_size: input too short for the conv stack");
    require(pool_window <= len, "pool_window: larger than conv output length");
    require(pooled_length(*this) >= 1, "pool_window: pools away every position");
    require(latent_tap >= conv_channels.size() && latent_tap <= layer_count(),
            "latent_tap: must be at the pooled conv output or a dense layer");
}

std::size_t BackboneSpec::latent_dim() const {
    validate();
    const std::size_t n_conv = conv_channels.size();
    if (kind == BackboneKind::conv1d && latent_tap == n_conv) return conv_channels.back() * pooled_length(*this);
    return hidden_widths[latent_tap - n_conv - 1];
}

BackboneSpec BackboneSpec::mlp(std::vector<std::size_t> widths, std::size_t tap, std::size_t num_classes,
                               Activation act) {
    require(widths.size() >= 2, "widths: need input and at least one hidden width");
    BackboneSpec s;
    s.kind = BackboneKind::mlp;
    s.input_shape = {widths[0]};
    s.hidden_widths.assign(widths.begin() + 1, widths.end());
    s.latent_tap = tap;
    s.num_classes = num_classes;
    s.activation = act;
    s.validate();
    return s;
}

BackboneSpec BackboneSpec::conv(std::size_t in_channels, std::size_t length, std::vector<std::size_t> channels,
                                std::size_t num_classes, std::size_t kernel, std::size_t pool_window) {
    BackboneSpec s;
    s.kind = BackboneKind::conv1d;
    s.input_shape = {in_channels, length};
    s.conv_channels = std::move(channels);
    s.kernel_size = kernel;
    s.pool_window = pool_window;
    s.latent_tap = s.conv_channels.size();
    s.num_classes = num_classes;
    s.validate();
    return s;
}

template <class T>
Backbone<T>::Backbone(BackboneSpec spec, std::vector<NamedParameter<T>> params, std::uint64_t seed)
    : spec_(std::move(spec)), params_(std::move(params)), seed_(seed) {}

template <class T>
Backbone<T> Backbone<T>::build(const BackboneSpec& spec, std::uint64_t seed) {
    spec.validate();
    std::vector<NamedParameter<T>> params;
    auto add = [&](std::string name, ad::Shape shape, std::size_t fan_in) {
        Rng rng(derive_seed(seed, 0xBAC4B0, params.size()));
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::vector<T> values(ad::numel(shape));
        for (auto& v : values) v = static_cast<T>(rng.uniform(-bound, bound));
        params.push_back({std::move(name), ad::Tensor<T>::parameter(std::move(shape), std::move(values))});
    };

    std::size_t width = 0;
    if (spec.kind == BackboneKind::conv1d) {
        std::size_t channels = spec.input_shape[0];
        for (std::size_t i = 0; i < spec.conv_channels.size(); ++i) {
            const std::size_t out = spec.conv_channels[i];
            const std::string prefix = "conv" + std::to_string(i + 1);
            add(prefix + ".weight", {out, channels, spec.kernel_size}, channels * spec.kernel_size);
            add(prefix + ".bias", {out}, channels * spec.kernel_size);
            channels = out;
        }
        width = channels * pooled_length(spec);
    } else {
        width = spec.input_shape[0];
    }
    for (std::size_t i = 0; i < spec.hidden_widths.size(); ++i) {
        const std::size_t out = spec.hidden_widths[i];
        const std::string prefix = "dense" + std::to_string(i + 1);
        add(prefix + ".weight", {width, out}, width);
        add(prefix + ".bias", {out}, width);
        width = out;
    }
    add("head.weight", {width, spec.num_classes}, width);
    add("head.bias", {spec.num_classes}, width);
    return Backbone(spec, std::move(params), seed);
}

template <class T>
std::vector<ad::Tensor<T>> Backbone<T>::parameters() const {
    std::vector<ad::Tensor<T>> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p.value);
    return out;
}

namespace {

template <class T>
ad::Tensor<T> activate(const ad::Tensor<T>& x, Activation act) {
    return act == Activation::relu ? ad::relu(x) : ad::tanh(x);
}

template <class T>
ad::Tensor<T> dropout(const ad::Tensor<T>& x, double rate, std::uint64_t seed, std::size_t layer) {
    Rng rng(derive_seed(seed, 0xD50F, layer));
    const double keep = 1.0 - rate;
    std::vector<T> mask(x.size());
    for (auto& m : mask) m = rng.uniform() < keep ? static_cast<T>(1.0 / keep) : T{0};
    return ad::mul(x, ad::Tensor<T>::input(x.shape(), std::move(mask)));
}

}  // namespace

template <class T>
TapOutput<T> Backbone<T>::forward_with_tap(const ad::Tensor<T>& inputs, bool train_mode,
                                           std::uint64_t dropout_seed) const {
    const std::size_t features = ad::numel(spec_.input_shape);
    if (inputs.shape().size() != 2 || inputs.dim(1) != features) {
        throw Error(ErrorCode::shape_mismatch, "backbone expects [B," + std::to_string(features) + "], got " +
                                                   ad::to_string(inputs.shape()));
    }
    const std::size_t batch = inputs.dim(0);
    const bool drop = train_mode && spec_.dropout_rate > 0.0;
    TapOutput<T> out;
    ad::Tensor<T> h = inputs;
    std::size_t layer = 0;
    std::size_t p = 0;

    if (spec_.kind == BackboneKind::conv1d) {
        h = ad::reshape(h, {batch, spec_.input_shape[0], spec_.input_shape[1]});
        for (std::size_t i = 0; i < spec_.conv_channels.size(); ++i) {
            h = activate(ad::conv1d(h, param(p), param(p + 1)), spec_.activation);
            p += 2;
            ++layer;
            if (layer < spec_.conv_channels.size() && drop) h = dropout(h, spec_.dropout_rate, dropout_seed, layer);
        }
        const std::size_t window = spec_.pool_window == 0 ? h.shape().back() : spec_.pool_window;
        h = ad::max_pool1d(h, window);
        h = ad::reshape(h, {batch, h.size() / batch});
        if (layer == spec_.latent_tap) out.latent = h;
        if (drop) h = dropout(h, spec_.dropout_rate, dropout_seed, layer);
    }
    for (std::size_t i = 0; i < spec_.hidden_widths.size(); ++i) {
        h = activate(ad::add(ad::matmul(h, param(p)), param(p + 1)), spec_.activation);
        p += 2;
        ++layer;
        if (layer == spec_.latent_tap) out.latent = h;
        if (drop) h = dropout(h, spec_.dropout_rate, dropout_seed, layer);
    }
    out.logits = ad::add(ad::matmul(h, param(p)), param(p + 1));
    return out;
}

template class Backbone<float>;
template class Backbone<double>;

}  // namespace hill::models
