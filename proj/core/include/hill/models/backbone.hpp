#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hill/diffcore/tensor.hpp"

namespace hill::models {

enum class BackboneKind { mlp, conv1d };
enum class Activation { relu, tanh };

std::string to_string(BackboneKind kind);
std::string to_string(Activation act);
BackboneKind parse_backbone_kind(const std::string& name);
Activation parse_activation(const std::string& name);

// Layer indexing: 0 is the input, conv layers (conv1d only) are 1..n_conv, and
// hidden dense layers follow. The classification head comes after the last
// hidden layer. For conv1d the conv stack ends in a max pool and is flattened,
// so the tap can sit at the pooled output (index n_conv) or any dense layer.
struct BackboneSpec {
    BackboneKind kind = BackboneKind::mlp;
    ad::Shape input_shape;                  // mlp: {features}; conv1d: {channels, length}
    std::vector<std::size_t> conv_channels;  // conv1d only
    std::size_t kernel_size = 3;
    std::size_t pool_window = 0;            // 0 = global max pool
    std::vector<std::size_t> hidden_widths;
    Activation activation = Activation::relu;
    double dropout_rate = 0.0;
    std::size_t latent_tap = 0;
    std::size_t num_classes = 2;

    std::size_t layer_count() const noexcept { return conv_channels.size() + hidden_widths.size(); }
    std::size_t latent_dim() const;
    // Throws invalid_argument naming the offending field.
    void validate() const;

    // widths = {input, hidden...}; the tap indexes into widths.
    static BackboneSpec mlp(std::vector<std::size_t> widths, std::size_t tap, std::size_t num_classes,
                            Activation act = Activation::relu);
    // Desk default for sequences: conv stack + global max pool (tap) + linear head.
    static BackboneSpec conv(std::size_t in_channels, std::size_t length, std::vector<std::size_t> channels,
                             std::size_t num_classes, std::size_t kernel = 3, std::size_t pool_window = 0);
};

template <class T>
struct NamedParameter {
    std::string name;
    ad::Tensor<T> value;
};

template <class T>
struct TapOutput {
    ad::Tensor<T> latent;  // [B, D]
    ad::Tensor<T> logits;  // [B, C]
};

template <class T>
class Backbone {
public:
    Backbone() = default;
    Backbone(BackboneSpec spec, std::vector<NamedParameter<T>> params, std::uint64_t seed);

    // Uniform fan-in initialization; identical seeds give identical bits.
    static Backbone build(const BackboneSpec& spec, std::uint64_t seed);

    // `inputs` is [B, features]. Inverted dropout runs only in train mode and is
    // a pure function of dropout_seed.
    TapOutput<T> forward_with_tap(const ad::Tensor<T>& inputs, bool train_mode, std::uint64_t dropout_seed) const;

    const BackboneSpec& spec() const noexcept { return spec_; }
    std::uint64_t seed() const noexcept { return seed_; }
    const std::vector<NamedParameter<T>>& named_parameters() const noexcept { return params_; }
    std::vector<ad::Tensor<T>> parameters() const;

    // Deep copy in another precision (for gradient checking in double).
    template <class U>
    Backbone<U> cast() const {
        std::vector<NamedParameter<U>> out;
        for (const auto& p : params_) out.push_back({p.name, ad::cast_leaf<U>(p.value)});
        return Backbone<U>(spec_, std::move(out), seed_);
    }

private:
    const ad::Tensor<T>& param(std::size_t i) const { return params_[i].value; }

    BackboneSpec spec_;
    std::vector<NamedParameter<T>> params_;
    std::uint64_t seed_ = 0;
};

extern template class Backbone<float>;
extern template class Backbone<double>;

}  // namespace hill::models
