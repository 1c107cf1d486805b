#pragma once

// Internal JSON helpers shared by the checkpoint, log and config code.

#include <json.hpp>

#include "hill/diffcore/optimizer.hpp"
#include "hill/error.hpp"
#include "hill/models/backbone.hpp"

namespace hill::detail {

using nlohmann::json;

inline json spec_to_json(const models::BackboneSpec& s) {
    return json{{"kind", models::to_string(s.kind)},
                {"input_shape", s.input_shape},
                {"conv_channels", s.conv_channels},
                {"kernel_size", s.kernel_size},
                {"pool_window", s.pool_window},
                {"hidden_widths", s.hidden_widths},
                {"activation", models::to_string(s.activation)},
                {"dropout_rate", s.dropout_rate},
                {"latent_tap", s.latent_tap},
                {"num_classes", s.num_classes}};
}

inline models::BackboneSpec spec_from_json(const json& j) {
    models::BackboneSpec s;
    s.kind = models::parse_backbone_kind(j.at("kind").get<std::string>());
    s.input_shape = j.at("input_shape").get<std::vector<std::size_t>>();
    s.conv_channels = j.at("conv_channels").get<std::vector<std::size_t>>();
    s.kernel_size = j.at("kernel_size").get<std::size_t>();
    s.pool_window = j.at("pool_window").get<std::size_t>();
    s.hidden_widths = j.at("hidden_widths").get<std::vector<std::size_t>>();
    s.activation = models::parse_activation(j.at("activation").get<std::string>());
    s.dropout_rate = j.at("dropout_rate").get<double>();
    s.latent_tap = j.at("latent_tap").get<std::size_t>();
    s.num_classes = j.at("num_classes").get<std::size_t>();
    s.validate();
    return s;
}

inline json optimizer_to_json(const ad::OptimizerConfig& c) {
    return json{{"kind", ad::to_string(c.kind)}, {"learning_rate", c.learning_rate}, {"momentum", c.momentum},
                {"beta1", c.beta1},             {"beta2", c.beta2},                 {"epsilon", c.epsilon}};
}

inline ad::OptimizerConfig optimizer_from_json(const json& j) {
    ad::OptimizerConfig c;
    c.kind = ad::parse_optimizer_kind(j.at("kind").get<std::string>());
    c.learning_rate = j.at("learning_rate").get<double>();
    c.momentum = j.at("momentum").get<double>();
    c.beta1 = j.at("beta1").get<double>();
    c.beta2 = j.at("beta2").get<double>();
    c.epsilon = j.at("epsilon").get<double>();
    c.validate();
    return c;
}

}  // namespace hill::detail
