#include "hill/trainer/config.hpp"

#include <algorithm>

#include "../json_io.hpp"
#include "hill/error.hpp"

namespace hill::trainer {

std::string to_string(Mode mode) {
    switch (mode) {
        case Mode::interactive: return "interactive";
        case Mode::scripted: return "scripted";
        case Mode::baseline: return "baseline";
    }
    return "?";
}

Mode parse_mode(const std::string& name) {
    if (name == "interactive") return Mode::interactive;
    if (name == "scripted") return Mode::scripted;
    if (name == "baseline") return Mode::baseline;
    throw Error(ErrorCode::invalid_argument, "mode: unknown '" + name + "'");
}

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorCode::invalid_argument, what);
}

}  // namespace

void SessionConfig::validate() const {
    require(dataset != nullptr, "dataset: missing");
    dataset->validate();
    require(!dataset->train.empty(), "dataset: empty train split");
    require(!dataset->val.empty(), "dataset: empty validation split");
    std::vector<char> seen(dataset->num_classes(), 0);
    for (auto i : dataset->val) seen[static_cast<std::size_t>(dataset->labels[i])] = 1;
    require(std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; }),
            "dataset: every class must appear in the validation split");

    backbone.validate();
    require(backbone.num_classes == dataset->num_classes(), "backbone.num_classes: does not match the dataset");
    require(ad::numel(backbone.input_shape) == dataset->feature_count(), "backbone.input_shape: does not match the dataset");
    optimizer.validate();
    guidance.validate();
    require(batch_size >= 1, "batch_size: must be >= 1");
    require(total_epochs >= 1, "epochs: must be >= 1");
    require(pretrain_epochs >= 1 && pretrain_epochs <= total_epochs, "pretrain: must be in [1, epochs]");
    for (std::size_t i = 0; i < intervention_epochs.size(); ++i) {
        const int e = intervention_epochs[i];
        require(e >= pretrain_epochs && e < total_epochs,
                "interventions: epoch " + std::to_string(e) + " outside [pretrain, epochs)");
        require(i == 0 || intervention_epochs[i - 1] < e, "interventions: epochs must be strictly increasing");
    }
    require(effective_snapshot_size() >= dataset->num_classes(), "snapshot_size: must be >= number of classes");
    require(snapshot_size <= dataset->val.size(), "snapshot_size: larger than the validation split");
    require(projector_hidden >= 2, "projector_hidden: must be >= 2");
    require(projector_learning_rate > 0.0, "projector_learning_rate: must be > 0");
    if (mode == Mode::scripted) {
        require(strategy.has_value(), "strategy: scripted mode needs a strategy");
        strategy->validate();
    }
}

std::size_t SessionConfig::effective_snapshot_size() const {
    if (snapshot_size > 0) return snapshot_size;
    return dataset ? std::min<std::size_t>(1000, dataset->val.size()) : 0;
}

std::string SessionConfig::echo_json() const {
    using detail::json;
    json j;
    j["dataset"] = {{"spec", dataset_spec},
                    {"name", dataset ? dataset->name : ""},
                    {"samples", dataset ? dataset->size() : 0},
                    {"classes", dataset ? dataset->num_classes() : 0},
                    {"train", dataset ? dataset->train.size() : 0},
                    {"val", dataset ? dataset->val.size() : 0}};
    j["backbone"] = detail::spec_to_json(backbone);
    j["optimizer"] = detail::optimizer_to_json(optimizer);
    j["guidance"] = {{"alpha", guidance.alpha},
                     {"lambda", guidance.lambda},
                     {"w_center", guidance.weights.center},
                     {"w_spread", guidance.weights.spread},
                     {"w_sep", guidance.weights.separation}};
    j["batch_size"] = batch_size;
    j["epochs"] = total_epochs;
    j["pretrain"] = pretrain_epochs;
    j["interventions"] = intervention_epochs;
    j["seed"] = seed;
    j["snapshot_size"] = effective_snapshot_size();
    j["mode"] = to_string(mode);
    j["strategy"] = strategy ? strategies::to_string(*strategy) : "";
    j["projector_hidden"] = projector_hidden;
    j["projector_learning_rate"] = projector_learning_rate;
    return j.dump();
}

}  // namespace hill::trainer
