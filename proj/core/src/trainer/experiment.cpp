#include "hill/trainer/experiment.hpp"

#include <array>

#include "../json_io.hpp"
#include "hill/error.hpp"
#include "hill/strategies/strategy.hpp"

namespace hill::trainer {

using detail::json;

namespace {

constexpr std::array<double, 2> kLoadedSplit{0.8, 0.2};

std::shared_ptr<const data::Dataset> finish(data::Dataset ds, std::uint64_t seed) {
    return std::make_shared<const data::Dataset>(data::split(std::move(ds), kLoadedSplit, seed));
}

}  // namespace

std::shared_ptr<const data::Dataset> resolve_dataset(const std::string& spec, std::uint64_t seed) {
    if (spec == "blobs-hard") return std::make_shared<const data::Dataset>(data::blobs_hard(seed));
    if (spec == "rings") return finish(data::gen_rings(3, 200, 0.25, seed), seed);
    if (spec.rfind("csv:", 0) == 0) {
        return finish(data::load_table(spec.substr(4), data::TableFormat::csv), seed);
    }
    if (spec.rfind("idx:", 0) == 0) {
        const auto rest = spec.substr(4);
        const auto comma = rest.find(',');
        if (comma == std::string::npos) {
            throw Error(ErrorCode::invalid_argument, "dataset: idx needs idx:INPUTS,LABELS");
        }
        return finish(data::load_table(rest.substr(0, comma), data::TableFormat::idx, rest.substr(comma + 1)), seed);
    }
    throw Error(ErrorCode::invalid_argument, "dataset: unknown '" + spec + "'");
}

SessionConfig make_session_config(const ExperimentOptions& o) {
    SessionConfig cfg;
    cfg.dataset = resolve_dataset(o.dataset, o.seed);
    cfg.dataset_spec = o.dataset;
    const auto& ds = *cfg.dataset;
    const std::size_t classes = ds.num_classes();

    const auto kind = models::parse_backbone_kind(o.model);
    if (kind == models::BackboneKind::mlp) {
        cfg.backbone = models::BackboneSpec::mlp({ds.feature_count(), 128, 64}, 2, classes);
    } else {
        std::size_t channels = 1;
        std::size_t length = ds.feature_count();
        if (ds.input_shape.size() == 2) {
            channels = ds.input_shape[0];
            length = ds.input_shape[1];
        }
        cfg.backbone = models::BackboneSpec::conv(channels, length, {16, 16}, classes);
    }
    cfg.backbone.dropout_rate = o.dropout;

    cfg.optimizer.kind = ad::parse_optimizer_kind(o.optimizer);
    cfg.optimizer.learning_rate = o.learning_rate;
    cfg.guidance.alpha = o.alpha;
    cfg.guidance.lambda = o.lambda;
    cfg.batch_size = o.batch_size;
    cfg.total_epochs = o.epochs;
    cfg.pretrain_epochs = o.pretrain;
    cfg.seed = o.seed;
    cfg.snapshot_size = o.snapshot_size;
    if (!o.interventions.empty()) {
        auto plan = strategies::parse_plan(o.interventions);
        cfg.strategy = std::move(plan.strategy);
        cfg.intervention_epochs = std::move(plan.epochs);
    }
    cfg.mode = o.mode.value_or(o.interventions.empty() ? Mode::baseline : Mode::scripted);
    cfg.validate();
    return cfg;
}

namespace {

template <class V>
V field(const json& j, const char* key) {
    try {
        return j.get<V>();
    } catch (const json::exception&) {
        throw Error(ErrorCode::invalid_argument, std::string(key) + ": wrong type");
    }
}

}  // namespace

ExperimentOptions parse_options_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::parse_error, std::string("options: ") + e.what());
    }
    if (!j.is_object()) throw Error(ErrorCode::invalid_argument, "options: expected a JSON object");
    ExperimentOptions o;
    for (const auto& [key, value] : j.items()) {
        const char* k = key.c_str();
        if (key == "dataset") o.dataset = field<std::string>(value, k);
        else if (key == "model") o.model = field<std::string>(value, k);
        else if (key == "epochs") o.epochs = field<int>(value, k);
        else if (key == "pretrain") o.pretrain = field<int>(value, k);
        else if (key == "interventions") o.interventions = field<std::string>(value, k);
        else if (key == "mode") o.mode = parse_mode(field<std::string>(value, k));
        else if (key == "alpha") o.alpha = field<double>(value, k);
        else if (key == "lambda") o.lambda = field<double>(value, k);
        else if (key == "seed") o.seed = field<std::uint64_t>(value, k);
        else if (key == "batch_size") o.batch_size = field<std::size_t>(value, k);
        else if (key == "learning_rate") o.learning_rate = field<double>(value, k);
        else if (key == "optimizer") o.optimizer = field<std::string>(value, k);
        else if (key == "dropout") o.dropout = field<double>(value, k);
        else if (key == "snapshot_size") o.snapshot_size = field<std::size_t>(value, k);
        else throw Error(ErrorCode::invalid_argument, "options: unknown key '" + key + "'");
    }
    return o;
}

std::string to_json(const ExperimentOptions& o) {
    json j{{"dataset", o.dataset},
           {"model", o.model},
           {"epochs", o.epochs},
           {"pretrain", o.pretrain},
           {"interventions", o.interventions},
           {"alpha", o.alpha},
           {"lambda", o.lambda},
           {"seed", o.seed},
           {"batch_size", o.batch_size},
           {"learning_rate", o.learning_rate},
           {"optimizer", o.optimizer},
           {"dropout", o.dropout},
           {"snapshot_size", o.snapshot_size}};
    if (o.mode) j["mode"] = to_string(*o.mode);
    return j.dump();
}

}  // namespace hill::trainer
