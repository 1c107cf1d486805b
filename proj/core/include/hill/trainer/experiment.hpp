#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "hill/data/dataset.hpp"
#include "hill/trainer/config.hpp"

namespace hill::trainer {

// User-facing knobs shared by the CLI and the server's session-create endpoint.
struct ExperimentOptions {
    std::string dataset = "blobs-hard";  // blobs-hard | rings | csv:PATH | idx:INPUTS,LABELS
    std::string model = "mlp";           // mlp | conv1d
    int epochs = 45;
    int pretrain = 25;
    std::string interventions;  // plan syntax; empty = no interventions
    std::optional<Mode> mode;   // default: scripted with interventions, else baseline
    double alpha = 0.5;
    double lambda = 0.1;
    std::uint64_t seed = 0;
    std::size_t batch_size = 32;
    double learning_rate = 1e-3;
    std::string optimizer = "adam";
    double dropout = 0.0;
    std::size_t snapshot_size = 0;
};

// Resolves the dataset spec. Loaded tables are split 80/20 by seed.
std::shared_ptr<const data::Dataset> resolve_dataset(const std::string& spec, std::uint64_t seed);

SessionConfig make_session_config(const ExperimentOptions& options);

// JSON object <-> options. Unknown keys are rejected with the key name.
ExperimentOptions parse_options_json(std::string_view json_text);
std::string to_json(const ExperimentOptions& options);

}  // namespace hill::trainer
