#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hill/data/dataset.hpp"
#include "hill/diffcore/optimizer.hpp"
#include "hill/guidance/losses.hpp"
#include "hill/models/backbone.hpp"
#include "hill/strategies/strategy.hpp"

namespace hill::trainer {

enum class Mode { interactive, scripted, baseline };

std::string to_string(Mode mode);
Mode parse_mode(const std::string& name);

struct SessionConfig {
    std::shared_ptr<const data::Dataset> dataset;
    std::string dataset_spec;  // how the dataset was produced, for replay
    models::BackboneSpec backbone;
    ad::OptimizerConfig optimizer;
    guidance::GuidanceConfig guidance;
    std::size_t batch_size = 32;
    int total_epochs = 45;
    int pretrain_epochs = 25;
    std::vector<int> intervention_epochs;
    std::uint64_t seed = 0;
    std::size_t snapshot_size = 0;  // 0: min(1000, validation size)
    Mode mode = Mode::baseline;
    std::optional<strategies::Strategy> strategy;  // scripted mode
    std::size_t projector_hidden = 32;
    double projector_learning_rate = 1e-2;

    // Throws invalid_argument with the field name first.
    void validate() const;
    std::size_t effective_snapshot_size() const;
    // Compact JSON echo of everything needed to replay the run.
    std::string echo_json() const;
};

}  // namespace hill::trainer
