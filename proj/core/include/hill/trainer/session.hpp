#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hill/data/dataset.hpp"
#include "hill/diffcore/optimizer.hpp"
#include "hill/guidance/layout.hpp"
#include "hill/models/backbone.hpp"
#include "hill/projection/projector.hpp"
#include "hill/trainer/config.hpp"
#include "hill/trainer/log.hpp"
#include "hill/types.hpp"

namespace hill::trainer {

enum class Phase { idle, training, paused_awaiting_edit, finished, failed };

std::string to_string(Phase phase);

struct SessionState {
    Phase phase = Phase::idle;
    int epoch = 0;  // epochs completed
    std::string reason;  // failure attribution
};

// Allowed phase changes: idle->training, training->paused|finished,
// paused->training, any->failed, plus self-loops.
bool is_legal_transition(Phase from, Phase to) noexcept;

struct Command {
    enum class Kind { pause, resume, skip_intervention, set_alpha, set_lambda, train_n };
    Kind kind = Kind::resume;
    double value = 0.0;

    static Command pause() { return {Kind::pause, 0.0}; }
    static Command resume() { return {Kind::resume, 0.0}; }
    static Command skip_intervention() { return {Kind::skip_intervention, 0.0}; }
    static Command set_alpha(double v) { return {Kind::set_alpha, v}; }
    static Command set_lambda(double v) { return {Kind::set_lambda, v}; }
    static Command train_n(int k) { return {Kind::train_n, static_cast<double>(k)}; }
};

std::string to_string(Command::Kind kind);
Command::Kind parse_command_kind(const std::string& name);

struct EvalResult {
    double accuracy = 0.0;
    double mean_ce = 0.0;
    std::size_t count = 0;
};

// One training run. Not thread-safe: a single worker owns it; snapshots it
// hands out are immutable and may be shared freely.
class Session {
public:
    // Called between batches; returning false abandons the epoch.
    using BatchHook = std::function<bool()>;

    explicit Session(SessionConfig config);

    const SessionConfig& config() const noexcept { return config_; }
    const SessionState& state() const noexcept { return state_; }

    // Applies a control command. Illegal commands throw illegal_transition and
    // invalid values throw invalid_argument; the state is unchanged either way.
    SessionState control(const Command& command);

    // Trains the next epoch (state must be training). Returns nullopt when the
    // hook abandoned it or the session failed.
    std::optional<EpochRecord> train_epoch(const BatchHook& hook = {});

    // Builds a layout from `edits` over the latest snapshot and resumes.
    std::uint64_t commit(const EditedPositions& edits, std::string source);

    EvalResult evaluate(data::Split split) const;

    std::shared_ptr<const LatentSnapshot> make_snapshot() const;
    std::shared_ptr<const LatentSnapshot> latest_snapshot() const noexcept { return latest_snapshot_; }

    const ExperimentLog& log() const noexcept { return log_; }
    const guidance::TargetLayout* active_layout() const noexcept {
        return layout_ ? &*layout_ : nullptr;
    }
    const models::Backbone<float>& backbone() const noexcept { return backbone_; }
    const projection::Projector<float>& projector() const noexcept { return projector_; }
    const ad::Optimizer<float>& optimizer() const noexcept { return optimizer_; }
    const std::vector<std::size_t>& snapshot_indices() const noexcept { return snapshot_indices_; }
    int epochs_completed() const noexcept { return state_.epoch; }
    double alpha() const noexcept { return guidance_.alpha; }
    double lambda() const noexcept { return guidance_.lambda; }

    // Marks the log as interrupted (server shutdown).
    void mark_interrupted();

private:
    void fail(std::string reason);
    void finish_summary();

    SessionConfig config_;
    SessionState state_;
    guidance::GuidanceConfig guidance_;
    models::Backbone<float> backbone_;
    projection::Projector<float> projector_;
    ad::Optimizer<float> optimizer_;
    ad::Optimizer<float> projector_optimizer_;
    std::optional<guidance::TargetLayout> layout_;
    std::uint64_t next_layout_id_ = 1;
    std::vector<std::size_t> snapshot_indices_;
    std::shared_ptr<const LatentSnapshot> latest_snapshot_;
    ExperimentLog log_;
    bool pause_requested_ = false;
    int epoch_budget_ = 0;  // >0 while a train_n is running
};

}  // namespace hill::trainer
