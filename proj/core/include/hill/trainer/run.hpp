#pragma once

#include <functional>
#include <string>

#include "hill/strategies/strategy.hpp"
#include "hill/trainer/session.hpp"

namespace hill::trainer {

struct EditDecision {
    bool commit = false;
    EditedPositions edits;
    std::string source;

    static EditDecision skip() { return {}; }
    static EditDecision commit_edits(EditedPositions edits, std::string source) {
        return {true, std::move(edits), std::move(source)};
    }
};

// Consulted at every pause.
using EditSource = std::function<EditDecision(const LatentSnapshot&)>;

EditSource strategy_source(strategies::Strategy strategy);
EditSource skip_source();

// Drives `session` from idle to finished or failed. `on_pause` sees each
// snapshot before the edit source does.
void drive(Session& session, const EditSource& source,
           const std::function<void(const LatentSnapshot&)>& on_pause = {});

// Runs a full session. Scripted mode uses config.strategy, baseline skips.
ExperimentLog run(const SessionConfig& config, const EditSource& source);
ExperimentLog run(const SessionConfig& config);

}  // namespace hill::trainer
