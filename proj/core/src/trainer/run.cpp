#include "hill/trainer/run.hpp"

#include "hill/error.hpp"

namespace hill::trainer {

EditSource strategy_source(strategies::Strategy strategy) {
    strategy.validate();
    const std::string source = "strategy:" + strategies::to_string(strategy);
    return [strategy = std::move(strategy), source](const LatentSnapshot& snapshot) {
        return EditDecision::commit_edits(strategies::apply(strategy, snapshot), source);
    };
}

EditSource skip_source() {
    return [](const LatentSnapshot&) { return EditDecision::skip(); };
}

void drive(Session& session, const EditSource& source, const std::function<void(const LatentSnapshot&)>& on_pause) {
    if (session.state().phase == Phase::idle) session.control(Command::resume());
    for (;;) {
        switch (session.state().phase) {
            case Phase::training:
                session.train_epoch();
                break;
            case Phase::paused_awaiting_edit: {
                const auto snapshot = session.latest_snapshot();
                if (on_pause) on_pause(*snapshot);
                auto decision = source ? source(*snapshot) : EditDecision::skip();
                if (decision.commit) {
                    session.commit(decision.edits, std::move(decision.source));
                } else {
                    session.control(Command::skip_intervention());
                }
                break;
            }
            case Phase::finished:
            case Phase::failed:
                return;
            case Phase::idle:
                throw Error(ErrorCode::wrong_state, "session returned to idle");
        }
    }
}

ExperimentLog run(const SessionConfig& config, const EditSource& source) {
    Session session(config);
    drive(session, source);
    return session.log();
}

ExperimentLog run(const SessionConfig& config) {
    if (config.mode == Mode::scripted) {
        if (!config.strategy) throw Error(ErrorCode::invalid_argument, "strategy: scripted mode needs a strategy");
        return run(config, strategy_source(*config.strategy));
    }
    return run(config, skip_source());
}

}  // namespace hill::trainer
