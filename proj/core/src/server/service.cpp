#include "hill/server/service.hpp"

#include <chrono>

#include "../json_io.hpp"

namespace hill::server {

using detail::json;

std::string handle_json(const SessionHandle& h) {
    json config = h.config_echo.empty() ? json::object() : json::parse(h.config_echo);
    return json{{"session_id", h.session_id},
                {"config", std::move(config)},
                {"state", json::parse(state_body(h.state))},
                {"created_at_ms", h.created_at_ms}}
        .dump();
}

Service::Service(ServiceOptions options) : options_(std::move(options)) {}

Service::~Service() { shutdown(); }

SessionHandle Service::handle_of(const SessionActor& actor, std::int64_t created_at) const {
    return {actor.id(), actor.config_echo(), actor.state(), created_at};
}

SessionHandle Service::create_session(const trainer::ExperimentOptions& options) {
    auto config = trainer::make_session_config(options);
    std::string id;
    {
        std::lock_guard lock(mutex_);
        if (shut_down_) throw Error(ErrorCode::wrong_state, "service is shutting down");
        if (sessions_.size() >= options_.max_sessions) {
            throw Error(ErrorCode::invalid_argument, "session limit reached");
        }
        id = "s" + std::to_string(next_id_++);
    }
    ActorOptions actor_options;
    if (!options_.out_dir.empty()) actor_options.out_dir = options_.out_dir / id;
    auto actor = std::make_shared<SessionActor>(id, std::move(config), std::move(actor_options));
    const auto now = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::system_clock::now().time_since_epoch())
                         .count();
    std::lock_guard lock(mutex_);
    sessions_[id] = {actor, now};
    return handle_of(*actor, now);
}

SessionHandle Service::create_session(std::string_view options_json) {
    return create_session(trainer::parse_options_json(options_json));
}

std::vector<SessionHandle> Service::list() const {
    std::lock_guard lock(mutex_);
    std::vector<SessionHandle> out;
    for (const auto& [id, e] : sessions_) out.push_back(handle_of(*e.actor, e.created_at_ms));
    return out;
}

SessionHandle Service::get(const std::string& session_id) const {
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(session_id);
    if (it == sessions_.end()) throw Error(ErrorCode::not_found, "unknown session '" + session_id + "'");
    return handle_of(*it->second.actor, it->second.created_at_ms);
}

std::shared_ptr<SessionActor> Service::find(const std::string& session_id) const {
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(session_id);
    if (it == sessions_.end()) throw Error(ErrorCode::not_found, "unknown session '" + session_id + "'");
    return it->second.actor;
}

std::string Service::post_message(const std::string& session_id, std::string_view text) {
    auto actor = find(session_id);
    return actor->handle(parse_client_message(text));
}

void Service::shutdown() {
    std::map<std::string, Entry> sessions;
    {
        std::lock_guard lock(mutex_);
        shut_down_ = true;
        sessions = sessions_;
    }
    for (auto& [id, e] : sessions) e.actor->stop();
}

}  // namespace hill::server
