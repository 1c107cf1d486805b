#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "hill/server/session_actor.hpp"
#include "hill/trainer/experiment.hpp"

namespace hill::server {

struct SessionHandle {
    std::string session_id;
    std::string config_echo;
    trainer::SessionState state;
    std::int64_t created_at_ms = 0;  // unix epoch
};

std::string handle_json(const SessionHandle& handle);

struct ServiceOptions {
    std::filesystem::path out_dir;  // per-session subdirectories when set
    std::size_t max_sessions = 64;
};

// Session registry. Thread-safe.
class Service {
public:
    explicit Service(ServiceOptions options = {});
    ~Service();

    // Validates first; nothing is registered when the options are rejected.
    SessionHandle create_session(const trainer::ExperimentOptions& options);
    SessionHandle create_session(std::string_view options_json);

    std::vector<SessionHandle> list() const;
    SessionHandle get(const std::string& session_id) const;
    // Throws not_found.
    std::shared_ptr<SessionActor> find(const std::string& session_id) const;

    // Parses and dispatches a client message. Returns the JSON reply body.
    std::string post_message(const std::string& session_id, std::string_view text);

    void shutdown();

private:
    SessionHandle handle_of(const SessionActor& actor, std::int64_t created_at) const;

    ServiceOptions options_;
    mutable std::mutex mutex_;
    std::uint64_t next_id_ = 1;
    struct Entry {
        std::shared_ptr<SessionActor> actor;
        std::int64_t created_at_ms = 0;
    };
    std::map<std::string, Entry> sessions_;
    bool shut_down_ = false;
};

}  // namespace hill::server
