#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "hill/server/wire.hpp"
#include "hill/trainer/session.hpp"

namespace hill::server {

// One stream consumer. Messages arrive as complete JSON lines with a
// per-subscription gapless sequence number.
class Subscription {
public:
    explicit Subscription(std::string session_id) : session_id_(std::move(session_id)) {}

    // Waits up to `timeout`; nullopt on timeout or once closed and drained.
    std::optional<std::string> pop(std::chrono::milliseconds timeout);
    bool closed() const;
    void close();

    void push(ServerMessageType type, std::string_view body);

private:
    std::string session_id_;
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<std::string> queue_;
    std::uint64_t next_seq_ = 1;
    bool closed_ = false;
};

struct ActorOptions {
    std::filesystem::path out_dir;  // empty: nothing is written
};

// Owns a trainer session and its worker thread. Every public call is
// serialized onto the worker and takes effect at the next batch boundary.
class SessionActor {
public:
    SessionActor(std::string id, trainer::SessionConfig config, ActorOptions options = {});
    ~SessionActor();

    SessionActor(const SessionActor&) = delete;
    SessionActor& operator=(const SessionActor&) = delete;

    const std::string& id() const noexcept { return id_; }
    const std::string& config_echo() const noexcept { return config_echo_; }

    trainer::SessionState state() const;
    std::shared_ptr<const LatentSnapshot> latest_snapshot() const;
    std::string log_jsonl() const;

    trainer::SessionState control(const trainer::Command& command);
    // Returns the number of pending point edits.
    std::size_t ingest(const std::vector<PointEdit>& points, const std::vector<ClassDrag>& drags);
    std::uint64_t commit();
    void discard();
    std::size_t pending_count();
    // Copy of the layout guiding training, if any.
    std::optional<guidance::TargetLayout> active_layout();

    // Dispatches a parsed client message; returns a JSON reply body.
    std::string handle(const ClientMessage& message);

    std::shared_ptr<Subscription> subscribe();

    // Blocks until the session leaves the training phase (tests, CLI).
    bool wait_until_settled(std::chrono::milliseconds timeout) const;

    // Abandons the running epoch, marks the log interrupted, flushes outputs
    // and joins the worker. Idempotent.
    void stop();

private:
    using Task = std::function<void(trainer::Session&)>;

    template <class R>
    R call(std::function<R(trainer::Session&)> fn);

    void worker();
    bool drain();
    void publish_epoch(const trainer::EpochRecord& record);
    void publish_state();
    void broadcast(ServerMessageType type, const std::string& body);
    void flush_outputs(bool final);

    std::string id_;
    std::string config_echo_;
    ActorOptions options_;
    std::unique_ptr<trainer::Session> session_;

    mutable std::mutex mutex_;
    mutable std::condition_variable cv_;
    std::deque<Task> tasks_;
    bool stopping_ = false;
    bool worker_done_ = false;
    std::once_flag stop_once_;
    std::optional<std::string> crash_;  // worker-only
    trainer::SessionState state_mirror_;
    std::shared_ptr<const LatentSnapshot> snapshot_mirror_;
    std::string log_mirror_;
    std::vector<std::weak_ptr<Subscription>> subscribers_;

    EditedPositions pending_;  // worker-only
    std::thread thread_;
};

}  // namespace hill::server
