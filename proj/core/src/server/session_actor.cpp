#include "hill/server/session_actor.hpp"

#include <fstream>

#include "../json_io.hpp"
#include "hill/models/checkpoint.hpp"

namespace hill::server {

using detail::json;
using trainer::Phase;

std::optional<std::string> Subscription::pop(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mutex_);
    cv_.wait_for(lock, timeout, [&] { return closed_ || !queue_.empty(); });
    if (queue_.empty()) return std::nullopt;
    auto out = std::move(queue_.front());
    queue_.pop_front();
    return out;
}

bool Subscription::closed() const {
    std::lock_guard lock(mutex_);
    return closed_;
}

void Subscription::close() {
    {
        std::lock_guard lock(mutex_);
        closed_ = true;
    }
    cv_.notify_all();
}

void Subscription::push(ServerMessageType type, std::string_view body) {
    {
        std::lock_guard lock(mutex_);
        if (closed_) return;
        queue_.push_back(envelope(type, session_id_, next_seq_++, body));
    }
    cv_.notify_all();
}

SessionActor::SessionActor(std::string id, trainer::SessionConfig config, ActorOptions options)
    : id_(std::move(id)), options_(std::move(options)) {
    session_ = std::make_unique<trainer::Session>(std::move(config));
    config_echo_ = session_->log().config_echo;
    state_mirror_ = session_->state();
    log_mirror_ = session_->log().to_jsonl();
    flush_outputs(false);
    thread_ = std::thread([this] { worker(); });
}

SessionActor::~SessionActor() { stop(); }

trainer::SessionState SessionActor::state() const {
    std::lock_guard lock(mutex_);
    return state_mirror_;
}

std::shared_ptr<const LatentSnapshot> SessionActor::latest_snapshot() const {
    std::lock_guard lock(mutex_);
    return snapshot_mirror_;
}

std::string SessionActor::log_jsonl() const {
    std::lock_guard lock(mutex_);
    return log_mirror_;
}

template <class R>
R SessionActor::call(std::function<R(trainer::Session&)> fn) {
    auto promise = std::make_shared<std::promise<R>>();
    auto future = promise->get_future();
    {
        std::lock_guard lock(mutex_);
        if (stopping_) throw Error(ErrorCode::wrong_state, "session " + id_ + " is stopped");
        tasks_.push_back([promise, fn = std::move(fn)](trainer::Session& s) {
            try {
                if constexpr (std::is_void_v<R>) {
                    fn(s);
                    promise->set_value();
                } else {
                    promise->set_value(fn(s));
                }
            } catch (...) {
                promise->set_exception(std::current_exception());
            }
        });
    }
    cv_.notify_all();
    return future.get();
}

bool SessionActor::drain() {
    bool any = false;
    for (;;) {
        Task task;
        {
            std::lock_guard lock(mutex_);
            if (tasks_.empty()) break;
            task = std::move(tasks_.front());
            tasks_.pop_front();
        }
        task(*session_);
        any = true;
    }
    return any;
}

void SessionActor::worker() {
    for (;;) {
        drain();
        {
            std::lock_guard lock(mutex_);
            if (stopping_) break;
        }
        if (session_->state().phase == Phase::training && !crash_) {
            std::optional<trainer::EpochRecord> record;
            try {
                record = session_->train_epoch([this] {
                    drain();
                    std::lock_guard lock(mutex_);
                    return !stopping_;
                });
            } catch (const std::exception& e) {
                crash_ = e.what();
                broadcast(ServerMessageType::error, error_body(ErrorCode::wrong_state, *crash_));
            }
            if (record) publish_epoch(*record);
            publish_state();
            const auto phase = session_->state().phase;
            if (phase == Phase::failed) {
                broadcast(ServerMessageType::error, error_body(ErrorCode::non_finite, session_->state().reason));
            }
            if (phase == Phase::finished || phase == Phase::failed) flush_outputs(true);
        } else {
            std::unique_lock lock(mutex_);
            cv_.wait(lock, [&] { return stopping_ || !tasks_.empty(); });
        }
    }
    drain();
    session_->mark_interrupted();
    publish_state();
    flush_outputs(true);
    std::lock_guard lock(mutex_);
    worker_done_ = true;
    for (auto& w : subscribers_) {
        if (auto s = w.lock()) s->close();
    }
    subscribers_.clear();
}

void SessionActor::broadcast(ServerMessageType type, const std::string& body) {
    std::lock_guard lock(mutex_);
    std::erase_if(subscribers_, [&](const std::weak_ptr<Subscription>& w) {
        auto s = w.lock();
        if (!s || s->closed()) return true;
        s->push(type, body);
        return false;
    });
}

void SessionActor::publish_epoch(const trainer::EpochRecord& record) {
    auto snapshot = session_->latest_snapshot();
    {
        std::lock_guard lock(mutex_);
        snapshot_mirror_ = snapshot;
        log_mirror_ = session_->log().to_jsonl();
    }
    broadcast(ServerMessageType::metrics, metrics_body(record));
    if (snapshot) broadcast(ServerMessageType::snapshot, snapshot_body(*snapshot));
    flush_outputs(false);
}

void SessionActor::publish_state() {
    auto current = session_->state();
    if (crash_) {
        current.phase = Phase::failed;
        current.reason = *crash_;
    }
    bool changed = false;
    {
        std::lock_guard lock(mutex_);
        changed = current.phase != state_mirror_.phase || current.epoch != state_mirror_.epoch ||
                  current.reason != state_mirror_.reason;
        state_mirror_ = current;
        log_mirror_ = session_->log().to_jsonl();
    }
    cv_.notify_all();
    if (changed) broadcast(ServerMessageType::state, state_body(current));
}

void SessionActor::flush_outputs(bool final) {
    if (options_.out_dir.empty()) return;
    std::filesystem::create_directories(options_.out_dir);
    const auto config_path = options_.out_dir / "config.json";
    if (!std::filesystem::exists(config_path)) {
        std::ofstream(config_path) << config_echo_ << '\n';
    }
    session_->log().write(options_.out_dir / "log.jsonl");
    if (final && session_->projector().frozen()) {
        models::save_checkpoint(options_.out_dir / "checkpoint.bin", session_->backbone(), session_->projector(),
                                session_->optimizer());
    }
}

trainer::SessionState SessionActor::control(const trainer::Command& command) {
    return call<trainer::SessionState>([this, command](trainer::Session& s) {
        auto st = s.control(command);
        if (st.phase != Phase::paused_awaiting_edit) pending_.clear();
        publish_state();
        return st;
    });
}

namespace {

void require_paused(const trainer::Session& s, const char* what) {
    if (s.state().phase != Phase::paused_awaiting_edit) {
        throw Error(ErrorCode::illegal_transition,
                    std::string(what) + " is only allowed while paused_awaiting_edit, not " +
                        trainer::to_string(s.state().phase));
    }
}

}  // namespace

std::size_t SessionActor::ingest(const std::vector<PointEdit>& points, const std::vector<ClassDrag>& drags) {
    return call<std::size_t>([this, points, drags](trainer::Session& s) {
        require_paused(s, "edit_batch");
        const auto snap = s.latest_snapshot();
        auto next = pending_;
        for (const auto& e : points) {
            if (!snap->find(e.point_id)) {
                throw Error(ErrorCode::not_found, "point " + std::to_string(e.point_id) + " is not in the snapshot");
            }
            next[e.point_id] = {e.x, e.y};
        }
        for (const auto& d : drags) {
            if (d.class_id < 0 || static_cast<std::size_t>(d.class_id) >= snap->num_classes) {
                throw Error(ErrorCode::not_found, "class " + std::to_string(d.class_id) + " does not exist");
            }
            for (const auto& p : snap->points) {
                if (p.label != d.class_id) continue;
                const auto it = next.find(p.point_id);
                const Point2 base = it != next.end() ? it->second : Point2{p.x, p.y};
                next[p.point_id] = {base.x + d.dx, base.y + d.dy};
            }
        }
        pending_ = std::move(next);
        return pending_.size();
    });
}

std::size_t SessionActor::pending_count() {
    return call<std::size_t>([this](trainer::Session&) { return pending_.size(); });
}

std::optional<guidance::TargetLayout> SessionActor::active_layout() {
    return call<std::optional<guidance::TargetLayout>>([](trainer::Session& s) {
        const auto* l = s.active_layout();
        return l ? std::optional<guidance::TargetLayout>(*l) : std::nullopt;
    });
}

std::uint64_t SessionActor::commit() {
    return call<std::uint64_t>([this](trainer::Session& s) {
        require_paused(s, "commit");
        const auto id = s.commit(pending_, "server");
        pending_.clear();
        publish_state();
        return id;
    });
}

void SessionActor::discard() {
    call<void>([this](trainer::Session& s) {
        require_paused(s, "discard");
        pending_.clear();
        s.control(trainer::Command::skip_intervention());
        publish_state();
    });
}

std::string SessionActor::handle(const ClientMessage& message) {
    if (!message.session_id.empty() && message.session_id != id_) {
        throw Error(ErrorCode::invalid_argument, "message addressed to session '" + message.session_id + "'");
    }
    switch (message.type) {
        case ClientMessage::Type::control: {
            const auto st = control(message.command);
            return json{{"state", json::parse(state_body(st))}}.dump();
        }
        case ClientMessage::Type::edit_batch:
            return json{{"pending", ingest(message.points, message.drags)}}.dump();
        case ClientMessage::Type::commit:
            return json{{"layout_id", commit()}}.dump();
        case ClientMessage::Type::discard:
            discard();
            return json{{"pending", 0}}.dump();
    }
    return "{}";
}

std::shared_ptr<Subscription> SessionActor::subscribe() {
    auto sub = std::make_shared<Subscription>(id_);
    std::lock_guard lock(mutex_);
    const json hello{{"session_id", id_}, {"config", json::parse(config_echo_)}};
    sub->push(ServerMessageType::hello, hello.dump());
    sub->push(ServerMessageType::state, state_body(state_mirror_));
    if (snapshot_mirror_) sub->push(ServerMessageType::snapshot, snapshot_body(*snapshot_mirror_));
    if (worker_done_) {
        sub->close();
    } else {
        subscribers_.push_back(sub);
    }
    return sub;
}

bool SessionActor::wait_until_settled(std::chrono::milliseconds timeout) const {
    std::unique_lock lock(mutex_);
    return cv_.wait_for(lock, timeout, [&] { return state_mirror_.phase != Phase::training || stopping_; });
}

void SessionActor::stop() {
    std::call_once(stop_once_, [this] {
        {
            std::lock_guard lock(mutex_);
            stopping_ = true;
        }
        cv_.notify_all();
        if (thread_.joinable()) thread_.join();
    });
}

}  // namespace hill::server
