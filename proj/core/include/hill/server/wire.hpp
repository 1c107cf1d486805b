#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "hill/error.hpp"
#include "hill/trainer/log.hpp"
#include "hill/trainer/session.hpp"
#include "hill/types.hpp"

namespace hill::server {

inline constexpr int kWireVersion = 1;

// Server -> client message kinds.
enum class ServerMessageType { hello, snapshot, state, metrics, error };

std::string to_string(ServerMessageType type);

// JSON bodies. Each returns one JSON object as text.
std::string snapshot_body(const LatentSnapshot& snapshot);
std::string state_body(const trainer::SessionState& state);
std::string metrics_body(const trainer::EpochRecord& record);
std::string error_body(ErrorCode code, std::string_view detail);

// {"v":1,"type":...,"session_id":...,"seq":...,"<type>":body}
std::string envelope(ServerMessageType type, std::string_view session_id, std::uint64_t seq,
                     std::string_view body_json);

struct PointEdit {
    std::uint64_t point_id = 0;
    double x = 0.0;
    double y = 0.0;
};

// Center drag: every subsample point of the class moves by (dx, dy).
struct ClassDrag {
    int class_id = 0;
    double dx = 0.0;
    double dy = 0.0;
};

struct ClientMessage {
    enum class Type { control, edit_batch, commit, discard };
    Type type = Type::commit;
    std::string session_id;  // optional; must match the target session when present
    trainer::Command command;
    std::vector<PointEdit> points;
    std::vector<ClassDrag> drags;
};

std::string to_string(ClientMessage::Type type);

// Throws parse_error for malformed JSON and invalid_argument for bad fields.
ClientMessage parse_client_message(std::string_view text);
std::string encode(const ClientMessage& message);

// Decoders used by clients and tests.
LatentSnapshot parse_snapshot_body(std::string_view json_text);
trainer::SessionState parse_state_body(std::string_view json_text);
trainer::Phase parse_phase(const std::string& name);

}  // namespace hill::server
