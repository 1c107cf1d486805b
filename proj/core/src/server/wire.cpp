#include "hill/server/wire.hpp"

#include <cmath>

#include "../json_io.hpp"

namespace hill::server {

using detail::json;

std::string to_string(ServerMessageType type) {
    switch (type) {
        case ServerMessageType::hello: return "hello";
        case ServerMessageType::snapshot: return "snapshot";
        case ServerMessageType::state: return "state";
        case ServerMessageType::metrics: return "metrics";
        case ServerMessageType::error: return "error";
    }
    return "?";
}

std::string to_string(ClientMessage::Type type) {
    switch (type) {
        case ClientMessage::Type::control: return "control";
        case ClientMessage::Type::edit_batch: return "edit_batch";
        case ClientMessage::Type::commit: return "commit";
        case ClientMessage::Type::discard: return "discard";
    }
    return "?";
}

std::string snapshot_body(const LatentSnapshot& s) {
    json points = json::array();
    for (const auto& p : s.points) {
        points.push_back({{"point_id", p.point_id},
                          {"x", static_cast<double>(p.x)},
                          {"y", static_cast<double>(p.y)},
                          {"label", p.label},
                          {"predicted", p.predicted},
                          {"misclassified", p.misclassified}});
    }
    json classes = json::array();
    for (const auto& c : s.classes) {
        classes.push_back({{"label", c.label},
                           {"center", {{"x", c.center.x}, {"y", c.center.y}}},
                           {"spread", c.spread ? json(*c.spread) : json(nullptr)},
                           {"count", c.count}});
    }
    const auto& l = s.loss;
    json j{{"epoch", s.epoch},
           {"num_classes", s.num_classes},
           {"layout_id", s.layout_id},
           {"val_acc", s.val_acc},
           {"val_loss", s.val_loss},
           {"subsample_acc", s.subsample_acc},
           {"loss",
            {{"l_ce", l.l_ce},
             {"l_human", l.l_human},
             {"center", l.center_term},
             {"spread", l.spread_term},
             {"separation", l.separation_term},
             {"scale_model", l.scale_model},
             {"scale_penalty", l.scale_penalty},
             {"l_global", l.l_global}}},
           {"points", std::move(points)},
           {"classes", std::move(classes)}};
    return j.dump();
}

LatentSnapshot parse_snapshot_body(std::string_view text) {
    try {
        const auto j = json::parse(text);
        LatentSnapshot s;
        s.epoch = j.at("epoch").get<int>();
        s.num_classes = j.at("num_classes").get<std::size_t>();
        s.layout_id = j.at("layout_id").get<std::uint64_t>();
        s.val_acc = j.at("val_acc").get<double>();
        s.val_loss = j.at("val_loss").get<double>();
        s.subsample_acc = j.at("subsample_acc").get<double>();
        const auto& l = j.at("loss");
        s.loss = {l.at("l_ce").get<double>(),        l.at("l_human").get<double>(),
                  l.at("center").get<double>(),      l.at("spread").get<double>(),
                  l.at("separation").get<double>(),  l.at("scale_model").get<double>(),
                  l.at("scale_penalty").get<double>(), l.at("l_global").get<double>()};
        for (const auto& p : j.at("points")) {
            SnapshotPoint q;
            q.point_id = p.at("point_id").get<std::uint64_t>();
            q.x = static_cast<float>(p.at("x").get<double>());
            q.y = static_cast<float>(p.at("y").get<double>());
            q.label = p.at("label").get<int>();
            q.predicted = p.at("predicted").get<int>();
            q.misclassified = p.at("misclassified").get<bool>();
            s.points.push_back(q);
        }
        for (const auto& c : j.at("classes")) {
            ClassSummary k;
            k.label = c.at("label").get<int>();
            k.center = {c.at("center").at("x").get<double>(), c.at("center").at("y").get<double>()};
            if (!c.at("spread").is_null()) k.spread = c.at("spread").get<double>();
            k.count = c.at("count").get<std::size_t>();
            s.classes.push_back(k);
        }
        return s;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::parse_error, std::string("snapshot: ") + e.what());
    }
}

std::string state_body(const trainer::SessionState& state) {
    return json{{"phase", trainer::to_string(state.phase)}, {"epoch", state.epoch}, {"reason", state.reason}}.dump();
}

trainer::Phase parse_phase(const std::string& name) {
    using trainer::Phase;
    for (auto p : {Phase::idle, Phase::training, Phase::paused_awaiting_edit, Phase::finished, Phase::failed}) {
        if (trainer::to_string(p) == name) return p;
    }
    throw Error(ErrorCode::invalid_argument, "unknown phase '" + name + "'");
}

trainer::SessionState parse_state_body(std::string_view text) {
    try {
        const auto j = json::parse(text);
        trainer::SessionState s;
        s.phase = parse_phase(j.at("phase").get<std::string>());
        s.epoch = j.at("epoch").get<int>();
        s.reason = j.value("reason", "");
        return s;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::parse_error, std::string("state: ") + e.what());
    }
}

std::string metrics_body(const trainer::EpochRecord& record) { return trainer::record_json(record); }

std::string error_body(ErrorCode code, std::string_view detail) {
    return json{{"code", std::string(to_string(code))}, {"detail", std::string(detail)}}.dump();
}

std::string envelope(ServerMessageType type, std::string_view session_id, std::uint64_t seq,
                     std::string_view body_json) {
    // Bodies are already serialized; splice them in rather than re-parsing.
    const auto name = to_string(type);
    std::string out = json{{"v", kWireVersion}, {"type", name}, {"session_id", std::string(session_id)}, {"seq", seq}}.dump();
    out.pop_back();
    out += ",\"" + name + "\":";
    out += body_json;
    out += '}';
    return out;
}

namespace {

void bad(const std::string& what) { throw Error(ErrorCode::invalid_argument, "message: " + what); }

double finite_number(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_number()) bad(std::string("'") + key + "' must be a number");
    const double v = j.at(key).get<double>();
    if (!std::isfinite(v)) bad(std::string("'") + key + "' must be finite");
    return v;
}

}  // namespace

ClientMessage parse_client_message(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::parse_error, std::string("message: ") + e.what());
    }
    if (!j.is_object()) bad("expected a JSON object");
    if (j.contains("v") && j.at("v") != kWireVersion) bad("unsupported version");
    if (!j.contains("type") || !j.at("type").is_string()) bad("missing 'type'");

    ClientMessage m;
    if (j.contains("session_id")) {
        if (!j.at("session_id").is_string()) bad("'session_id' must be a string");
        m.session_id = j.at("session_id").get<std::string>();
    }
    const auto type = j.at("type").get<std::string>();
    if (type == "control") {
        m.type = ClientMessage::Type::control;
        const json& c = j.contains("control") ? j.at("control") : j;
        if (!c.contains("command") || !c.at("command").is_string()) bad("control needs 'command'");
        m.command.kind = trainer::parse_command_kind(c.at("command").get<std::string>());
        using K = trainer::Command::Kind;
        if (m.command.kind == K::set_alpha || m.command.kind == K::set_lambda || m.command.kind == K::train_n) {
            m.command.value = finite_number(c, "value");
        }
    } else if (type == "edit_batch") {
        m.type = ClientMessage::Type::edit_batch;
        if (!j.contains("edits") || !j.at("edits").is_array()) bad("edit_batch needs an 'edits' array");
        for (const auto& e : j.at("edits")) {
            if (!e.is_object()) bad("edit must be an object");
            if (e.contains("point_id")) {
                if (!e.at("point_id").is_number_unsigned()) bad("'point_id' must be a non-negative integer");
                m.points.push_back({e.at("point_id").get<std::uint64_t>(), finite_number(e, "x"), finite_number(e, "y")});
            } else if (e.contains("class_id")) {
                if (!e.at("class_id").is_number_integer()) bad("'class_id' must be an integer");
                m.drags.push_back({e.at("class_id").get<int>(), finite_number(e, "dx"), finite_number(e, "dy")});
            } else {
                bad("edit needs 'point_id' or 'class_id'");
            }
        }
    } else if (type == "commit") {
        m.type = ClientMessage::Type::commit;
    } else if (type == "discard") {
        m.type = ClientMessage::Type::discard;
    } else {
        bad("unknown type '" + type + "'");
    }
    return m;
}

std::string encode(const ClientMessage& m) {
    json j{{"v", kWireVersion}, {"type", to_string(m.type)}};
    if (!m.session_id.empty()) j["session_id"] = m.session_id;
    switch (m.type) {
        case ClientMessage::Type::control: {
            json c{{"command", trainer::to_string(m.command.kind)}};
            using K = trainer::Command::Kind;
            if (m.command.kind == K::set_alpha || m.command.kind == K::set_lambda || m.command.kind == K::train_n) {
                c["value"] = m.command.value;
            }
            j["control"] = std::move(c);
            break;
        }
        case ClientMessage::Type::edit_batch: {
            json edits = json::array();
            for (const auto& p : m.points) edits.push_back({{"point_id", p.point_id}, {"x", p.x}, {"y", p.y}});
            for (const auto& d : m.drags) edits.push_back({{"class_id", d.class_id}, {"dx", d.dx}, {"dy", d.dy}});
            j["edits"] = std::move(edits);
            break;
        }
        default: break;
    }
    return j.dump();
}

}  // namespace hill::server
