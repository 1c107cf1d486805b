#include "hill/trainer/log.hpp"

#include <bit>
#include <fstream>
#include <sstream>

#include "../json_io.hpp"
#include "hill/error.hpp"

namespace hill::trainer {

using detail::json;

bool EpochRecord::same_values(const EpochRecord& o) const {
    auto same = [](double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); };
    return epoch == o.epoch && same(l_ce, o.l_ce) && same(l_human, o.l_human) && same(center, o.center) &&
           same(spread, o.spread) && same(separation, o.separation) && same(scale_model, o.scale_model) &&
           same(l_global, o.l_global) && same(val_acc, o.val_acc) && same(val_loss, o.val_loss) &&
           layout_id == o.layout_id;
}

namespace {

json record_to_json(const EpochRecord& r) {
    json j;
    j["epoch"] = r.epoch;
    j["l_ce"] = r.l_ce;
    j["l_human"] = r.l_human;
    j["center"] = r.center;
    j["spread"] = r.spread;
    j["separation"] = r.separation;
    j["scale_model"] = r.scale_model;
    j["l_global"] = r.l_global;
    j["val_acc"] = r.val_acc;
    j["val_loss"] = r.val_loss;
    j["layout_id"] = r.layout_id;
    j["wall_ms"] = r.wall_ms;
    return j;
}

EpochRecord record_from_json(const json& j) {
    EpochRecord r;
    r.epoch = j.at("epoch").get<int>();
    r.l_ce = j.at("l_ce").get<double>();
    r.l_human = j.at("l_human").get<double>();
    r.center = j.at("center").get<double>();
    r.spread = j.at("spread").get<double>();
    r.separation = j.at("separation").get<double>();
    r.scale_model = j.at("scale_model").get<double>();
    r.l_global = j.at("l_global").get<double>();
    r.val_acc = j.at("val_acc").get<double>();
    r.val_loss = j.at("val_loss").get<double>();
    r.layout_id = j.at("layout_id").get<std::uint64_t>();
    r.wall_ms = j.at("wall_ms").get<double>();
    return r;
}

}  // namespace

std::string record_json(const EpochRecord& record) { return record_to_json(record).dump(); }

EpochRecord parse_record_json(std::string_view line) {
    try {
        return record_from_json(json::parse(line));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::parse_error, std::string("epoch record: ") + e.what());
    }
}

std::string ExperimentLog::to_jsonl() const {
    std::ostringstream os;
    json config = config_echo.empty() ? json::object() : json::parse(config_echo);
    os << json{{"config", config}}.dump() << '\n';
    for (const auto& r : records) os << record_json(r) << '\n';
    json s{{"status", summary.status},
           {"failure", summary.failure},
           {"epochs_completed", summary.epochs_completed},
           {"final_val_acc", summary.final_val_acc},
           {"best_val_acc", summary.best_val_acc},
           {"layouts_committed", summary.layouts_committed}};
    os << json{{"summary", s}}.dump() << '\n';
    return os.str();
}

ExperimentLog ExperimentLog::parse_jsonl(std::string_view text) {
    ExperimentLog log;
    std::size_t line_no = 0;
    int last_epoch = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        const auto line = text.substr(0, nl);
        text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        try {
            const json j = json::parse(line);
            if (j.contains("config")) {
                log.config_echo = j.at("config").dump();
            } else if (j.contains("summary")) {
                const auto& s = j.at("summary");
                log.summary.status = s.at("status").get<std::string>();
                log.summary.failure = s.value("failure", "");
                log.summary.epochs_completed = s.at("epochs_completed").get<int>();
                log.summary.final_val_acc = s.at("final_val_acc").get<double>();
                log.summary.best_val_acc = s.at("best_val_acc").get<double>();
                log.summary.layouts_committed = s.at("layouts_committed").get<std::uint64_t>();
            } else {
                auto r = record_from_json(j);
                if (r.epoch <= last_epoch) {
                    throw Error(ErrorCode::parse_error, "log line " + std::to_string(line_no) + ": epochs not increasing");
                }
                last_epoch = r.epoch;
                log.records.push_back(r);
            }
        } catch (const json::exception& e) {
            throw Error(ErrorCode::parse_error, "log line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return log;
}

void ExperimentLog::write(const std::filesystem::path& path) const {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw Error(ErrorCode::io_error, "cannot write " + tmp.string());
        out << to_jsonl();
    }
    std::filesystem::rename(tmp, path);
}

ExperimentLog ExperimentLog::read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_jsonl(ss.str());
}

}  // namespace hill::trainer
