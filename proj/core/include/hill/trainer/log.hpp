#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace hill::trainer {

// One line of the experiment log. Field names are part of the file format.
struct EpochRecord {
    int epoch = 0;
    double l_ce = 0.0;
    double l_human = 0.0;
    double center = 0.0;
    double spread = 0.0;
    double separation = 0.0;
    double scale_model = 0.0;
    double l_global = 0.0;
    double val_acc = 0.0;
    double val_loss = 0.0;
    std::uint64_t layout_id = 0;
    double wall_ms = 0.0;

    // Bitwise comparison of every field except wall_ms.
    bool same_values(const EpochRecord& other) const;
};

struct RunSummary {
    std::string status = "running";  // running | finished | failed | interrupted
    std::string failure;
    int epochs_completed = 0;
    double final_val_acc = 0.0;
    double best_val_acc = 0.0;
    std::uint64_t layouts_committed = 0;
};

// Line-delimited log: {"config":{...}}, one line per epoch, {"summary":{...}}.
struct ExperimentLog {
    std::string config_echo;  // JSON object text
    std::vector<EpochRecord> records;
    RunSummary summary;

    std::string to_jsonl() const;
    static ExperimentLog parse_jsonl(std::string_view text);
    void write(const std::filesystem::path& path) const;
    static ExperimentLog read(const std::filesystem::path& path);
};

std::string record_json(const EpochRecord& record);
EpochRecord parse_record_json(std::string_view line);

}  // namespace hill::trainer
