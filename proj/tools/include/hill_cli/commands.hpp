#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "hill/trainer/log.hpp"

namespace hill::cli {

// Exit codes: 0 ok, 1 runtime failure, 2 bad flags or inputs.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Makes a running `serve` return (used by the signal handler and tests).
void request_shutdown();

struct CompareRow {
    int epoch = 0;
    double acc_a = 0.0;
    double acc_b = 0.0;
    double delta = 0.0;  // b - a
};

struct Comparison {
    double threshold = 0.0;
    std::vector<CompareRow> rows;
    std::optional<int> epochs_to_threshold_a;
    std::optional<int> epochs_to_threshold_b;
    double final_delta = 0.0;
};

// Threshold defaults to run A's final accuracy. Throws invalid_argument
// when the two logs cover different epochs.
Comparison compare_logs(const trainer::ExperimentLog& a, const trainer::ExperimentLog& b,
                        std::optional<double> threshold = std::nullopt);
std::string comparison_json(const Comparison& comparison);
std::string comparison_csv(const Comparison& comparison);

}  // namespace hill::cli
