#include <sstream>

#include <json.hpp>

#include "hill/error.hpp"
#include "hill_cli/commands.hpp"

namespace hill::cli {

Comparison compare_logs(const trainer::ExperimentLog& a, const trainer::ExperimentLog& b,
                        std::optional<double> threshold) {
    if (a.records.empty() || b.records.empty()) throw Error(ErrorCode::invalid_argument, "compare: empty log");
    if (a.records.size() != b.records.size()) {
        throw Error(ErrorCode::invalid_argument, "compare: logs cover " + std::to_string(a.records.size()) + " and " +
                                                     std::to_string(b.records.size()) + " epochs");
    }
    Comparison c;
    c.threshold = threshold.value_or(a.records.back().val_acc);
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        const auto& ra = a.records[i];
        const auto& rb = b.records[i];
        if (ra.epoch != rb.epoch) {
            throw Error(ErrorCode::invalid_argument, "compare: epoch " + std::to_string(ra.epoch) + " vs " +
                                                         std::to_string(rb.epoch) + " at row " + std::to_string(i));
        }
        c.rows.push_back({ra.epoch, ra.val_acc, rb.val_acc, rb.val_acc - ra.val_acc});
        if (!c.epochs_to_threshold_a && ra.val_acc >= c.threshold) c.epochs_to_threshold_a = ra.epoch;
        if (!c.epochs_to_threshold_b && rb.val_acc >= c.threshold) c.epochs_to_threshold_b = rb.epoch;
    }
    c.final_delta = c.rows.back().delta;
    return c;
}

std::string comparison_json(const Comparison& c) {
    using nlohmann::json;
    auto opt = [](const std::optional<int>& v) { return v ? json(*v) : json(nullptr); };
    json rows = json::array();
    for (const auto& r : c.rows) rows.push_back({{"epoch", r.epoch}, {"acc_a", r.acc_a}, {"acc_b", r.acc_b}, {"delta", r.delta}});
    return json{{"threshold", c.threshold},
                {"final_delta", c.final_delta},
                {"epochs_to_threshold_a", opt(c.epochs_to_threshold_a)},
                {"epochs_to_threshold_b", opt(c.epochs_to_threshold_b)},
                {"rows", std::move(rows)}}
        .dump(2);
}

std::string comparison_csv(const Comparison& c) {
    std::ostringstream os;
    os.precision(17);
    os << "epoch,acc_a,acc_b,delta\n";
    for (const auto& r : c.rows) os << r.epoch << ',' << r.acc_a << ',' << r.acc_b << ',' << r.delta << '\n';
    return os.str();
}

}  // namespace hill::cli
