#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "hill/types.hpp"

namespace hill::strategies {

// Scripted stand-ins for what participants did to the scatter plot.
struct Strategy {
    enum class Kind { compactness, separation, merge, keep, composite, schedule };

    Kind kind = Kind::keep;
    double factor = 1.0;             // gamma (compactness) or beta (separation)
    std::vector<int> classes;        // merge
    std::vector<Strategy> children;  // composite members, or schedule entries
    std::vector<std::vector<int>> epochs;  // schedule: epochs[i] selects children[i]

    static Strategy compactness(double gamma);
    static Strategy separation(double beta);
    static Strategy merge(std::vector<int> classes);
    static Strategy keep();
    static Strategy composite(std::vector<Strategy> parts);
    static Strategy schedule(std::vector<Strategy> parts, std::vector<std::vector<int>> epochs);

    void validate() const;

    friend bool operator==(const Strategy&, const Strategy&) = default;
};

// compactness: p' = mu_c + gamma (p - mu_c)
// separation:  class c translated so mu_c -> g + beta (mu_c - g), g = mean of centers
// merge:       listed classes translated onto the mean of their centers
// keep:        no edits
// composite:   left to right; schedule: by snapshot epoch.
// Only points whose position changes appear in the result.
EditedPositions apply(const Strategy& strategy, const LatentSnapshot& snapshot);

// compactness(g) -> compactness(1/g), separation(b) -> separation(1/b);
// composites invert member-wise.
Strategy adversarial_invert(const Strategy& strategy);

struct InterventionPlan {
    Strategy strategy;
    std::vector<int> epochs;  // sorted, unique
};

// "compact:0.6+sep:1.5@25,30,35,40". Terms: compact:G, sep:B, merge:A/B[/C...],
// keep, invert:TERM. '+' composes; ';' separates segments with their own epochs,
// which builds a schedule.
InterventionPlan parse_plan(std::string_view text);
std::string to_string(const Strategy& strategy);
std::string to_string(const InterventionPlan& plan);

// The default benchmark policy: compactness(0.6) then separation(1.5).
Strategy study_analog();

}  // namespace hill::strategies
