#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hill/types.hpp"

namespace hill::guidance {

using ClassStats = std::vector<ClassSummary>;

// Statistics for every class present in the batch, ordered by label.
ClassStats batch_class_stats(std::span<const float> points, std::span<const int> labels);
ClassStats batch_class_stats(std::span<const double> points, std::span<const int> labels);

struct ClassTarget {
    int label = 0;
    Point2 center;
    double spread = 0.0;
};

struct PairSeparation {
    int first = 0;  // first < second
    int second = 0;
    double distance = 0.0;
};

// The teacher signal: target centers and spreads per class plus the pairwise
// center distances derived from them (K = C(C-1)/2 entries).
struct TargetLayout {
    std::uint64_t layout_id = 0;
    int committed_epoch = 0;
    std::vector<ClassTarget> targets;  // ordered by label
    std::vector<PairSeparation> separations;
    std::string source;

    const ClassTarget* target(int label) const;
    // Throws not_found for a pair without targets.
    double separation(int a, int b) const;
    // Recomputes separations from the target centers.
    void derive_separations();
};

// Builds the layout implied by the snapshot with `edits` applied.
TargetLayout commit_layout(const EditedPositions& edits, const LatentSnapshot& base, std::string source,
                           std::uint64_t layout_id);

}  // namespace hill::guidance
