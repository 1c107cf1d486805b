#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

namespace hill {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

// Point id -> edited 2D position.
using EditedPositions = std::map<std::uint64_t, Point2>;

struct LossBreakdown {
    double l_ce = 0.0;
    double l_human = 0.0;
    double center_term = 0.0;
    double spread_term = 0.0;
    double separation_term = 0.0;
    double scale_model = 0.0;
    double scale_penalty = 0.0;
    double l_global = 0.0;
};

// Per-class statistics of a set of projected points. `spread` is the mean
// distance to the center and is absent for singleton classes.
struct ClassSummary {
    int label = 0;
    Point2 center;
    std::optional<double> spread;
    std::size_t count = 0;
};

struct SnapshotPoint {
    std::uint64_t point_id = 0;
    float x = 0.0f;
    float y = 0.0f;
    int label = 0;
    int predicted = 0;
    bool misclassified = false;
};

// What the human sees at an epoch boundary. Produced by the trainer and
// shared read-only afterwards.
struct LatentSnapshot {
    int epoch = 0;
    std::size_t num_classes = 0;
    std::vector<SnapshotPoint> points;
    std::vector<ClassSummary> classes;
    LossBreakdown loss;
    double val_acc = 0.0;
    double val_loss = 0.0;
    double subsample_acc = 0.0;
    std::uint64_t layout_id = 0;

    const SnapshotPoint* find(std::uint64_t point_id) const {
        for (const auto& p : points) {
            if (p.point_id == point_id) return &p;
        }
        return nullptr;
    }
};

}  // namespace hill
