#include "hill/guidance/layout.hpp"

#include <cmath>
#include <map>

#include "hill/error.hpp"

namespace hill::guidance {

namespace {

template <class V>
ClassStats stats_impl(std::span<const V> points, std::span<const int> labels) {
    if (points.size() != labels.size() * 2) {
        throw Error(ErrorCode::shape_mismatch, "class stats: expected " + std::to_string(labels.size() * 2) +
                                                   " coordinates, got " + std::to_string(points.size()));
    }
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(i);
    ClassStats out;
    for (const auto& [label, rows] : groups) {
        ClassSummary s;
        s.label = label;
        s.count = rows.size();
        for (auto r : rows) {
            s.center.x += static_cast<double>(points[2 * r]);
            s.center.y += static_cast<double>(points[2 * r + 1]);
        }
        s.center.x /= static_cast<double>(rows.size());
        s.center.y /= static_cast<double>(rows.size());
        if (rows.size() >= 2) {
            double total = 0.0;
            for (auto r : rows) {
                total += std::hypot(static_cast<double>(points[2 * r]) - s.center.x,
                                    static_cast<double>(points[2 * r + 1]) - s.center.y);
            }
            s.spread = total / static_cast<double>(rows.size());
        }
        out.push_back(s);
    }
    return out;
}

}  // namespace

ClassStats batch_class_stats(std::span<const float> points, std::span<const int> labels) {
    return stats_impl(points, labels);
}

ClassStats batch_class_stats(std::span<const double> points, std::span<const int> labels) {
    return stats_impl(points, labels);
}

const ClassTarget* TargetLayout::target(int label) const {
    for (const auto& t : targets) {
        if (t.label == label) return &t;
    }
    return nullptr;
}

double TargetLayout::separation(int a, int b) const {
    if (a > b) std::swap(a, b);
    for (const auto& s : separations) {
        if (s.first == a && s.second == b) return s.distance;
    }
    throw Error(ErrorCode::not_found, "no separation for classes " + std::to_string(a) + "," + std::to_string(b));
}

void TargetLayout::derive_separations() {
    separations.clear();
    for (std::size_t i = 0; i < targets.size(); ++i) {
        for (std::size_t j = i + 1; j < targets.size(); ++j) {
            const auto& a = targets[i];
            const auto& b = targets[j];
            separations.push_back({a.label, b.label, std::hypot(a.center.x - b.center.x, a.center.y - b.center.y)});
        }
    }
}

TargetLayout commit_layout(const EditedPositions& edits, const LatentSnapshot& base, std::string source,
                           std::uint64_t layout_id) {
    if (base.points.empty()) throw Error(ErrorCode::invalid_argument, "commit_layout: empty snapshot");
    for (const auto& [id, pos] : edits) {
        if (base.find(id) == nullptr) {
            throw Error(ErrorCode::not_found, "commit_layout: unknown point_id " + std::to_string(id));
        }
        if (!std::isfinite(pos.x) || !std::isfinite(pos.y)) {
            throw Error(ErrorCode::invalid_argument, "commit_layout: non-finite position for point " + std::to_string(id));
        }
    }
    std::vector<double> coords;
    std::vector<int> labels;
    coords.reserve(base.points.size() * 2);
    for (const auto& p : base.points) {
        auto it = edits.find(p.point_id);
        if (it != edits.end()) {
            coords.push_back(it->second.x);
            coords.push_back(it->second.y);
        } else {
            coords.push_back(p.x);
            coords.push_back(p.y);
        }
        labels.push_back(p.label);
    }
    TargetLayout layout;
    layout.layout_id = layout_id;
    layout.committed_epoch = base.epoch;
    layout.source = std::move(source);
    for (const auto& s : batch_class_stats(std::span<const double>(coords), labels)) {
        layout.targets.push_back({s.label, s.center, s.spread.value_or(0.0)});
    }
    layout.derive_separations();
    return layout;
}

}  // namespace hill::guidance
