#include "hill/strategies/strategy.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "hill/error.hpp"

namespace hill::strategies {

Strategy Strategy::compactness(double gamma) {
    Strategy s;
    s.kind = Kind::compactness;
    s.factor = gamma;
    s.validate();
    return s;
}

Strategy Strategy::separation(double beta) {
    Strategy s;
    s.kind = Kind::separation;
    s.factor = beta;
    s.validate();
    return s;
}

Strategy Strategy::merge(std::vector<int> classes) {
    Strategy s;
    s.kind = Kind::merge;
    s.classes = std::move(classes);
    s.validate();
    return s;
}

Strategy Strategy::keep() { return Strategy{}; }

Strategy Strategy::composite(std::vector<Strategy> parts) {
    Strategy s;
    s.kind = Kind::composite;
    s.children = std::move(parts);
    s.validate();
    return s;
}

Strategy Strategy::schedule(std::vector<Strategy> parts, std::vector<std::vector<int>> epochs) {
    Strategy s;
    s.kind = Kind::schedule;
    s.children = std::move(parts);
    s.epochs = std::move(epochs);
    s.validate();
    return s;
}

void Strategy::validate() const {
    auto fail = [](const std::string& why) { throw Error(ErrorCode::invalid_argument, "strategy: " + why); };
    switch (kind) {
        case Kind::compactness:
            if (!(factor >= 0.0) || !std::isfinite(factor)) fail("compactness gamma must be >= 0");
            break;
        case Kind::separation:
            if (!(factor > 0.0) || !std::isfinite(factor)) fail("separation beta must be > 0");
            break;
        case Kind::merge: {
            std::set<int> unique(classes.begin(), classes.end());
            if (unique.size() < 2 || unique.size() != classes.size()) fail("merge needs >= 2 distinct classes");
            break;
        }
        case Kind::keep: break;
        case Kind::composite:
            if (children.empty()) fail("empty composite");
            for (const auto& c : children) c.validate();
            break;
        case Kind::schedule: {
            if (children.empty() || children.size() != epochs.size()) fail("schedule entries and epoch lists differ");
            std::set<int> seen;
            for (const auto& list : epochs) {
                for (int e : list) {
                    if (!seen.insert(e).second) fail("epoch " + std::to_string(e) + " scheduled twice");
                }
            }
            for (const auto& c : children) c.validate();
            break;
        }
    }
}

namespace {

struct Working {
    std::vector<Point2> pos;
    std::vector<int> labels;
};

std::map<int, Point2> centers(const Working& w) {
    std::map<int, std::pair<Point2, std::size_t>> acc;
    for (std::size_t i = 0; i < w.pos.size(); ++i) {
        auto& [sum, n] = acc[w.labels[i]];
        sum.x += w.pos[i].x;
        sum.y += w.pos[i].y;
        ++n;
    }
    std::map<int, Point2> out;
    for (const auto& [label, entry] : acc) {
        out[label] = {entry.first.x / static_cast<double>(entry.second), entry.first.y / static_cast<double>(entry.second)};
    }
    return out;
}

void translate(Working& w, const std::map<int, Point2>& shift) {
    for (std::size_t i = 0; i < w.pos.size(); ++i) {
        auto it = shift.find(w.labels[i]);
        if (it == shift.end()) continue;
        w.pos[i].x += it->second.x;
        w.pos[i].y += it->second.y;
    }
}

void apply_in_place(const Strategy& s, Working& w, int epoch) {
    using Kind = Strategy::Kind;
    switch (s.kind) {
        case Kind::keep: return;
        case Kind::compactness: {
            const auto mu = centers(w);
            for (std::size_t i = 0; i < w.pos.size(); ++i) {
                const Point2& c = mu.at(w.labels[i]);
                if (s.factor == 0.0) {
                    w.pos[i] = c;
                } else {
                    // p + (gamma - 1)(p - mu) keeps gamma = 1 an exact no-op.
                    w.pos[i].x += (s.factor - 1.0) * (w.pos[i].x - c.x);
                    w.pos[i].y += (s.factor - 1.0) * (w.pos[i].y - c.y);
                }
            }
            return;
        }
        case Kind::separation: {
            const auto mu = centers(w);
            Point2 g;
            for (const auto& [label, c] : mu) {
                g.x += c.x;
                g.y += c.y;
            }
            g.x /= static_cast<double>(mu.size());
            g.y /= static_cast<double>(mu.size());
            std::map<int, Point2> shift;
            for (const auto& [label, c] : mu) shift[label] = {(s.factor - 1.0) * (c.x - g.x), (s.factor - 1.0) * (c.y - g.y)};
            translate(w, shift);
            return;
        }
        case Kind::merge: {
            const auto mu = centers(w);
            Point2 joint;
            for (int c : s.classes) {
                auto it = mu.find(c);
                if (it == mu.end()) {
                    throw Error(ErrorCode::not_found, "merge: class " + std::to_string(c) + " not in snapshot");
                }
                joint.x += it->second.x;
                joint.y += it->second.y;
            }
            joint.x /= static_cast<double>(s.classes.size());
            joint.y /= static_cast<double>(s.classes.size());
            std::map<int, Point2> shift;
            for (int c : s.classes) shift[c] = {joint.x - mu.at(c).x, joint.y - mu.at(c).y};
            translate(w, shift);
            return;
        }
        case Kind::composite:
            for (const auto& c : s.children) apply_in_place(c, w, epoch);
            return;
        case Kind::schedule:
            for (std::size_t i = 0; i < s.children.size(); ++i) {
                if (std::find(s.epochs[i].begin(), s.epochs[i].end(), epoch) != s.epochs[i].end()) {
                    apply_in_place(s.children[i], w, epoch);
                    return;
                }
            }
            throw Error(ErrorCode::invalid_argument, "schedule has no entry for epoch " + std::to_string(epoch));
    }
}

}  // namespace

EditedPositions apply(const Strategy& strategy, const LatentSnapshot& snapshot) {
    if (snapshot.points.empty()) throw Error(ErrorCode::invalid_argument, "apply: empty snapshot");
    Working w;
    for (const auto& p : snapshot.points) {
        w.pos.push_back({p.x, p.y});
        w.labels.push_back(p.label);
    }
    apply_in_place(strategy, w, snapshot.epoch);
    EditedPositions edits;
    for (std::size_t i = 0; i < w.pos.size(); ++i) {
        const auto& p = snapshot.points[i];
        if (w.pos[i].x != static_cast<double>(p.x) || w.pos[i].y != static_cast<double>(p.y)) {
            edits[p.point_id] = w.pos[i];
        }
    }
    return edits;
}

Strategy adversarial_invert(const Strategy& s) {
    using Kind = Strategy::Kind;
    switch (s.kind) {
        case Kind::compactness:
            if (s.factor == 0.0) throw Error(ErrorCode::invalid_argument, "invert: compactness(0) has no inverse");
            return Strategy::compactness(1.0 / s.factor);
        case Kind::separation: return Strategy::separation(1.0 / s.factor);
        case Kind::composite: {
            std::vector<Strategy> parts;
            for (const auto& c : s.children) parts.push_back(adversarial_invert(c));
            return Strategy::composite(std::move(parts));
        }
        default: throw Error(ErrorCode::invalid_argument, "invert: only compactness and separation are invertible");
    }
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

[[noreturn]] void parse_fail(std::string_view text, const std::string& why) {
    throw Error(ErrorCode::parse_error, "strategy '" + std::string(text) + "': " + why);
}

double parse_number(std::string_view text, std::string_view token) {
    token = trim(token);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size()) parse_fail(text, "bad number '" + std::string(token) + "'");
    return v;
}

int parse_int(std::string_view text, std::string_view token) {
    token = trim(token);
    int v = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size()) parse_fail(text, "bad integer '" + std::string(token) + "'");
    return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    for (;;) {
        const auto at = s.find(sep);
        out.push_back(s.substr(0, at));
        if (at == std::string_view::npos) break;
        s.remove_prefix(at + 1);
    }
    return out;
}

Strategy parse_term(std::string_view text, std::string_view term) {
    term = trim(term);
    if (term.starts_with("invert:")) {
        try {
            return adversarial_invert(parse_term(text, term.substr(7)));
        } catch (const Error& e) {
            if (e.code() == ErrorCode::parse_error) throw;
            parse_fail(text, e.detail());
        }
    }
    if (term == "keep") return Strategy::keep();
    const auto colon = term.find(':');
    if (colon == std::string_view::npos) parse_fail(text, "unknown term '" + std::string(term) + "'");
    const auto name = term.substr(0, colon);
    const auto arg = term.substr(colon + 1);
    try {
        if (name == "compact" || name == "compactness") return Strategy::compactness(parse_number(text, arg));
        if (name == "sep" || name == "separation") return Strategy::separation(parse_number(text, arg));
        if (name == "merge") {
            std::vector<int> classes;
            for (auto c : split(arg, '/')) classes.push_back(parse_int(text, c));
            return Strategy::merge(std::move(classes));
        }
    } catch (const Error& e) {
        if (e.code() == ErrorCode::parse_error) throw;
        parse_fail(text, e.detail());
    }
    parse_fail(text, "unknown strategy '" + std::string(name) + "'");
}

Strategy parse_strategy(std::string_view text, std::string_view body) {
    std::vector<Strategy> parts;
    for (auto t : split(body, '+')) parts.push_back(parse_term(text, t));
    return parts.size() == 1 ? parts.front() : Strategy::composite(std::move(parts));
}

}  // namespace

InterventionPlan parse_plan(std::string_view text) {
    std::vector<Strategy> parts;
    std::vector<std::vector<int>> epoch_lists;
    std::set<int> all;
    for (auto segment : split(text, ';')) {
        segment = trim(segment);
        const auto at = segment.rfind('@');
        if (at == std::string_view::npos) parse_fail(text, "missing '@EPOCHS'");
        std::vector<int> epochs;
        for (auto e : split(segment.substr(at + 1), ',')) {
            const int epoch = parse_int(text, e);
            if (epoch < 1) parse_fail(text, "epochs must be >= 1");
            if (!all.insert(epoch).second) parse_fail(text, "epoch " + std::to_string(epoch) + " listed twice");
            epochs.push_back(epoch);
        }
        parts.push_back(parse_strategy(text, segment.substr(0, at)));
        epoch_lists.push_back(std::move(epochs));
    }
    InterventionPlan plan;
    plan.epochs.assign(all.begin(), all.end());
    plan.strategy = parts.size() == 1 ? parts.front() : Strategy::schedule(std::move(parts), std::move(epoch_lists));
    return plan;
}

std::string to_string(const Strategy& s) {
    using Kind = Strategy::Kind;
    std::ostringstream os;
    os.precision(17);
    switch (s.kind) {
        case Kind::keep: os << "keep"; break;
        case Kind::compactness: os << "compact:" << s.factor; break;
        case Kind::separation: os << "sep:" << s.factor; break;
        case Kind::merge:
            os << "merge:";
            for (std::size_t i = 0; i < s.classes.size(); ++i) os << (i ? "/" : "") << s.classes[i];
            break;
        case Kind::composite:
            for (std::size_t i = 0; i < s.children.size(); ++i) os << (i ? "+" : "") << to_string(s.children[i]);
            break;
        case Kind::schedule:
            for (std::size_t i = 0; i < s.children.size(); ++i) {
                os << (i ? ";" : "") << to_string(s.children[i]) << '@';
                for (std::size_t j = 0; j < s.epochs[i].size(); ++j) os << (j ? "," : "") << s.epochs[i][j];
            }
            break;
    }
    return os.str();
}

std::string to_string(const InterventionPlan& plan) {
    if (plan.strategy.kind == Strategy::Kind::schedule) return to_string(plan.strategy);
    std::string out = to_string(plan.strategy) + "@";
    for (std::size_t i = 0; i < plan.epochs.size(); ++i) out += (i ? "," : "") + std::to_string(plan.epochs[i]);
    return out;
}

Strategy study_analog() { return Strategy::composite({Strategy::compactness(0.6), Strategy::separation(1.5)}); }

}  // namespace hill::strategies
