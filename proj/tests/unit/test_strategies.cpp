#include <doctest.h>

#include <cmath>

#include "hill/error.hpp"
#include "hill/guidance/layout.hpp"
#include "hill/guidance/losses.hpp"
#include "hill/strategies/strategy.hpp"
#include "hill/util/rng.hpp"

using namespace hill;
using namespace hill::strategies;

namespace {

LatentSnapshot random_snapshot(std::uint64_t seed, int classes = 4, std::size_t per_class = 6) {
    Rng rng(seed);
    LatentSnapshot s;
    s.epoch = 25;
    s.num_classes = static_cast<std::size_t>(classes);
    std::uint64_t id = 0;
    for (int c = 0; c < classes; ++c) {
        const double cx = rng.normal() * 3.0, cy = rng.normal() * 3.0;
        for (std::size_t i = 0; i < per_class; ++i) {
            s.points.push_back({id++, static_cast<float>(cx + rng.normal()), static_cast<float>(cy + rng.normal()), c,
                                c, false});
        }
    }
    return s;
}

guidance::TargetLayout commit(const Strategy& s, const LatentSnapshot& snap) {
    return guidance::commit_layout(apply(s, snap), snap, "test", 1);
}

}  // namespace

TEST_CASE("compactness zero collapses classes onto their centers") {
    const auto snap = random_snapshot(1);
    const auto base = commit(Strategy::keep(), snap);
    const auto l = commit(Strategy::compactness(0.0), snap);
    for (const auto& t : l.targets) {
        CHECK(t.spread == doctest::Approx(0.0).epsilon(1e-6));
        CHECK(t.center.x == doctest::Approx(base.target(t.label)->center.x).epsilon(1e-6));
    }
}

TEST_CASE("separation one is the identity") {
    const auto snap = random_snapshot(2);
    const auto edits = apply(Strategy::separation(1.0), snap);
    for (const auto& [id, p] : edits) {
        const auto* orig = snap.find(id);
        CHECK(p.x == doctest::Approx(orig->x).epsilon(1e-9));
        CHECK(p.y == doctest::Approx(orig->y).epsilon(1e-9));
    }
}

TEST_CASE("merging every class puts all targets at the mean of centers") {
    const auto snap = random_snapshot(3);
    const auto base = commit(Strategy::keep(), snap);
    double gx = 0.0, gy = 0.0;
    for (const auto& t : base.targets) {
        gx += t.center.x;
        gy += t.center.y;
    }
    gx /= static_cast<double>(base.targets.size());
    gy /= static_cast<double>(base.targets.size());
    const auto l = commit(Strategy::merge({0, 1, 2, 3}), snap);
    for (const auto& t : l.targets) {
        CHECK(t.center.x == doctest::Approx(gx).epsilon(1e-5));
        CHECK(t.center.y == doctest::Approx(gy).epsilon(1e-5));
    }
    for (const auto& s : l.separations) CHECK(s.distance == doctest::Approx(0.0).epsilon(1e-5));
}

TEST_CASE("merge of an absent class fails") {
    const auto snap = random_snapshot(3, 2);
    CHECK_THROWS_AS(apply(Strategy::merge({0, 5}), snap), Error);
    CHECK_THROWS_AS(apply(Strategy::keep(), LatentSnapshot{}), Error);
}

TEST_CASE("keep produces no edits and a zero-loss layout") {
    const auto snap = random_snapshot(4);
    CHECK(apply(Strategy::keep(), snap).empty());
    const auto layout = commit(Strategy::keep(), snap);
    std::vector<double> xy;
    std::vector<int> labels;
    for (const auto& p : snap.points) {
        xy.push_back(p.x);
        xy.push_back(p.y);
        labels.push_back(p.label);
    }
    const auto h = guidance::human_loss(ad::Tensor<double>::input({labels.size(), 2}, xy), labels, &layout);
    CHECK(h.total.item() == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("strategy validation") {
    CHECK_THROWS_AS(Strategy::compactness(-0.1), Error);
    CHECK_THROWS_AS(Strategy::separation(0.0), Error);
    CHECK_THROWS_AS(Strategy::merge({1}), Error);
    CHECK_NOTHROW(study_analog().validate());
}

TEST_CASE("adversarial inversion examples") {
    CHECK(adversarial_invert(Strategy::compactness(0.5)) == Strategy::compactness(2.0));
    CHECK(adversarial_invert(Strategy::separation(1.5)).factor == doctest::Approx(2.0 / 3.0));
    CHECK_THROWS_AS(adversarial_invert(Strategy::compactness(0.0)), Error);
    CHECK_THROWS_AS(adversarial_invert(Strategy::keep()), Error);
    CHECK_THROWS_AS(adversarial_invert(Strategy::merge({0, 1})), Error);

    const auto inv = adversarial_invert(study_analog());
    REQUIRE(inv.children.size() == 2);
    CHECK(inv.children[0].factor == doctest::Approx(1.0 / 0.6));
    CHECK(inv.children[1].factor == doctest::Approx(1.0 / 1.5));
}

TEST_CASE("inversion is an involution") {
    Rng rng(9);
    for (int i = 0; i < 100; ++i) {
        const double f = rng.uniform(0.05, 5.0);
        const auto s = rng.uniform() < 0.5 ? Strategy::compactness(f) : Strategy::separation(f);
        const auto back = adversarial_invert(adversarial_invert(s));
        CHECK(back.kind == s.kind);
        CHECK(back.factor == doctest::Approx(s.factor).epsilon(1e-14));
    }
}

TEST_CASE("plan parsing") {
    const auto plan = parse_plan("compact:0.6+sep:1.5@25,30,35,40");
    CHECK(plan.strategy == study_analog());
    CHECK(plan.epochs == std::vector<int>{25, 30, 35, 40});
    CHECK(to_string(plan) == "compact:0.59999999999999998+sep:1.5@25,30,35,40");
    CHECK(parse_plan(to_string(plan)).strategy == plan.strategy);

    const auto inv = parse_plan("invert:compact:0.5@26");
    CHECK(inv.strategy == Strategy::compactness(2.0));

    const auto sched = parse_plan("compact:0.6@25,35; merge:1/2@30");
    CHECK(sched.strategy.kind == Strategy::Kind::schedule);
    CHECK(sched.epochs == std::vector<int>{25, 30, 35});
    CHECK(parse_plan(to_string(sched)).strategy == sched.strategy);

    CHECK(parse_plan("keep@25").strategy == Strategy::keep());

    for (const char* bad : {"compact:0.6", "compact:x@25", "bogus:1@25", "compact:0.6@25,25", "sep:-1@25",
                            "merge:1@25", "compact:0.6@0", "invert:keep@25", "invert:compact:0@25"}) {
        CAPTURE(bad);
        try {
            parse_plan(bad);
            FAIL("expected a parse error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::parse_error);
        }
    }
}

TEST_CASE("schedules pick the entry for the snapshot epoch") {
    auto snap = random_snapshot(5);
    const auto sched = parse_plan("compact:0.0@25; keep@30").strategy;
    CHECK_FALSE(apply(sched, snap).empty());
    snap.epoch = 30;
    CHECK(apply(sched, snap).empty());
    snap.epoch = 31;
    CHECK_THROWS_AS(apply(sched, snap), Error);
}

TEST_CASE("compactness keeps centers and separation keeps spreads") {
    Rng rng(11);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto snap = random_snapshot(100 + seed, 2 + static_cast<int>(seed % 5), 1 + seed % 8);
        const auto base = commit(Strategy::keep(), snap);
        const auto compact = commit(Strategy::compactness(rng.uniform(0.0, 2.0)), snap);
        const auto sep = commit(Strategy::separation(rng.uniform(0.2, 3.0)), snap);
        CAPTURE(seed);
        for (const auto& t : base.targets) {
            CHECK(compact.target(t.label)->center.x == doctest::Approx(t.center.x).epsilon(1e-5));
            CHECK(compact.target(t.label)->center.y == doctest::Approx(t.center.y).epsilon(1e-5));
            CHECK(sep.target(t.label)->spread == doctest::Approx(t.spread).epsilon(1e-5));
        }
    }
}

TEST_CASE("separation scales distances between centers") {
    const auto snap = random_snapshot(6);
    const auto base = commit(Strategy::keep(), snap);
    const auto sep = commit(Strategy::separation(1.5), snap);
    for (std::size_t i = 0; i < base.separations.size(); ++i) {
        CHECK(sep.separations[i].distance == doctest::Approx(1.5 * base.separations[i].distance).epsilon(1e-5));
    }
}
