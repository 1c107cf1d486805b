#include <doctest.h>

#include <cmath>

#include "hill/data/dataset.hpp"
#include "hill/diffcore/backward.hpp"
#include "hill/diffcore/ops.hpp"
#include "hill/error.hpp"
#include "hill/projection/projector.hpp"
#include "hill/util/rng.hpp"
#include "oracles.hpp"

using namespace hill;
using namespace hill::projection;

namespace {

ad::Tensor<float> random_latent(std::size_t b, std::size_t d, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<float> v(b * d);
    for (auto& x : v) x = static_cast<float>(rng.normal());
    return ad::Tensor<float>::input({b, d}, std::move(v));
}

std::vector<float> values(const ad::Tensor<float>& t) { return {t.data().begin(), t.data().end()}; }

ad::Optimizer<float> projector_optimizer() {
    ad::OptimizerConfig cfg;
    cfg.learning_rate = 1e-2;
    return ad::Optimizer<float>(cfg);
}

}  // namespace

TEST_CASE("pooled population std of the unit square corners is 1") {
    const std::vector<double> pts{0, 0, 2, 0, 0, 2, 2, 2};
    CHECK(pooled_population_std(pts) == doctest::Approx(1.0));
    CHECK(testing::oracle_pooled_std(pts) == doctest::Approx(1.0));
    auto p = Projector<float>::init(4, 4, 2, 0);
    p.freeze(std::vector<float>{0, 0, 2, 0, 0, 2, 2, 2});
    CHECK(*p.sigma_ref() == doctest::Approx(1.0));
}

TEST_CASE("project gives [B, 2] for any batch size") {
    const auto p = Projector<float>::init(6, 8, 3, 1);
    for (std::size_t b : {1u, 2u, 17u}) CHECK(p.project(random_latent(b, 6, b)).shape() == ad::Shape{b, 2});
    CHECK_THROWS_AS(p.project(random_latent(3, 5, 0)), Error);
}

TEST_CASE("init is deterministic and starts unfrozen") {
    const auto a = Projector<float>::init(6, 8, 3, 1);
    const auto b = Projector<float>::init(6, 8, 3, 1);
    CHECK(a.parameter_bytes() == b.parameter_bytes());
    CHECK_FALSE(a.frozen());
    CHECK_FALSE(a.sigma_ref().has_value());
    CHECK_THROWS_AS(Projector<float>::init(1, 8, 3, 1), Error);
    CHECK_THROWS_AS(Projector<float>::init(6, 1, 3, 1), Error);
}

TEST_CASE("first aux loss on a fresh projector is near ln C") {
    // Zeroed aux head gives exactly uniform logits.
    auto p = Projector<float>::init(6, 8, 4, 2);
    for (const auto& t : p.aux_parameters()) {
        for (auto& v : t.mutable_data()) v = 0.0f;
    }
    auto opt = projector_optimizer();
    const std::vector<int> labels{0, 1, 2, 3, 0, 1};
    CHECK(p.epoch1_step(random_latent(6, 6, 3), labels, opt) == doctest::Approx(std::log(4.0)).epsilon(1e-5));
}

TEST_CASE("epoch-1 step sends no gradient into the latent") {
    auto p = Projector<float>::init(6, 8, 3, 2);
    auto opt = projector_optimizer();
    const auto w = ad::Tensor<float>::parameter({4, 6}, std::vector<float>(24, 0.1f));
    const auto z = ad::matmul(random_latent(5, 4, 1), w);
    const std::vector<int> labels{0, 1, 2, 0, 1};
    const auto before = values(w);
    p.epoch1_step(z, labels, opt);
    CHECK(values(w) == before);
    CHECK(w.grad().empty());
}

TEST_CASE("aux loss decreases on separable blobs") {
    const auto ds = data::gen_blobs(3, 40, 6, 4.0, 0.3, 12);
    auto p = Projector<float>::init(6, 16, 3, 5);
    auto opt = projector_optimizer();
    const auto x = ad::Tensor<float>::input({ds.size(), 6}, ds.inputs);
    std::vector<double> losses;
    for (int step = 0; step < 50; ++step) losses.push_back(p.epoch1_step(x, ds.labels, opt));
    // Mean of each block of 10 steps falls monotonically.
    double previous = 1e9;
    for (int block = 0; block < 5; ++block) {
        double m = 0.0;
        for (int i = 0; i < 10; ++i) m += losses[static_cast<std::size_t>(block * 10 + i)];
        CHECK(m / 10.0 < previous);
        previous = m / 10.0;
    }
    CHECK(losses.back() < 0.5 * losses.front());
}

TEST_CASE("freeze locks parameters and keeps outputs") {
    auto p = Projector<float>::init(6, 8, 3, 2);
    const auto z = random_latent(7, 6, 8);
    const auto before = values(p.project(z));
    const auto bytes = p.parameter_bytes();
    p.freeze(before);
    CHECK(p.frozen());
    CHECK(*p.sigma_ref() > 0.0);
    CHECK(p.aux_parameters().empty());
    CHECK(values(p.project(z)) == before);
    CHECK(p.parameter_bytes() == bytes);

    CHECK_THROWS_AS(p.mutable_parameters(), Error);
    for (const auto& t : p.parameters()) {
        CHECK(t.frozen());
        CHECK_THROWS_AS(t.mutable_data(), Error);
    }
    auto opt = projector_optimizer();
    const std::vector<int> labels(7, 0);
    try {
        p.epoch1_step(z, labels, opt);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::frozen_violation);
    }
    try {
        p.freeze(before);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::frozen_violation);
    }
}

TEST_CASE("degenerate reference points cannot freeze") {
    auto p = Projector<float>::init(6, 8, 3, 2);
    CHECK_THROWS_AS(p.freeze(std::vector<float>{1, 1, 1, 1, 1, 1}), Error);
    CHECK_THROWS_AS(p.freeze(std::vector<float>{1, 2}), Error);
    CHECK_FALSE(p.frozen());
}

TEST_CASE("gradient flows through a frozen projector into z") {
    auto p = Projector<float>::init(6, 8, 3, 2);
    p.freeze(std::vector<float>{0, 0, 1, 1, 2, 0});
    const auto w = ad::Tensor<float>::parameter({4, 6}, std::vector<float>(24, 0.1f));
    const auto z = ad::matmul(random_latent(5, 4, 1), w);
    const auto g = ad::backward(ad::sum(p.project(z)));
    double norm = 0.0;
    for (float v : g.of(w)) norm += std::abs(v);
    CHECK(norm > 0.0);
    for (const auto& t : p.parameters()) CHECK(g.find(t) == nullptr);
}
