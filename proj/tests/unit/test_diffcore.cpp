#include <doctest.h>

#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "hill/diffcore/backward.hpp"
#include "hill/diffcore/gradient_check.hpp"
#include "hill/diffcore/ops.hpp"
#include "hill/error.hpp"
#include "hill/util/rng.hpp"

using namespace hill;
using namespace hill::ad;

namespace {

using D = Tensor<double>;

std::vector<double> uniform_values(Rng& rng, std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return v;
}

// Values bounded away from zero (for relu/abs/sqrt kinks).
std::vector<double> away_from_zero(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.2, 1.5);
    return v;
}

D param(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
    const auto n = numel(shape);
    return D::parameter(std::move(shape), uniform_values(rng, n, lo, hi));
}

// Weighted sum so that every output coordinate gets a distinct upstream gradient.
D weighted_sum(const D& y, Rng& rng) {
    const auto w = D::input(y.shape(), uniform_values(rng, y.size(), -1.0, 1.0));
    return sum(mul(y, w));
}

void check_graph(const std::function<D()>& build, const std::vector<D>& params, const char* name) {
    const auto report = gradient_check<double>(build, params, {});
    INFO(name);
    CHECK(report.coordinates_checked > 0);
    CHECK(report.max_relative_error < 1e-4);
}

}  // namespace

TEST_CASE("relu zeroes negatives") {
    const auto x = Tensor<float>::input({3}, {-1.0f, 0.0f, 2.0f});
    const auto y = relu(x);
    CHECK(std::vector<float>(y.data().begin(), y.data().end()) == std::vector<float>{0.0f, 0.0f, 2.0f});
}

TEST_CASE("matmul by identity is the identity") {
    Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t n = 1 + rng.below(5), k = 1 + rng.below(5);
        const auto a = D::input({n, k}, uniform_values(rng, n * k, -3, 3));
        std::vector<double> eye(k * k, 0.0);
        for (std::size_t i = 0; i < k; ++i) eye[i * k + i] = 1.0;
        const auto y = matmul(a, D::input({k, k}, eye));
        CHECK(std::equal(y.data().begin(), y.data().end(), a.data().begin()));
    }
}

TEST_CASE("softmax cross-entropy of uniform logits is ln C") {
    const auto logits = Tensor<float>::input({1, 10}, std::vector<float>(10, 0.25f));
    const std::vector<int> labels{4};
    CHECK(softmax_cross_entropy(logits, labels).item() == doctest::Approx(std::log(10.0)).epsilon(1e-6));
}

TEST_CASE("backward of x*x at 3 is 6") {
    const auto x = D::parameter({1}, {3.0});
    const auto g = backward(mul(x, x));
    CHECK(g.of(x)[0] == doctest::Approx(6.0));
}

TEST_CASE("mean of n copies of x has gradient 1") {
    for (std::size_t n : {1u, 2u, 7u, 50u}) {
        const auto x = D::parameter({1}, {0.7});
        std::vector<D> copies(n, x);
        const auto g = backward(mean(concat<double>(copies)));
        CHECK(g.of(x)[0] == doctest::Approx(1.0));
    }
}

TEST_CASE("gradient accumulates over repeated use") {
    const auto x = D::parameter({2}, {1.5, -2.0});
    // loss = sum(x) + sum(x*x) + sum(3x): d/dx = 1 + 2x + 3
    const auto loss = add(add(sum(x), sum(mul(x, x))), sum(scale(x, 3.0)));
    const auto g = backward(loss).of(x);
    CHECK(g[0] == doctest::Approx(1 + 3.0 + 3));
    CHECK(g[1] == doctest::Approx(1 - 4.0 + 3));
}

TEST_CASE("unreachable parameters get zero gradients") {
    const auto x = D::parameter({2}, {1.0, 2.0});
    const auto unused = D::parameter({3}, {1.0, 2.0, 3.0});
    const auto g = backward(sum(x));
    CHECK(g.find(unused) == nullptr);
    CHECK(g.of(unused) == std::vector<double>(3, 0.0));
}

TEST_CASE("backward rejects a non-scalar loss") {
    const auto x = D::parameter({2}, {1.0, 2.0});
    try {
        backward(mul(x, x));
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::non_scalar_loss);
    }
}

TEST_CASE("shape mismatch names the op and both shapes") {
    const auto a = D::input({2, 3}, std::vector<double>(6, 1.0));
    const auto b = D::input({2, 3}, std::vector<double>(6, 1.0));
    try {
        matmul(a, b);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::shape_mismatch);
        const std::string msg = e.what();
        CHECK(msg.find("matmul") != std::string::npos);
        CHECK(msg.find(to_string(Shape{2, 3})) != std::string::npos);
    }
    CHECK_THROWS_AS(add(a, D::input({2}, {1.0, 2.0})), Error);
}

TEST_CASE("add broadcasts only along the leading axis") {
    const auto a = D::input({2, 3}, {1, 2, 3, 4, 5, 6});
    const auto b = D::input({3}, {10, 20, 30});
    const auto y = add(a, b);
    CHECK(std::vector<double>(y.data().begin(), y.data().end()) == std::vector<double>{11, 22, 33, 14, 25, 36});
    CHECK_THROWS_AS(add(a, D::input({2}, {1, 2})), Error);
}

TEST_CASE("dispatch by name") {
    const auto x = D::input({3}, {-1.0, 0.0, 2.0});
    const std::vector<D> ops{x};
    const auto y = forward<double>("relu", ops);
    CHECK(y.data()[2] == 2.0);
    CHECK(y.op() == "relu");
    try {
        forward<double>("softplus", ops);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::unknown_op);
    }
    CHECK(supported_ops().size() >= 22);
}

TEST_CASE("operands are not mutated") {
    const auto a = D::input({2}, {1.0, -1.0});
    const auto before = std::vector<double>(a.data().begin(), a.data().end());
    (void)tanh(a);
    (void)scale(a, 4.0);
    (void)abs(a);
    CHECK(std::vector<double>(a.data().begin(), a.data().end()) == before);
}

TEST_CASE("sqrt and abs take subgradient 0 at exactly 0") {
    const auto x = D::parameter({2}, {0.0, 0.0});
    const auto g = backward(add(sum(sqrt(x)), sum(abs(x)))).of(x);
    CHECK(g[0] == 0.0);
    CHECK(g[1] == 0.0);
}

TEST_CASE("forward and backward are bitwise deterministic") {
    auto run = [] {
        Rng rng(11);
        const auto w = Tensor<float>::parameter({4, 3}, std::vector<float>{0.1f, -0.2f, 0.3f, 0.4f, 0.5f, -0.6f,
                                                                           0.7f, 0.8f, -0.9f, 1.0f, 1.1f, 1.2f});
        const auto x = Tensor<float>::input({2, 4}, {1, 2, 3, 4, 5, 6, 7, 8});
        const std::vector<int> labels{0, 2};
        const auto loss = softmax_cross_entropy(tanh(matmul(x, w)), labels);
        auto g = backward(loss).of(w);
        g.push_back(loss.item());
        return g;
    };
    CHECK(run() == run());
}

TEST_CASE("gradient check is exact for a quadratic") {
    Rng rng(5);
    const auto x = param(rng, {6});
    const auto c = D::input({6}, uniform_values(rng, 6, -1, 1));
    const std::vector<D> params{x};
    const auto report = gradient_check<double>([&] { return sum(squared_difference(x, c)); }, params);
    CHECK(report.max_relative_error < 1e-8);
}

TEST_CASE("gradient check flags a non-finite loss") {
    const auto x = D::parameter({1}, {0.0});
    const std::vector<D> params{x};
    // sqrt(-x) at x = 0 turns NaN once x is perturbed upward.
    CHECK_THROWS_AS(gradient_check<double>([&] { return sum(sqrt(scale(x, -1.0))); }, params), Error);
}

TEST_CASE("every op matches finite differences on random shapes") {
    Rng rng(2024);
    int graphs = 0;
    for (int trial = 0; trial < 6; ++trial) {
        const std::size_t n = 1 + rng.below(4), m = 1 + rng.below(4), k = 1 + rng.below(4);

        {
            auto a = param(rng, {n, m}), b = param(rng, {n, m}), v = param(rng, {m});
            check_graph([&] { Rng r(1); return add(add(weighted_sum(add(a, b), r), weighted_sum(add(a, v), r)),
                                                   weighted_sum(sub(a, v), r)); },
                        {a, b, v}, "add/sub");
            check_graph([&] { Rng r(2); return weighted_sum(mul(a, b), r); }, {a, b}, "mul");
            check_graph([&] { Rng r(3); return weighted_sum(squared_difference(a, v), r); }, {a, v}, "squared_difference");
            graphs += 3;
        }
        {
            auto a = param(rng, {n, k}), b = param(rng, {k, m});
            check_graph([&] { Rng r(4); return weighted_sum(matmul(a, b), r); }, {a, b}, "matmul");
            ++graphs;
        }
        {
            auto x = D::parameter({n, m}, away_from_zero(rng, n * m));
            check_graph([&] { Rng r(5); return weighted_sum(relu(x), r); }, {x}, "relu");
            check_graph([&] { Rng r(6); return weighted_sum(abs(x), r); }, {x}, "abs");
            check_graph([&] { Rng r(7); return weighted_sum(tanh(x), r); }, {x}, "tanh");
            check_graph([&] { Rng r(8); return weighted_sum(sqrt(abs(x)), r); }, {x}, "sqrt");
            check_graph([&] { Rng r(9); return weighted_sum(add_scalar(scale(x, -1.7), 0.3), r); }, {x}, "scale");
            check_graph([&] { return add(sum(x), mean(mul(x, x))); }, {x}, "sum/mean");
            check_graph([&] { Rng r(10); return add(weighted_sum(sum_rows(x), r), weighted_sum(mean_rows(x), r)); }, {x},
                        "row reductions");
            check_graph([&] { Rng r(11); return weighted_sum(norm_last(x), r); }, {x}, "norm_last");
            check_graph([&] { Rng r(12); return weighted_sum(reshape(x, {m, n}), r); }, {x}, "reshape");
            graphs += 9;
        }
        {
            auto a = param(rng, {n, m}), b = param(rng, {k, m});
            const std::vector<D> parts{a, b, a};
            check_graph([&] { Rng r(13); return weighted_sum(concat<double>(parts), r); }, {a, b}, "concat");
            std::vector<std::size_t> rows;
            for (std::size_t i = 0; i < n + 2; ++i) rows.push_back(rng.below(n));
            check_graph([&] { Rng r(14); return weighted_sum(gather_rows(a, rows), r); }, {a}, "gather_rows");
            graphs += 2;
        }
        {
            const std::size_t c = 2 + rng.below(4);
            auto logits = param(rng, {n, c}, -2, 2);
            std::vector<int> labels(n);
            for (auto& l : labels) l = static_cast<int>(rng.below(c));
            check_graph([&] { return softmax_cross_entropy(logits, labels); }, {logits}, "softmax_cross_entropy");
            ++graphs;
        }
        {
            const std::size_t cin = 1 + rng.below(3), cout = 1 + rng.below(3), ks = 1 + rng.below(3);
            const std::size_t len = ks + 1 + rng.below(4);
            auto x = param(rng, {n, cin, len}), w = param(rng, {cout, cin, ks}), b = param(rng, {cout});
            check_graph([&] { Rng r(15); return weighted_sum(conv1d(x, w, b), r); }, {x, w, b}, "conv1d");
            ++graphs;
        }
        {
            const std::size_t ch = 1 + rng.below(3), window = 1 + rng.below(3), len = window * (1 + rng.below(3));
            // Distinct, well-spaced values so the argmax is stable under perturbation.
            std::vector<double> vals(n * ch * len);
            std::iota(vals.begin(), vals.end(), 0.0);
            rng.shuffle(vals);
            for (auto& v : vals) v *= 0.05;
            auto x = D::parameter({n, ch, len}, vals);
            check_graph([&] { Rng r(16); return weighted_sum(max_pool1d(x, window), r); }, {x}, "max_pool1d");
            ++graphs;
        }
        {
            // A random composite graph.
            auto x = param(rng, {n, 4}), w1 = param(rng, {4, 5}), w2 = param(rng, {5, 3}), b = param(rng, {5});
            std::vector<int> labels(n);
            for (auto& l : labels) l = static_cast<int>(rng.below(3));
            check_graph([&] {
                const auto h = tanh(add(matmul(x, w1), b));
                const auto logits = matmul(h, w2);
                return add(softmax_cross_entropy(logits, labels), scale(mean(norm_last(h)), 0.3));
            }, {x, w1, w2, b}, "composite");
            ++graphs;
        }
    }
    CHECK(graphs >= 100);
}
