#include <doctest.h>

#include <set>

#include "hill/diffcore/ops.hpp"
#include "hill/error.hpp"
#include "hill/models/backbone.hpp"
#include "hill/util/rng.hpp"

using namespace hill;
using namespace hill::models;

namespace {

ad::Tensor<float> random_batch(std::size_t b, std::size_t f, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<float> v(b * f);
    for (auto& x : v) x = static_cast<float>(rng.normal());
    return ad::Tensor<float>::input({b, f}, std::move(v));
}

std::vector<float> values(const ad::Tensor<float>& t) { return {t.data().begin(), t.data().end()}; }

}  // namespace

TEST_CASE("same spec and seed give bitwise equal parameters") {
    const auto spec = BackboneSpec::mlp({8, 64, 32}, 2, 3);
    const auto a = Backbone<float>::build(spec, 42);
    const auto b = Backbone<float>::build(spec, 42);
    const auto c = Backbone<float>::build(spec, 43);
    REQUIRE(a.named_parameters().size() == b.named_parameters().size());
    bool any_diff = false;
    for (std::size_t i = 0; i < a.named_parameters().size(); ++i) {
        CHECK(a.named_parameters()[i].name == b.named_parameters()[i].name);
        CHECK(values(a.named_parameters()[i].value) == values(b.named_parameters()[i].value));
        any_diff |= values(a.named_parameters()[i].value) != values(c.named_parameters()[i].value);
    }
    CHECK(any_diff);
}

TEST_CASE("mlp tap dimension") {
    const auto spec = BackboneSpec::mlp({8, 64, 32}, 2, 3);
    CHECK(spec.latent_dim() == 32);
    const auto model = Backbone<float>::build(spec, 1);
    const auto out = model.forward_with_tap(random_batch(5, 8, 1), false, 0);
    CHECK(out.latent.shape() == ad::Shape{5, 32});
    CHECK(out.logits.shape() == ad::Shape{5, 3});
}

TEST_CASE("conv tap dimension is channels times pooled length") {
    auto spec = BackboneSpec::conv(1, 32, {4, 6, 8}, 3, 3, 2);
    // 32 -> 30 -> 28 -> 26 after three valid convs, pooled by 2 -> 13.
    CHECK(spec.latent_dim() == 8 * 13);
    const auto model = Backbone<float>::build(spec, 1);
    const auto out = model.forward_with_tap(random_batch(2, 32, 2), false, 0);
    CHECK(out.latent.shape() == ad::Shape{2, 104});

    const auto global = BackboneSpec::conv(2, 20, {5, 7}, 4);
    CHECK(global.latent_dim() == 7);
    const auto g = Backbone<float>::build(global, 3).forward_with_tap(random_batch(3, 40, 3), false, 0);
    CHECK(g.latent.shape() == ad::Shape{3, 7});
    CHECK(g.logits.shape() == ad::Shape{3, 4});
}

TEST_CASE("parameter names are unique") {
    const auto model = Backbone<float>::build(BackboneSpec::conv(1, 16, {4, 4}, 3), 0);
    std::set<std::string> names;
    for (const auto& p : model.named_parameters()) CHECK(names.insert(p.name).second);
}

TEST_CASE("invalid specs are rejected") {
    CHECK_THROWS_AS(BackboneSpec::mlp({8, 64, 32}, 3, 3).validate(), Error);   // tap at the head
    CHECK_THROWS_AS(BackboneSpec::mlp({8, 64, 32}, 0, 3).validate(), Error);   // tap at the input
    CHECK_THROWS_AS(BackboneSpec::mlp({8, 0, 32}, 1, 3).validate(), Error);    // zero width
    CHECK_THROWS_AS(BackboneSpec::mlp({8, 64, 32}, 2, 1).validate(), Error);   // one class
    auto spec = BackboneSpec::mlp({8, 16}, 1, 2);
    spec.dropout_rate = 1.0;
    CHECK_THROWS_AS(spec.validate(), Error);
    CHECK_THROWS_AS(Backbone<float>::build(BackboneSpec::mlp({8, 64, 32}, 5, 3), 0), Error);
}

TEST_CASE("eval mode is deterministic") {
    const auto model = Backbone<float>::build(BackboneSpec::mlp({8, 16, 8}, 2, 3), 5);
    const auto x = random_batch(4, 8, 9);
    const auto a = model.forward_with_tap(x, false, 1);
    const auto b = model.forward_with_tap(x, false, 2);
    CHECK(values(a.latent) == values(b.latent));
    CHECK(values(a.logits) == values(b.logits));
}

TEST_CASE("batch of one") {
    const auto model = Backbone<float>::build(BackboneSpec::mlp({8, 16, 8}, 2, 3), 5);
    CHECK(model.forward_with_tap(random_batch(1, 8, 1), false, 0).latent.shape() == ad::Shape{1, 8});
}

TEST_CASE("zero dropout makes train and eval identical") {
    const auto model = Backbone<float>::build(BackboneSpec::mlp({8, 16, 8}, 2, 3), 5);
    const auto x = random_batch(4, 8, 9);
    CHECK(values(model.forward_with_tap(x, true, 77).logits) == values(model.forward_with_tap(x, false, 0).logits));
}

TEST_CASE("dropout is seeded") {
    auto spec = BackboneSpec::mlp({8, 32, 16}, 1, 3);
    spec.dropout_rate = 0.5;
    const auto model = Backbone<float>::build(spec, 5);
    const auto x = random_batch(4, 8, 9);
    CHECK(values(model.forward_with_tap(x, true, 7).logits) == values(model.forward_with_tap(x, true, 7).logits));
    CHECK(values(model.forward_with_tap(x, true, 7).logits) != values(model.forward_with_tap(x, true, 8).logits));
    CHECK(values(model.forward_with_tap(x, true, 7).logits) != values(model.forward_with_tap(x, false, 0).logits));
}

TEST_CASE("input width mismatch") {
    const auto model = Backbone<float>::build(BackboneSpec::mlp({8, 16}, 1, 3), 5);
    CHECK_THROWS_AS(model.forward_with_tap(random_batch(2, 7, 1), false, 0), Error);
}

TEST_CASE("cast to double keeps values") {
    const auto model = Backbone<float>::build(BackboneSpec::mlp({8, 16}, 1, 3), 5);
    const auto d = model.cast<double>();
    for (std::size_t i = 0; i < model.named_parameters().size(); ++i) {
        const auto& a = model.named_parameters()[i].value;
        const auto& b = d.named_parameters()[i].value;
        for (std::size_t j = 0; j < a.size(); ++j) CHECK(static_cast<double>(a.data()[j]) == b.data()[j]);
    }
}

TEST_CASE("backbone kind and activation names") {
    CHECK(parse_backbone_kind("conv1d") == BackboneKind::conv1d);
    CHECK(parse_activation("tanh") == Activation::tanh);
    CHECK_THROWS_AS(parse_backbone_kind("resnet"), Error);
}
