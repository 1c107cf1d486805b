#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "hill/diffcore/backward.hpp"
#include "hill/diffcore/ops.hpp"
#include "hill/error.hpp"
#include "hill/models/checkpoint.hpp"
#include "hill/util/rng.hpp"

using namespace hill;
using namespace hill::models;
namespace fs = std::filesystem;

namespace {

struct Fixture {
    Backbone<float> backbone = Backbone<float>::build(BackboneSpec::mlp({6, 12, 8}, 2, 3), 3);
    projection::Projector<float> projector = projection::Projector<float>::init(8, 5, 3, 4);
    ad::Optimizer<float> optimizer{ad::OptimizerConfig{}};

    Fixture() {
        Rng rng(1);
        std::vector<float> x(10 * 6);
        for (auto& v : x) v = static_cast<float>(rng.normal());
        const auto inputs = ad::Tensor<float>::input({10, 6}, x);
        const std::vector<int> labels{0, 1, 2, 0, 1, 2, 0, 1, 2, 0};
        const auto params = backbone.parameters();
        for (int i = 0; i < 3; ++i) {
            const auto out = backbone.forward_with_tap(inputs, false, 0);
            optimizer.step(params, ad::backward(ad::softmax_cross_entropy(out.logits, labels)));
        }
    }
};

std::vector<float> values(const ad::Tensor<float>& t) { return {t.data().begin(), t.data().end()}; }

void check_same(const Backbone<float>& a, const Backbone<float>& b) {
    REQUIRE(a.named_parameters().size() == b.named_parameters().size());
    for (std::size_t i = 0; i < a.named_parameters().size(); ++i) {
        CHECK(a.named_parameters()[i].name == b.named_parameters()[i].name);
        CHECK(values(a.named_parameters()[i].value) == values(b.named_parameters()[i].value));
    }
}

}  // namespace

TEST_CASE("checkpoint round trip restores everything bitwise") {
    Fixture f;
    const auto bytes = encode_checkpoint(f.backbone, f.projector, f.optimizer);
    CHECK(std::memcmp(bytes.data(), "HILLCKPT", 8) == 0);
    const auto ck = decode_checkpoint(bytes);
    check_same(f.backbone, ck.backbone);
    CHECK(ck.projector.parameter_bytes() == f.projector.parameter_bytes());
    CHECK(ck.projector.aux_parameters().size() == f.projector.aux_parameters().size());
    CHECK_FALSE(ck.projector.frozen());
    CHECK(ck.optimizer.step_count() == 3);
    CHECK(ck.optimizer.first_moments() == f.optimizer.first_moments());
    CHECK(ck.optimizer.second_moments() == f.optimizer.second_moments());
    CHECK(encode_checkpoint(ck.backbone, ck.projector, ck.optimizer) == bytes);
}

TEST_CASE("frozen projector survives the round trip as frozen") {
    Fixture f;
    f.projector.freeze(std::vector<float>{0, 0, 2, 0, 0, 2, 2, 2});
    const auto path = fs::temp_directory_path() / "hill_ck_frozen.bin";
    save_checkpoint(path, f.backbone, f.projector, f.optimizer);
    const auto ck = load_checkpoint(path);
    CHECK(ck.projector.frozen());
    CHECK(ck.projector.sigma_ref().value() == doctest::Approx(1.0));
    CHECK(ck.projector.parameter_bytes() == f.projector.parameter_bytes());
    CHECK(ck.projector.aux_parameters().empty());
    CHECK_THROWS_AS(ck.projector.mutable_parameters(), Error);
}

TEST_CASE("corrupt checkpoints are rejected") {
    Fixture f;
    const auto bytes = encode_checkpoint(f.backbone, f.projector, f.optimizer);

    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(decode_checkpoint(bad_magic), Error);

    auto bad_version = bytes;
    bad_version[8] = 9;
    try {
        decode_checkpoint(bad_version);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::format_error);
    }

    auto truncated = bytes;
    truncated.resize(bytes.size() - 5);
    CHECK_THROWS_AS(decode_checkpoint(truncated), Error);

    auto bad_header = bytes;
    bad_header[16] = '#';
    CHECK_THROWS_AS(decode_checkpoint(bad_header), Error);

    CHECK_THROWS_AS(decode_checkpoint(std::vector<std::uint8_t>(4, 0)), Error);
}

TEST_CASE("header shape disagreement is a shape error") {
    Fixture f;
    auto bytes = encode_checkpoint(f.backbone, f.projector, f.optimizer);
    std::uint32_t header_len = 0;
    std::memcpy(&header_len, bytes.data() + 12, 4);
    std::string header(bytes.begin() + 16, bytes.begin() + 16 + header_len);
    // dense1.weight is [6, 12]; claim [12, 6] instead (same byte length).
    const auto pos = header.find("[6,12]");
    REQUIRE(pos != std::string::npos);
    header.replace(pos, 6, "[12,6]");
    std::copy(header.begin(), header.end(), bytes.begin() + 16);
    try {
        decode_checkpoint(bytes);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::shape_mismatch);
    }
}

TEST_CASE("loading a missing file is an io error") {
    CHECK_THROWS_AS(load_checkpoint(fs::temp_directory_path() / "hill_no_such_checkpoint.bin"), Error);
}
