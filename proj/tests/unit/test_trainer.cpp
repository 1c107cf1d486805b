#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "hill/error.hpp"
#include "hill/trainer/config.hpp"
#include "hill/trainer/experiment.hpp"
#include "hill/trainer/log.hpp"
#include "hill/trainer/run.hpp"
#include "hill/trainer/session.hpp"

using namespace hill;
using namespace hill::trainer;

namespace {

std::shared_ptr<const data::Dataset> small_dataset() {
    static const auto ds = [] {
        const std::vector<double> fractions{0.8, 0.2};
        return std::make_shared<const data::Dataset>(data::split(data::gen_blobs(3, 125, 4, 1.5, 1.0, 1), fractions, 1));
    }();
    return ds;
}

SessionConfig small_config(Mode mode = Mode::baseline, std::uint64_t seed = 3) {
    SessionConfig cfg;
    cfg.dataset = small_dataset();
    cfg.dataset_spec = "test-blobs";
    cfg.backbone = models::BackboneSpec::mlp({4, 16, 8}, 2, 3);
    cfg.optimizer.learning_rate = 1e-2;
    cfg.batch_size = 32;
    cfg.total_epochs = 6;
    cfg.pretrain_epochs = 3;
    cfg.seed = seed;
    cfg.mode = mode;
    if (mode != Mode::baseline) {
        cfg.intervention_epochs = {3, 4, 5};
        cfg.strategy = strategies::study_analog();
    }
    return cfg;
}

void check_same(const ExperimentLog& a, const ExperimentLog& b) {
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CAPTURE(i);
        CHECK(a.records[i].same_values(b.records[i]));
    }
}

std::vector<float> backbone_values(const Session& s) {
    std::vector<float> out;
    for (const auto& t : s.backbone().parameters()) out.insert(out.end(), t.data().begin(), t.data().end());
    return out;
}

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::invalid_argument;
}

}  // namespace

TEST_CASE("a partial last batch is kept") {
    CHECK(small_dataset()->train.size() == 300);
    Session s(small_config());
    s.control(Command::resume());
    int batches = 0;
    REQUIRE(s.train_epoch([&] {
        ++batches;
        return true;
    }));
    CHECK(batches == 10);
}

TEST_CASE("baseline run logs every epoch without guidance") {
    const auto log = run(small_config());
    REQUIRE(log.records.size() == 6);
    for (std::size_t i = 0; i < log.records.size(); ++i) {
        const auto& r = log.records[i];
        CHECK(r.epoch == static_cast<int>(i) + 1);
        CHECK(r.l_human == 0.0);
        CHECK(r.layout_id == 0);
        CHECK(r.l_global == r.l_ce);
        CHECK(std::isfinite(r.val_loss));
    }
    CHECK(log.summary.status == "finished");
    CHECK(log.summary.epochs_completed == 6);
    CHECK(log.summary.layouts_committed == 0);
    CHECK(log.summary.final_val_acc == log.records.back().val_acc);
    CHECK(log.records.back().val_acc > 0.5);
}

TEST_CASE("scripted run commits one layout per intervention") {
    const auto log = run(small_config(Mode::scripted));
    REQUIRE(log.records.size() == 6);
    CHECK(log.summary.layouts_committed == 3);
    for (int e = 1; e <= 3; ++e) CHECK(log.records[static_cast<std::size_t>(e - 1)].layout_id == 0);
    CHECK(log.records[3].layout_id == 1);
    CHECK(log.records[4].layout_id == 2);
    CHECK(log.records[5].layout_id == 3);
    CHECK(log.records[3].l_human > 0.0);
    CHECK(log.records[3].scale_model > 0.0);
}

TEST_CASE("same seed gives bitwise identical logs") {
    check_same(run(small_config(Mode::scripted)), run(small_config(Mode::scripted)));
    const auto other = run(small_config(Mode::baseline, 4));
    CHECK_FALSE(other.records.back().same_values(run(small_config()).records.back()));
}

TEST_CASE("skipping every intervention matches the baseline") {
    check_same(run(small_config(Mode::scripted), skip_source()), run(small_config()));
}

TEST_CASE("scripted run pauses at each intervention epoch") {
    Session s(small_config(Mode::scripted));
    std::vector<int> pauses;
    drive(s, strategy_source(strategies::study_analog()), [&](const LatentSnapshot& snap) {
        pauses.push_back(snap.epoch);
        CHECK(s.state().phase == Phase::paused_awaiting_edit);
    });
    CHECK(pauses == std::vector<int>{3, 4, 5});
    CHECK(s.state().phase == Phase::finished);
    CHECK(s.active_layout()->layout_id == 3);
    CHECK(s.active_layout()->committed_epoch == 5);
}

TEST_CASE("control commands follow the state table") {
    Session s(small_config(Mode::scripted));
    CHECK(s.state().phase == Phase::idle);
    CHECK(code_of([&] { s.control(Command::pause()); }) == ErrorCode::illegal_transition);
    CHECK(code_of([&] { s.control(Command::skip_intervention()); }) == ErrorCode::illegal_transition);
    CHECK(code_of([&] { s.commit({}, "test"); }) == ErrorCode::illegal_transition);
    CHECK(code_of([&] { s.train_epoch(); }) == ErrorCode::wrong_state);
    CHECK(code_of([&] { s.make_snapshot(); }) == ErrorCode::wrong_state);
    CHECK(s.state().phase == Phase::idle);

    CHECK(code_of([&] { s.control(Command::set_alpha(1.5)); }) == ErrorCode::invalid_argument);
    CHECK(code_of([&] { s.control(Command::set_alpha(NAN)); }) == ErrorCode::invalid_argument);
    CHECK(code_of([&] { s.control(Command::set_lambda(-0.1)); }) == ErrorCode::invalid_argument);
    CHECK(code_of([&] { s.control(Command::train_n(0)); }) == ErrorCode::invalid_argument);
    CHECK(code_of([&] { s.control({Command::Kind::train_n, 1.5}); }) == ErrorCode::invalid_argument);
    CHECK(s.alpha() == 0.5);
    s.control(Command::set_alpha(1.0));
    CHECK(s.alpha() == 1.0);
    s.control(Command::set_lambda(0.0));
    CHECK(s.lambda() == 0.0);

    s.control(Command::resume());
    CHECK(s.state().phase == Phase::training);
    CHECK(code_of([&] { s.control(Command::resume()); }) == ErrorCode::illegal_transition);
    s.control(Command::pause());
    CHECK(s.state().phase == Phase::training);
    REQUIRE(s.train_epoch());
    CHECK(s.state().phase == Phase::paused_awaiting_edit);
    CHECK(s.state().epoch == 1);
    CHECK(code_of([&] { s.control(Command::pause()); }) == ErrorCode::illegal_transition);
    CHECK(code_of([&] { s.train_epoch(); }) == ErrorCode::wrong_state);

    s.control(Command::skip_intervention());
    CHECK(s.state().phase == Phase::training);
    while (s.state().phase == Phase::training) s.train_epoch();
    CHECK(s.state().epoch == 3);
    s.control(Command::resume());
    while (s.state().phase == Phase::training || s.state().phase == Phase::paused_awaiting_edit) {
        if (s.state().phase == Phase::paused_awaiting_edit) s.control(Command::skip_intervention());
        s.train_epoch();
    }
    CHECK(s.state().phase == Phase::finished);
    for (const auto& c : {Command::pause(), Command::resume(), Command::skip_intervention(), Command::set_alpha(0.5),
                          Command::set_lambda(0.1), Command::train_n(1)}) {
        CHECK(code_of([&] { s.control(c); }) == ErrorCode::illegal_transition);
    }
}

TEST_CASE("legal transitions") {
    CHECK(is_legal_transition(Phase::idle, Phase::training));
    CHECK(is_legal_transition(Phase::training, Phase::paused_awaiting_edit));
    CHECK(is_legal_transition(Phase::training, Phase::finished));
    CHECK(is_legal_transition(Phase::paused_awaiting_edit, Phase::training));
    CHECK(is_legal_transition(Phase::paused_awaiting_edit, Phase::failed));
    CHECK(is_legal_transition(Phase::finished, Phase::finished));
    CHECK_FALSE(is_legal_transition(Phase::idle, Phase::paused_awaiting_edit));
    CHECK_FALSE(is_legal_transition(Phase::finished, Phase::training));
    CHECK_FALSE(is_legal_transition(Phase::failed, Phase::training));
    CHECK_FALSE(is_legal_transition(Phase::paused_awaiting_edit, Phase::finished));
    CHECK(to_string(Phase::paused_awaiting_edit) == "paused_awaiting_edit");
    CHECK(parse_command_kind("train_n") == Command::Kind::train_n);
    CHECK_THROWS_AS(parse_command_kind("jump"), Error);
}

TEST_CASE("set_alpha 1 makes guided training match cross-entropy only") {
    auto cfg = small_config(Mode::scripted);
    cfg.guidance.alpha = 1.0;
    cfg.guidance.lambda = 0.0;
    const auto log = run(cfg);
    for (const auto& r : log.records) CHECK(r.l_global == doctest::Approx(r.l_ce));
}

TEST_CASE("train_n runs k epochs then pauses") {
    Session s(small_config());
    s.control(Command::train_n(2));
    while (s.state().phase == Phase::training) s.train_epoch();
    CHECK(s.state().phase == Phase::paused_awaiting_edit);
    CHECK(s.state().epoch == 2);
    s.control(Command::train_n(10));
    while (s.state().phase == Phase::training) s.train_epoch();
    CHECK(s.state().phase == Phase::finished);
    CHECK(s.state().epoch == 6);
}

TEST_CASE("evaluate does not change the model") {
    Session s(small_config());
    s.control(Command::resume());
    s.train_epoch();
    const auto before = backbone_values(s);
    const auto a = s.evaluate(data::Split::val);
    const auto b = s.evaluate(data::Split::val);
    CHECK(a.accuracy == b.accuracy);
    CHECK(a.mean_ce == b.mean_ce);
    CHECK(a.count == small_dataset()->val.size());
    CHECK(backbone_values(s) == before);
    CHECK(a.accuracy == s.log().records.back().val_acc);
    CHECK_THROWS_AS(s.evaluate(data::Split::test), Error);
}

TEST_CASE("snapshots keep the same points across epochs") {
    Session s(small_config(Mode::scripted));
    std::vector<std::shared_ptr<const LatentSnapshot>> snaps;
    drive(s, skip_source(), [&](const LatentSnapshot&) { snaps.push_back(s.latest_snapshot()); });
    REQUIRE(snaps.size() == 3);
    CHECK(snaps[0]->points.size() == small_dataset()->val.size());
    for (const auto& snap : snaps) {
        REQUIRE(snap->points.size() == snaps[0]->points.size());
        std::size_t wrong = 0;
        for (std::size_t i = 0; i < snap->points.size(); ++i) {
            const auto& p = snap->points[i];
            CHECK(p.point_id == snaps[0]->points[i].point_id);
            CHECK(p.label == snaps[0]->points[i].label);
            CHECK(p.misclassified == (p.predicted != p.label));
            wrong += p.misclassified ? 1 : 0;
        }
        CHECK(snap->subsample_acc ==
              doctest::Approx(1.0 - static_cast<double>(wrong) / static_cast<double>(snap->points.size())));
        CHECK(snap->classes.size() == 3);
        CHECK(snap->val_acc == s.log().records[static_cast<std::size_t>(snap->epoch - 1)].val_acc);
    }
    CHECK(snaps[1]->points[0].x != snaps[0]->points[0].x);
}

TEST_CASE("snapshot subsample is stratified") {
    auto cfg = small_config(Mode::scripted);
    cfg.snapshot_size = 10;
    Session s(cfg);
    const auto& idx = s.snapshot_indices();
    REQUIRE(idx.size() == 10);
    CHECK(std::is_sorted(idx.begin(), idx.end()));
    std::vector<int> per_class(3, 0);
    for (auto i : idx) ++per_class[static_cast<std::size_t>(small_dataset()->labels[i])];
    for (int n : per_class) CHECK(n >= 3);
}

TEST_CASE("a diverging run fails with attribution") {
    auto cfg = small_config();
    cfg.optimizer.kind = ad::OptimizerKind::sgd;
    cfg.optimizer.learning_rate = 1e30;
    const auto log = run(cfg);
    CHECK(log.summary.status == "failed");
    CHECK(log.summary.failure.find("non-finite") != std::string::npos);
    CHECK(log.summary.failure.rfind("epoch ", 0) == 0);
}

TEST_CASE("config validation names the field") {
    auto expect = [](SessionConfig cfg, const std::string& field) {
        try {
            cfg.validate();
            FAIL("expected an error for " << field);
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::invalid_argument);
            CHECK(e.detail().find(field) != std::string::npos);
        }
    };
    CHECK_NOTHROW(small_config(Mode::scripted).validate());
    auto c = small_config();
    c.pretrain_epochs = 0;
    expect(c, "pretrain");
    c = small_config(Mode::scripted);
    c.intervention_epochs = {2, 4};
    expect(c, "intervention");
    c = small_config(Mode::scripted);
    c.intervention_epochs = {4, 4};
    expect(c, "intervention");
    c = small_config(Mode::scripted);
    c.intervention_epochs = {6};
    expect(c, "intervention");
    c = small_config(Mode::scripted);
    c.strategy.reset();
    expect(c, "strategy");
    c = small_config();
    c.guidance.alpha = 1.5;
    expect(c, "alpha");
    c = small_config();
    c.batch_size = 0;
    expect(c, "batch_size");
    c = small_config();
    c.backbone = models::BackboneSpec::mlp({5, 8}, 1, 3);
    expect(c, "backbone");
    c = small_config();
    c.snapshot_size = 2;
    expect(c, "snapshot");
}

TEST_CASE("experiment options") {
    ExperimentOptions o;
    o.epochs = 30;
    o.interventions = "compact:0.6@25";
    const auto cfg = make_session_config(o);
    CHECK(cfg.mode == Mode::scripted);
    CHECK(cfg.intervention_epochs == std::vector<int>{25});
    CHECK(cfg.guidance.alpha == 0.5);
    CHECK(cfg.guidance.lambda == 0.1);
    CHECK(cfg.pretrain_epochs == 25);

    const auto round = parse_options_json(to_json(o));
    CHECK(round.epochs == 30);
    CHECK(round.interventions == o.interventions);
    CHECK(code_of([] { parse_options_json(R"({"epochz":3})"); }) == ErrorCode::invalid_argument);
    CHECK(code_of([] { parse_options_json("{"); }) == ErrorCode::parse_error);
    CHECK(code_of([] { resolve_dataset("csv:/nonexistent/file.csv", 0); }) == ErrorCode::io_error);
    CHECK(code_of([] { resolve_dataset("mnist", 0); }) == ErrorCode::invalid_argument);
    CHECK(resolve_dataset("rings", 0)->num_classes() == 3);
}

TEST_CASE("experiment log JSONL round trip") {
    auto log = run(small_config(Mode::scripted));
    const auto text = log.to_jsonl();
    const auto back = ExperimentLog::parse_jsonl(text);
    check_same(log, back);
    CHECK(back.summary.status == log.summary.status);
    CHECK(back.summary.layouts_committed == 3);
    CHECK(back.config_echo == log.config_echo);

    const auto path = std::filesystem::temp_directory_path() / "hill_test_log.jsonl";
    log.write(path);
    check_same(ExperimentLog::read(path), log);
    std::filesystem::remove(path);

    CHECK(code_of([] { ExperimentLog::parse_jsonl("{\"config\":{}}\n{\"epoch\":2}\n{\"epoch\":1}\n"); }) ==
          ErrorCode::parse_error);
    CHECK(code_of([] { ExperimentLog::parse_jsonl("not json\n"); }) == ErrorCode::parse_error);
}

TEST_CASE("same_values ignores wall time only") {
    EpochRecord a;
    a.epoch = 1;
    a.l_ce = 0.5;
    auto b = a;
    b.wall_ms = 99.0;
    CHECK(a.same_values(b));
    b.l_ce = std::nextafter(0.5, 1.0);
    CHECK_FALSE(a.same_values(b));
    CHECK(parse_record_json(record_json(a)).same_values(a));
}
