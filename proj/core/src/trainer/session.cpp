#include "hill/trainer/session.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "hill/diffcore/backward.hpp"
#include "hill/diffcore/ops.hpp"
#include "hill/error.hpp"
#include "hill/guidance/losses.hpp"
#include "hill/util/rng.hpp"

namespace hill::trainer {

std::string to_string(Phase phase) {
    switch (phase) {
        case Phase::idle: return "idle";
        case Phase::training: return "training";
        case Phase::paused_awaiting_edit: return "paused_awaiting_edit";
        case Phase::finished: return "finished";
        case Phase::failed: return "failed";
    }
    return "?";
}

bool is_legal_transition(Phase from, Phase to) noexcept {
    if (from == to) return true;
    if (to == Phase::failed) return true;
    switch (from) {
        case Phase::idle: return to == Phase::training;
        case Phase::training: return to == Phase::paused_awaiting_edit || to == Phase::finished;
        case Phase::paused_awaiting_edit: return to == Phase::training;
        default: return false;
    }
}

std::string to_string(Command::Kind kind) {
    switch (kind) {
        case Command::Kind::pause: return "pause";
        case Command::Kind::resume: return "resume";
        case Command::Kind::skip_intervention: return "skip_intervention";
        case Command::Kind::set_alpha: return "set_alpha";
        case Command::Kind::set_lambda: return "set_lambda";
        case Command::Kind::train_n: return "train_n";
    }
    return "?";
}

Command::Kind parse_command_kind(const std::string& name) {
    for (auto k : {Command::Kind::pause, Command::Kind::resume, Command::Kind::skip_intervention,
                   Command::Kind::set_alpha, Command::Kind::set_lambda, Command::Kind::train_n}) {
        if (to_string(k) == name) return k;
    }
    throw Error(ErrorCode::invalid_argument, "unknown command '" + name + "'");
}

namespace {

constexpr std::uint64_t kShuffleStream = 0x5E1F0E;
constexpr std::size_t kEvalChunk = 512;

// Stratified draw of m validation indices, at least one per class, chosen
// with largest-remainder quotas.
std::vector<std::size_t> pick_subsample(const data::Dataset& ds, std::size_t m, std::uint64_t seed) {
    const std::size_t c_count = ds.num_classes();
    std::vector<std::vector<std::size_t>> by_class(c_count);
    for (auto i : ds.val) by_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);
    const double n = static_cast<double>(ds.val.size());

    std::vector<std::size_t> quota(c_count, 1);
    std::size_t assigned = c_count;
    std::vector<std::pair<double, std::size_t>> remainders;
    for (std::size_t c = 0; c < c_count; ++c) {
        const double exact = static_cast<double>(m) * static_cast<double>(by_class[c].size()) / n;
        const auto whole = std::min(by_class[c].size(), std::max<std::size_t>(1, static_cast<std::size_t>(exact)));
        assigned += whole - quota[c];
        quota[c] = whole;
        remainders.push_back({exact - static_cast<double>(whole), c});
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    while (assigned < m) {
        bool progressed = false;
        for (const auto& r : remainders) {
            if (assigned == m) break;
            if (quota[r.second] < by_class[r.second].size()) {
                ++quota[r.second];
                ++assigned;
                progressed = true;
            }
        }
        if (!progressed) break;
    }
    while (assigned > m) {
        // Only reachable when the one-per-class floor overshoots; take from the largest.
        auto it = std::max_element(quota.begin(), quota.end());
        --*it;
        --assigned;
    }

    std::vector<std::size_t> out;
    for (std::size_t c = 0; c < c_count; ++c) {
        Rng rng(derive_seed(seed, 0x5AB5A, c));
        auto pool = by_class[c];
        rng.shuffle(pool);
        out.insert(out.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(quota[c]));
    }
    std::sort(out.begin(), out.end());
    return out;
}

ad::Tensor<float> gather_inputs(const data::Dataset& ds, std::span<const std::size_t> idx) {
    const std::size_t f = ds.feature_count();
    std::vector<float> values(idx.size() * f);
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const auto row = ds.row(idx[r]);
        std::copy(row.begin(), row.end(), values.begin() + static_cast<std::ptrdiff_t>(r * f));
    }
    return ad::Tensor<float>::input({idx.size(), f}, std::move(values));
}

std::vector<int> gather_labels(const data::Dataset& ds, std::span<const std::size_t> idx) {
    std::vector<int> out(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) out[r] = ds.labels[idx[r]];
    return out;
}

int argmax_row(std::span<const float> logits, std::size_t row, std::size_t c) {
    const auto* p = logits.data() + row * c;
    return static_cast<int>(std::max_element(p, p + c) - p);
}

double row_ce(std::span<const float> logits, std::size_t row, std::size_t c, int label) {
    const auto* p = logits.data() + row * c;
    const double mx = *std::max_element(p, p + c);
    double s = 0.0;
    for (std::size_t k = 0; k < c; ++k) s += std::exp(static_cast<double>(p[k]) - mx);
    return mx + std::log(s) - static_cast<double>(p[label]);
}

}  // namespace

Session::Session(SessionConfig config) : config_(std::move(config)) {
    config_.validate();
    guidance_ = config_.guidance;
    backbone_ = models::Backbone<float>::build(config_.backbone, derive_seed(config_.seed, 0xB0, 0));
    projector_ = projection::Projector<float>::init(config_.backbone.latent_dim(), config_.projector_hidden,
                                                     config_.dataset->num_classes(),
                                                     derive_seed(config_.seed, 0x9A, 0));
    optimizer_ = ad::Optimizer<float>(config_.optimizer);
    ad::OptimizerConfig proj_cfg;
    proj_cfg.kind = ad::OptimizerKind::adam;
    proj_cfg.learning_rate = config_.projector_learning_rate;
    projector_optimizer_ = ad::Optimizer<float>(proj_cfg);
    snapshot_indices_ = pick_subsample(*config_.dataset, config_.effective_snapshot_size(),
                                       derive_seed(config_.seed, 0x55, 0));
    log_.config_echo = config_.echo_json();
}

void Session::fail(std::string reason) {
    state_.phase = Phase::failed;
    state_.reason = reason;
    log_.summary.status = "failed";
    log_.summary.failure = std::move(reason);
    finish_summary();
}

void Session::finish_summary() {
    auto& s = log_.summary;
    s.epochs_completed = state_.epoch;
    s.final_val_acc = log_.records.empty() ? 0.0 : log_.records.back().val_acc;
    s.best_val_acc = 0.0;
    for (const auto& r : log_.records) s.best_val_acc = std::max(s.best_val_acc, r.val_acc);
}

void Session::mark_interrupted() {
    if (state_.phase == Phase::finished || state_.phase == Phase::failed) return;
    log_.summary.status = "interrupted";
    finish_summary();
}

SessionState Session::control(const Command& command) {
    const Phase phase = state_.phase;
    auto illegal = [&]() {
        throw Error(ErrorCode::illegal_transition,
                    to_string(command.kind) + " is not allowed while " + to_string(phase));
    };
    if (phase == Phase::finished || phase == Phase::failed) illegal();

    switch (command.kind) {
        case Command::Kind::pause:
            if (phase != Phase::training) illegal();
            pause_requested_ = true;
            break;
        case Command::Kind::resume:
            if (phase == Phase::training) illegal();
            state_.phase = Phase::training;
            break;
        case Command::Kind::skip_intervention:
            if (phase != Phase::paused_awaiting_edit) illegal();
            state_.phase = Phase::training;
            break;
        case Command::Kind::set_alpha:
            if (!(command.value >= 0.0 && command.value <= 1.0)) {
                throw Error(ErrorCode::invalid_argument, "alpha must be in [0, 1]");
            }
            guidance_.alpha = command.value;
            break;
        case Command::Kind::set_lambda:
            if (!(command.value >= 0.0) || !std::isfinite(command.value)) {
                throw Error(ErrorCode::invalid_argument, "lambda must be a finite value >= 0");
            }
            guidance_.lambda = command.value;
            break;
        case Command::Kind::train_n: {
            const double k = command.value;
            if (!(k >= 1.0) || k != std::floor(k) || k > 1e6) {
                throw Error(ErrorCode::invalid_argument, "train_n needs a positive whole number of epochs");
            }
            epoch_budget_ = static_cast<int>(k);
            pause_requested_ = false;
            state_.phase = Phase::training;
            break;
        }
    }
    return state_;
}

std::optional<EpochRecord> Session::train_epoch(const BatchHook& hook) {
    if (state_.phase != Phase::training) {
        throw Error(ErrorCode::wrong_state, "train_epoch needs the training state, not " + to_string(state_.phase));
    }
    const auto started = std::chrono::steady_clock::now();
    const int epoch = state_.epoch + 1;
    const auto& ds = *config_.dataset;

    std::vector<std::size_t> order = ds.train;
    Rng(derive_seed(config_.seed, kShuffleStream, static_cast<std::uint64_t>(epoch))).shuffle(order);

    const auto params = backbone_.parameters();
    const auto* layout = active_layout();
    LossBreakdown sums;
    std::size_t batches = 0;
    const std::size_t bs = config_.batch_size;

    for (std::size_t start = 0; start < order.size(); start += bs) {
        if (hook && !hook()) return std::nullopt;
        if (state_.phase == Phase::failed) return std::nullopt;
        const std::span<const std::size_t> idx(order.data() + start, std::min(bs, order.size() - start));
        const auto x = gather_inputs(ds, idx);
        const auto labels = gather_labels(ds, idx);

        const auto tap = backbone_.forward_with_tap(
            x, true, derive_seed(config_.seed, static_cast<std::uint64_t>(epoch), batches));
        if (!projector_.frozen()) {
            try {
                projector_.epoch1_step(tap.latent, labels, projector_optimizer_);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::non_finite) throw;
                fail("epoch " + std::to_string(epoch) + ": non-finite projector gradient");
                return std::nullopt;
            }
        }
        const auto points = projector_.project(tap.latent);

        auto cfg = guidance_;
        cfg.sigma_ref = projector_.sigma_ref();
        const auto gl = guidance::global_loss(tap.logits, labels, points, layout, cfg);
        const auto& b = gl.breakdown;

        if (!std::isfinite(static_cast<double>(gl.loss.item()))) {
            std::string term = "l_global";
            if (!std::isfinite(b.l_ce)) term = "l_ce";
            else if (!std::isfinite(b.center_term)) term = "center";
            else if (!std::isfinite(b.spread_term)) term = "spread";
            else if (!std::isfinite(b.separation_term)) term = "separation";
            else if (!std::isfinite(b.scale_model)) term = "scale_model";
            fail("epoch " + std::to_string(epoch) + ": non-finite " + term);
            return std::nullopt;
        }

        const auto grads = ad::backward(gl.loss);
        try {
            optimizer_.step(params, grads);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::non_finite) throw;
            fail("epoch " + std::to_string(epoch) + ": non-finite gradient");
            return std::nullopt;
        }

        sums.l_ce += b.l_ce;
        sums.l_human += b.l_human;
        sums.center_term += b.center_term;
        sums.spread_term += b.spread_term;
        sums.separation_term += b.separation_term;
        sums.scale_model += b.scale_model;
        sums.l_global += b.l_global;
        ++batches;
    }

    if (!projector_.frozen()) {
        const auto tap = backbone_.forward_with_tap(gather_inputs(ds, snapshot_indices_), false, 0);
        const auto points = projector_.project(tap.latent);
        try {
            projector_.freeze(points.data());
        } catch (const Error& e) {
            fail("epoch " + std::to_string(epoch) + ": projector freeze failed: " + e.detail());
            return std::nullopt;
        }
    }

    const auto eval = evaluate(data::Split::val);
    const double n = static_cast<double>(std::max<std::size_t>(1, batches));
    EpochRecord rec;
    rec.epoch = epoch;
    rec.l_ce = sums.l_ce / n;
    rec.l_human = sums.l_human / n;
    rec.center = sums.center_term / n;
    rec.spread = sums.spread_term / n;
    rec.separation = sums.separation_term / n;
    rec.scale_model = sums.scale_model / n;
    rec.l_global = sums.l_global / n;
    rec.val_acc = eval.accuracy;
    rec.val_loss = eval.mean_ce;
    rec.layout_id = layout ? layout->layout_id : 0;
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();

    log_.records.push_back(rec);
    state_.epoch = epoch;
    latest_snapshot_ = make_snapshot();

    bool budget_done = false;
    if (epoch_budget_ > 0) budget_done = --epoch_budget_ == 0;
    const bool intervention =
        config_.mode != Mode::baseline &&
        std::binary_search(config_.intervention_epochs.begin(), config_.intervention_epochs.end(), epoch);

    if (epoch >= config_.total_epochs) {
        state_.phase = Phase::finished;
        log_.summary.status = "finished";
    } else if (intervention || pause_requested_ || budget_done) {
        state_.phase = Phase::paused_awaiting_edit;
        pause_requested_ = false;
        epoch_budget_ = 0;
    }
    finish_summary();
    return rec;
}

std::uint64_t Session::commit(const EditedPositions& edits, std::string source) {
    if (state_.phase != Phase::paused_awaiting_edit) {
        throw Error(ErrorCode::illegal_transition, "commit is only allowed while paused_awaiting_edit");
    }
    auto layout = guidance::commit_layout(edits, *latest_snapshot_, std::move(source), next_layout_id_);
    ++next_layout_id_;
    layout_ = std::move(layout);
    ++log_.summary.layouts_committed;
    state_.phase = Phase::training;
    return layout_->layout_id;
}

EvalResult Session::evaluate(data::Split split) const {
    const auto& ds = *config_.dataset;
    const auto& idx = ds.indices(split);
    if (idx.empty()) throw Error(ErrorCode::invalid_argument, "evaluate: split " + data::to_string(split) + " is empty");
    const std::size_t c = ds.num_classes();
    std::size_t correct = 0;
    double ce = 0.0;
    for (std::size_t start = 0; start < idx.size(); start += kEvalChunk) {
        const std::span<const std::size_t> part(idx.data() + start, std::min(kEvalChunk, idx.size() - start));
        const auto out = backbone_.forward_with_tap(gather_inputs(ds, part), false, 0);
        const auto logits = out.logits.data();
        for (std::size_t r = 0; r < part.size(); ++r) {
            const int label = ds.labels[part[r]];
            if (argmax_row(logits, r, c) == label) ++correct;
            ce += row_ce(logits, r, c, label);
        }
    }
    const double n = static_cast<double>(idx.size());
    return {static_cast<double>(correct) / n, ce / n, idx.size()};
}

std::shared_ptr<const LatentSnapshot> Session::make_snapshot() const {
    if (!projector_.frozen()) throw Error(ErrorCode::wrong_state, "make_snapshot: no snapshot before epoch 1 completes");
    const auto& ds = *config_.dataset;
    const std::size_t c = ds.num_classes();
    const auto out = backbone_.forward_with_tap(gather_inputs(ds, snapshot_indices_), false, 0);
    const auto points = projector_.project(out.latent);
    const auto xy = points.data();
    const auto logits = out.logits.data();

    auto snap = std::make_shared<LatentSnapshot>();
    snap->epoch = state_.epoch;
    snap->num_classes = c;
    snap->layout_id = layout_ ? layout_->layout_id : 0;
    std::vector<int> labels(snapshot_indices_.size());
    std::size_t correct = 0;
    for (std::size_t r = 0; r < snapshot_indices_.size(); ++r) {
        SnapshotPoint p;
        p.point_id = snapshot_indices_[r];
        p.x = xy[2 * r];
        p.y = xy[2 * r + 1];
        p.label = ds.labels[snapshot_indices_[r]];
        p.predicted = argmax_row(logits, r, c);
        p.misclassified = p.label != p.predicted;
        if (!p.misclassified) ++correct;
        labels[r] = p.label;
        snap->points.push_back(p);
    }
    snap->classes = guidance::batch_class_stats(xy, labels);
    snap->subsample_acc = static_cast<double>(correct) / static_cast<double>(snapshot_indices_.size());

    if (!log_.records.empty() && log_.records.back().epoch == state_.epoch) {
        const auto& r = log_.records.back();
        snap->val_acc = r.val_acc;
        snap->val_loss = r.val_loss;
        snap->loss = {r.l_ce, r.l_human, r.center, r.spread, r.separation, r.scale_model,
                      layout_ ? guidance_.lambda * std::abs(1.0 - r.scale_model) : 0.0, r.l_global};
    } else {
        const auto eval = evaluate(data::Split::val);
        snap->val_acc = eval.accuracy;
        snap->val_loss = eval.mean_ce;
    }
    return snap;
}

}  // namespace hill::trainer
