#include "hill_cli/commands.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "hill/error.hpp"
#include "hill/models/checkpoint.hpp"
#include "hill/server/http.hpp"
#include "hill/server/service.hpp"
#include "hill/server/wire.hpp"
#include "hill/trainer/experiment.hpp"
#include "hill/trainer/run.hpp"

namespace hill::cli {

namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_shutdown{false};

constexpr int kOk = 0;
constexpr int kRuntime = 1;
constexpr int kUsage = 2;

bool is_input_error(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_argument:
        case ErrorCode::parse_error:
        case ErrorCode::io_error:
        case ErrorCode::not_found:
        case ErrorCode::format_error: return true;
        default: return false;
    }
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
    out << text;
}

struct TrainArgs {
    trainer::ExperimentOptions options;
    std::string mode;
    std::string out_dir;
    bool quiet = false;
};

int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err) {
    auto options = args.options;
    trainer::SessionConfig config;
    try {
        if (!args.mode.empty()) options.mode = trainer::parse_mode(args.mode);
        config = trainer::make_session_config(options);
        if (config.mode == trainer::Mode::interactive) {
            throw Error(ErrorCode::invalid_argument, "mode: interactive sessions run under 'serve'");
        }
    } catch (const Error& e) {
        err << "hill train: " << e.what() << '\n';
        return is_input_error(e.code()) ? kUsage : kRuntime;
    }

    try {
        const fs::path dir = args.out_dir;
        fs::create_directories(dir / "snapshots");
        trainer::Session session(config);
        const auto source = config.mode == trainer::Mode::scripted ? trainer::strategy_source(*config.strategy)
                                                                   : trainer::skip_source();
        trainer::drive(session, source, [&](const LatentSnapshot& snapshot) {
            char name[32];
            std::snprintf(name, sizeof name, "epoch_%03d.json", snapshot.epoch);
            write_text(dir / "snapshots" / name, server::snapshot_body(snapshot) + "\n");
        });

        write_text(dir / "config.json", session.log().config_echo + "\n");
        session.log().write(dir / "log.jsonl");
        if (session.projector().frozen()) {
            models::save_checkpoint(dir / "checkpoint.bin", session.backbone(), session.projector(),
                                    session.optimizer());
        }
        if (!args.quiet) {
            for (const auto& r : session.log().records) {
                out << "epoch " << r.epoch << "  val_acc " << r.val_acc << "  l_global " << r.l_global
                    << "  l_human " << r.l_human << "  layout " << r.layout_id << '\n';
            }
        }
        const auto& s = session.log().summary;
        out << "status " << s.status << "  epochs " << s.epochs_completed << "  final_val_acc " << s.final_val_acc
            << "  layouts " << s.layouts_committed << '\n';
        if (session.state().phase == trainer::Phase::failed) {
            err << "hill train: training failed: " << session.state().reason << '\n';
            return kRuntime;
        }
        return kOk;
    } catch (const std::exception& e) {
        err << "hill train: " << e.what() << '\n';
        return kRuntime;
    }
}

int cmd_compare(const std::string& a, const std::string& b, std::optional<double> threshold,
                const std::string& json_out, const std::string& csv_out, std::ostream& out, std::ostream& err) {
    trainer::ExperimentLog la, lb;
    try {
        la = trainer::ExperimentLog::read(a);
        lb = trainer::ExperimentLog::read(b);
    } catch (const Error& e) {
        err << "hill compare: " << e.what() << '\n';
        return kUsage;
    }
    try {
        const auto c = compare_logs(la, lb, threshold);
        auto fmt = [](const std::optional<int>& v) { return v ? std::to_string(*v) : std::string("none"); };
        out << "epoch  acc_a     acc_b     delta\n";
        for (const auto& r : c.rows) {
            char line[96];
            std::snprintf(line, sizeof line, "%5d  %.6f  %.6f  %+.6f\n", r.epoch, r.acc_a, r.acc_b, r.delta);
            out << line;
        }
        out << "final delta " << c.final_delta << '\n';
        out << "threshold " << c.threshold << "  epochs_to_threshold a " << fmt(c.epochs_to_threshold_a) << "  b "
            << fmt(c.epochs_to_threshold_b) << '\n';
        if (!json_out.empty()) write_text(json_out, comparison_json(c) + "\n");
        if (!csv_out.empty()) write_text(csv_out, comparison_csv(c));
        return kOk;
    } catch (const std::exception& e) {
        err << "hill compare: " << e.what() << '\n';
        return kRuntime;
    }
}

int cmd_serve(const std::string& bind, const std::string& config_path, const std::string& out_dir,
              std::ostream& out, std::ostream& err) {
    server::ServiceOptions options;
    const auto colon = bind.rfind(':');
    int port = -1;
    if (colon != std::string::npos) {
        try {
            std::size_t used = 0;
            port = std::stoi(bind.substr(colon + 1), &used);
            if (used != bind.size() - colon - 1) port = -1;
        } catch (const std::exception&) {
            port = -1;
        }
    }
    if (port < 0 || port > 65535 || colon == 0) {
        err << "hill serve: --bind must be HOST:PORT\n";
        return kUsage;
    }
    const std::string host = bind.substr(0, colon);

    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) {
            err << "hill serve: cannot open " << config_path << '\n';
            return kUsage;
        }
        try {
            const auto j = nlohmann::json::parse(in);
            for (const auto& [key, value] : j.items()) {
                if (key == "out_dir") options.out_dir = value.get<std::string>();
                else if (key == "max_sessions") options.max_sessions = value.get<std::size_t>();
                else throw Error(ErrorCode::invalid_argument, "unknown key '" + key + "'");
            }
        } catch (const std::exception& e) {
            err << "hill serve: " << config_path << ": " << e.what() << '\n';
            return kUsage;
        }
    }
    if (!out_dir.empty()) options.out_dir = out_dir;

    g_shutdown = false;
    server::Service service(options);
    server::HttpServer http(service);
    if (!http.bind(host, port)) {
        err << "hill serve: cannot bind " << bind << '\n';
        return kRuntime;
    }
    out << "listening on http://" << host << ':' << http.port() << std::endl;
    std::thread listener([&] { http.listen(); });
    while (!g_shutdown) std::this_thread::sleep_for(std::chrono::milliseconds(50));
    service.shutdown();
    http.stop();
    listener.join();
    out << "stopped" << std::endl;
    return kOk;
}

}  // namespace

void request_shutdown() { g_shutdown = true; }

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Human-in-the-loop latent space training"};
    app.require_subcommand(1);

    TrainArgs train;
    auto& o = train.options;
    auto* t = app.add_subcommand("train", "Run a baseline or scripted experiment");
    t->add_option("--dataset", o.dataset, "blobs-hard | rings | csv:PATH | idx:INPUTS,LABELS")->capture_default_str();
    t->add_option("--model", o.model, "mlp | conv1d")->capture_default_str();
    t->add_option("--epochs", o.epochs)->capture_default_str();
    t->add_option("--pretrain", o.pretrain)->capture_default_str();
    t->add_option("--interventions", o.interventions, "STRATEGY@EPOCHS, e.g. compact:0.6+sep:1.5@25,30,35,40");
    t->add_option("--mode", train.mode, "scripted | baseline (default: from --interventions)");
    t->add_option("--alpha", o.alpha)->capture_default_str();
    t->add_option("--lambda", o.lambda)->capture_default_str();
    t->add_option("--seed", o.seed)->capture_default_str();
    t->add_option("--batch-size", o.batch_size)->capture_default_str();
    t->add_option("--lr", o.learning_rate)->capture_default_str();
    t->add_option("--optimizer", o.optimizer, "adam | sgd")->capture_default_str();
    t->add_option("--dropout", o.dropout)->capture_default_str();
    t->add_option("--snapshot-size", o.snapshot_size, "0 = min(1000, validation size)");
    t->add_option("--out", train.out_dir, "Output directory")->required();
    t->add_flag("--quiet", train.quiet, "Only print the summary line");

    std::string log_a, log_b, json_out, csv_out;
    std::optional<double> threshold;
    auto* c = app.add_subcommand("compare", "Compare two experiment logs");
    c->add_option("log_a", log_a)->required();
    c->add_option("log_b", log_b)->required();
    c->add_option("--threshold", threshold, "Accuracy threshold (default: final accuracy of log_a)");
    c->add_option("--json", json_out, "Write the comparison as JSON");
    c->add_option("--csv", csv_out, "Write per-epoch rows as CSV");

    std::string bind = "127.0.0.1:8080", config_path, serve_out;
    auto* s = app.add_subcommand("serve", "Serve interactive sessions over HTTP");
    s->add_option("--bind", bind, "HOST:PORT")->capture_default_str();
    s->add_option("--config", config_path, "JSON file: {\"out_dir\": ..., \"max_sessions\": ...}");
    s->add_option("--out", serve_out, "Directory for per-session logs and checkpoints");

    std::vector<std::string> argv_store{"hill"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : argv_store) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e, out, err);
        err << "hill: " << e.what() << '\n';
        return kUsage;
    }

    if (t->parsed()) return cmd_train(train, out, err);
    if (c->parsed()) return cmd_compare(log_a, log_b, threshold, json_out, csv_out, out, err);
    return cmd_serve(bind, config_path, serve_out, out, err);
}

}  // namespace hill::cli
