#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <httplib.h>
#include <json.hpp>

#include "hill/trainer/log.hpp"
#include "hill_cli/commands.hpp"

using namespace hill;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result invoke(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("hill_cli_test_" + name);
    fs::remove_all(dir);
    return dir;
}

int free_port() {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    socklen_t len = sizeof addr;
    int port = 0;
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0 &&
        ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) == 0) {
        port = ntohs(addr.sin_port);
    }
    ::close(fd);
    return port;
}

trainer::ExperimentLog make_log(std::vector<double> accs) {
    trainer::ExperimentLog log;
    log.config_echo = "{}";
    for (std::size_t i = 0; i < accs.size(); ++i) {
        trainer::EpochRecord r;
        r.epoch = static_cast<int>(i) + 1;
        r.val_acc = accs[i];
        log.records.push_back(r);
    }
    log.summary.status = "finished";
    log.summary.epochs_completed = static_cast<int>(accs.size());
    log.summary.final_val_acc = accs.back();
    return log;
}

}  // namespace

TEST_CASE("train writes the scripted run outputs") {
    const auto dir = scratch("train");
    const auto r = invoke({"train", "--dataset", "blobs-hard", "--epochs", "45", "--pretrain", "25", "--interventions",
                        "compact:0.6+sep:1.5@25,30,35,40", "--seed", "7", "--out", dir.string(), "--quiet"});
    CHECK(r.code == 0);
    CHECK(r.err.empty());
    CHECK(r.out.find("status finished") != std::string::npos);
    const auto log = trainer::ExperimentLog::read(dir / "log.jsonl");
    CHECK(log.records.size() == 45);
    CHECK(log.summary.layouts_committed == 4);
    CHECK(log.records.back().layout_id == 4);
    CHECK(fs::exists(dir / "config.json"));
    CHECK(fs::exists(dir / "checkpoint.bin"));
    for (const char* name : {"epoch_025.json", "epoch_030.json", "epoch_035.json", "epoch_040.json"}) {
        CHECK(fs::exists(dir / "snapshots" / name));
    }
    const auto config = nlohmann::json::parse(std::ifstream(dir / "config.json"));
    CHECK(config["seed"] == 7);
    fs::remove_all(dir);
}

TEST_CASE("bad inputs exit 2 without writing anything") {
    const auto dir = scratch("bad");
    auto r = invoke({"train", "--dataset", "csv:/definitely/missing.csv", "--out", dir.string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("missing.csv") != std::string::npos);
    CHECK_FALSE(fs::exists(dir));

    r = invoke({"train", "--alpha", "1.5", "--out", dir.string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("alpha") != std::string::npos);
    CHECK_FALSE(fs::exists(dir));

    r = invoke({"train", "--interventions", "compact:0.6@10", "--out", dir.string()});
    CHECK(r.code == 2);
    CHECK_FALSE(fs::exists(dir));

    r = invoke({"train", "--mode", "interactive", "--interventions", "keep@30", "--out", dir.string()});
    CHECK(r.code == 2);

    r = invoke({"train", "--epochs", "many", "--out", dir.string()});
    CHECK(r.code == 2);
    r = invoke({"train"});
    CHECK(r.code == 2);
    r = invoke({});
    CHECK(r.code == 2);
    r = invoke({"frobnicate"});
    CHECK(r.code == 2);
    r = invoke({"serve", "--bind", "nonsense"});
    CHECK(r.code == 2);
    CHECK_FALSE(fs::exists(dir));

    r = invoke({"--help"});
    CHECK(r.code == 0);
    CHECK(r.out.find("train") != std::string::npos);
}

TEST_CASE("compare logs") {
    const auto a = make_log({0.5, 0.6, 0.7, 0.8});
    const auto b = make_log({0.55, 0.7, 0.8, 0.82});

    const auto self = cli::compare_logs(a, a);
    for (const auto& row : self.rows) CHECK(row.delta == 0.0);
    CHECK(self.final_delta == 0.0);
    CHECK(self.epochs_to_threshold_a == self.epochs_to_threshold_b);

    const auto c = cli::compare_logs(a, b);
    CHECK(c.threshold == 0.8);
    CHECK(c.epochs_to_threshold_a == 4);
    CHECK(c.epochs_to_threshold_b == 3);
    CHECK(c.final_delta == doctest::Approx(0.02));

    const auto none = cli::compare_logs(a, b, 0.99);
    CHECK_FALSE(none.epochs_to_threshold_a.has_value());
    CHECK_FALSE(none.epochs_to_threshold_b.has_value());
    CHECK(nlohmann::json::parse(cli::comparison_json(none))["epochs_to_threshold_a"].is_null());

    const auto csv = cli::comparison_csv(c);
    CHECK(csv.rfind("epoch,", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);

    CHECK_THROWS(cli::compare_logs(a, make_log({0.5, 0.6})));
}

TEST_CASE("compare command") {
    const auto dir = scratch("compare");
    fs::create_directories(dir);
    make_log({0.5, 0.6, 0.7}).write(dir / "a.jsonl");
    make_log({0.6, 0.7, 0.75}).write(dir / "b.jsonl");
    make_log({0.6, 0.7}).write(dir / "short.jsonl");

    auto r = invoke({"compare", (dir / "a.jsonl").string(), (dir / "b.jsonl").string(), "--json",
                  (dir / "cmp.json").string(), "--csv", (dir / "cmp.csv").string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("final delta") != std::string::npos);
    const auto j = nlohmann::json::parse(std::ifstream(dir / "cmp.json"));
    CHECK(j["epochs_to_threshold_b"] == 2);
    CHECK(fs::exists(dir / "cmp.csv"));

    r = invoke({"compare", (dir / "a.jsonl").string(), (dir / "short.jsonl").string()});
    CHECK(r.code == 1);
    r = invoke({"compare", (dir / "a.jsonl").string(), (dir / "missing.jsonl").string()});
    CHECK(r.code == 2);
    r = invoke({"compare", (dir / "a.jsonl").string(), (dir / "b.jsonl").string(), "--threshold", "0.99"});
    CHECK(r.code == 0);
    CHECK(r.out.find("none") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("serve answers until shut down and refuses a taken port") {
    const int port = free_port();
    REQUIRE(port > 0);
    const std::string bind = "127.0.0.1:" + std::to_string(port);

    int code = -1;
    std::thread server([&] {
        std::ostringstream out, err;
        code = cli::run_cli({"serve", "--bind", bind}, out, err);
    });

    httplib::Client client("127.0.0.1", port);
    client.set_connection_timeout(1, 0);
    client.set_read_timeout(5, 0);
    bool live = false;
    for (int i = 0; i < 100 && !live; ++i) {
        auto res = client.Get("/sessions");
        live = res && res->status == 200;
        if (!live) std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    CHECK(live);

    const auto second = invoke({"serve", "--bind", bind});
    CHECK(second.code == 1);
    CHECK(second.err.find("cannot bind") != std::string::npos);

    cli::request_shutdown();
    server.join();
    CHECK(code == 0);
}
