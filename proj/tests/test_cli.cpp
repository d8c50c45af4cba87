#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "dqf/cli.hpp"
#include "dqf/core.hpp"
#include "dqf/csv.hpp"
#include "dqf/geometry.hpp"
#include "dqf/server.hpp"

#include <httplib.h>

namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("dqf_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "dqf");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = dqf::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream(path, std::ios::binary) << text;
}

/// Small cloud with one far point, written without an id column.
void write_cloud(const std::string& path) {
    std::ostringstream s;
    s << "x1,x2,x3\n";
    for (int i = 0; i < 30; ++i) {
        s << dqf::csv::format_real(std::sin(i * 1.3)) << ',' << dqf::csv::format_real(std::cos(i * 0.7)) << ','
          << dqf::csv::format_real(0.1 * (i % 7) - 0.3) << '\n';
    }
    s << "5,5,5\n";
    write_text(path, s.str());
}

}  // namespace

TEST_CASE("kernel input reproduces the unscaled coordinate path bit for bit") {
    TempDir dir;
    write_cloud(dir / "X.csv");
    const auto ds = dqf::load_dataset(dir / "X.csv");
    const dqf::Matrix k = dqf::gram_from_coordinates(ds.coords);
    std::ostringstream s;
    for (Eigen::Index r = 0; r < k.rows(); ++r) {
        for (Eigen::Index c = 0; c < k.cols(); ++c) s << (c ? "," : "") << dqf::csv::format_real(k(r, c));
        s << '\n';
    }
    write_text(dir / "K.csv", s.str());

    const auto a = run({"compute", dir / "X.csv", "--no-zscale", "-o", dir / "a.json"});
    REQUIRE(a.code == 0);
    const auto b = run({"compute", "--kernel", dir / "K.csv", "-o", dir / "b.json"});
    REQUIRE(b.code == 0);
    CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));

    const auto warned = run({"compute", "--kernel", dir / "K.csv", "--no-zscale", "-o", dir / "c.json"});
    CHECK(warned.code == 0);
    CHECK(warned.err.find("--no-zscale") != std::string::npos);
}

TEST_CASE("compute writes a bundle and a manifest") {
    TempDir dir;
    write_cloud(dir / "X.csv");
    const auto r = run({"compute", dir / "X.csv", "--angles", "0.5,0.785398,1.2", "--seed", "4", "-o",
                        dir / "bundle.json"});
    REQUIRE(r.code == 0);
    const auto bundle = nlohmann::json::parse(slurp(dir / "bundle.json"));
    CHECK(bundle.at("angles").size() == 3);
    CHECK(bundle.at("ids").size() == 31);
    const auto manifest = nlohmann::json::parse(slurp(dir / "bundle.manifest.json"));
    CHECK(manifest.at("seed") == 4);
    CHECK(manifest.at("outputs").at("bundle_sha256").get<std::string>().size() == 64);
}

TEST_CASE("missing input and bad usage map to distinct exit codes") {
    TempDir dir;
    const auto missing = run({"compute", dir / "nope.csv", "-o", dir / "b.json"});
    CHECK(missing.code == dqf::cli::kExitData);
    CHECK(missing.err.find("nope.csv") != std::string::npos);

    CHECK(run({}).code == dqf::cli::kExitUsage);
    CHECK(run({"frobnicate"}).code == dqf::cli::kExitUsage);
    write_cloud(dir / "X.csv");
    CHECK(run({"compute", dir / "X.csv", "--pairs", "zero"}).code == dqf::cli::kExitUsage);
    CHECK(run({"compute", dir / "X.csv", "--tips", "1", "-o", dir / "b.json"}).code != 0);

    write_text(dir / "bad.csv", "x1,x2\n1,2\n3,oops\n4,5\n");
    const auto bad = run({"compute", dir / "bad.csv", "-o", dir / "b.json"});
    CHECK(bad.code == dqf::cli::kExitData);
    CHECK(bad.err.find("row 3") != std::string::npos);
}

TEST_CASE("simulate, compute and score with labels") {
    TempDir dir;
    const auto sim = run({"simulate", "table1-row1", "--seed", "3", "-o", dir / "row1.csv"});
    REQUIRE(sim.code == 0);
    CHECK(fs::exists(dir / "row1_labels.csv"));
    REQUIRE(run({"compute", dir / "row1.csv", "--pairs", "20", "--tips", "60", "-o", dir / "b.json"}).code == 0);

    const auto score = run({"score", dir / "b.json", "--labels", dir / "row1_labels.csv", "-o", dir / "r.json"});
    REQUIRE(score.code == 0);
    CHECK(score.out.find("AUC") != std::string::npos);
    const auto report = nlohmann::json::parse(slurp(dir / "r.json"));
    CHECK(report.at("flags").at("method") == "first_unique_argmin");
    CHECK(report.contains("auc"));

    const auto fixed = run({"score", dir / "b.json", "--delta", "0.42", "-o", dir / "r2.json"});
    REQUIRE(fixed.code == 0);
    CHECK(nlohmann::json::parse(slurp(dir / "r2.json")).at("flags").at("method") == "score_at_delta");

    const auto list = run({"simulate", "--list"});
    CHECK(list.code == 0);
    CHECK(list.out.find("annulus") != std::string::npos);
}

TEST_CASE("bundle server routes") {
    const std::string bundle = R"({"schema_version":"1.0"})";
    const std::string report = R"({"ranks":[1]})";
    dqf::BundleServer server(bundle, report);
    const int port = server.bind("127.0.0.1", 0);
    REQUIRE(port > 0);
    std::thread worker([&] { server.serve(); });
    for (int i = 0; i < 200 && !server.running(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));

    httplib::Client client("127.0.0.1", port);
    const auto health = client.Get("/api/health");
    REQUIRE(health);
    CHECK(health->status == 200);
    CHECK(health->body == "ok");

    const auto b = client.Get("/api/bundle");
    REQUIRE(b);
    CHECK(b->body == bundle);
    CHECK(b->get_header_value("ETag") == server.etag());
    const auto again = client.Get("/api/bundle", {{"If-None-Match", server.etag()}});
    REQUIRE(again);
    CHECK(again->status == 304);

    const auto r = client.Get("/api/report");
    REQUIRE(r);
    CHECK(r->body == report);
    const auto missing = client.Get("/api/other");
    REQUIRE(missing);
    CHECK(missing->status == 404);

    dqf::BundleServer second(bundle, std::nullopt);
    CHECK(second.bind("127.0.0.1", port) == -1);

    server.stop();
    worker.join();
}

TEST_CASE("report route is 404 without a report") {
    dqf::BundleServer server("{}", std::nullopt);
    const int port = server.bind("127.0.0.1", 0);
    REQUIRE(port > 0);
    std::thread worker([&] { server.serve(); });
    for (int i = 0; i < 200 && !server.running(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));
    httplib::Client client("127.0.0.1", port);
    const auto r = client.Get("/api/report");
    REQUIRE(r);
    CHECK(r->status == 404);
    server.stop();
    worker.join();
}
