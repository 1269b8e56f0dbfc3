#include "helpers.hpp"
#include "tempus/cli.hpp"
#include "tempus/io.hpp"
#include "tempus/manifest.hpp"

#include <doctest.h>

#include <sstream>

using namespace tempus;
using testing_support::TempDir;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string manifest_json(const std::string& extra_model = "") {
    return R"({
  "run_id": "cli",
  "seed": 11,
  "tasks": [
    {"id": "from_file", "csv": "series.csv", "context_len": 24, "horizon": 6},
    {"id": "periodic", "generator": {"family": "periodic", "num_points": 160, "period": 12,
     "noise_scale": 0.2}, "context_len": 36, "horizon": 12}
  ],
  "models": ["seasonal_naive", "ses", "drift")" +
           extra_model + R"(]
})";
}

void write_inputs(const TempDir& dir, const std::string& manifest) {
    io::write_file(dir / "gen.json",
                   R"({"family": "additive_random", "num_points": 150, "noise_scale": 1.0, "seed": 5})");
    io::write_file(dir / "m.json", manifest);
}

}  // namespace

TEST_CASE("generate writes a series") {
    TempDir dir("cli_gen");
    write_inputs(dir, manifest_json());
    const auto r = run({"generate", (dir / "gen.json").string(), (dir / "series.csv").string()});
    CHECK(r.code == cli::kExitOk);
    CHECK(r.out.find("wrote 150 points") != std::string::npos);
    const std::string first = io::read_file(dir / "series.csv");
    CHECK(first.rfind("t,y\n", 0) == 0);
    run({"generate", (dir / "gen.json").string(), (dir / "again.csv").string()});
    CHECK(io::read_file(dir / "again.csv") == first);
    run({"generate", "--with-truth", (dir / "gen.json").string(), (dir / "truth.csv").string()});
    CHECK(io::read_file(dir / "truth.csv").rfind("t,y,y_base\n", 0) == 0);
}

TEST_CASE("generate, eval and report are deterministic") {
    TempDir dir("cli_eval");
    write_inputs(dir, manifest_json());
    REQUIRE(run({"generate", (dir / "gen.json").string(), (dir / "series.csv").string()}).code == 0);

    const auto a = run({"eval", (dir / "m.json").string(), "--out", (dir / "a").string()});
    INFO(a.err);
    REQUIRE(a.code == cli::kExitOk);
    const auto b = run({"eval", (dir / "m.json").string(), "--out", (dir / "b").string(),
                        "--threads", "4"});
    REQUIRE(b.code == cli::kExitOk);
    CHECK(a.out.substr(0, a.out.find("report written")) ==
          b.out.substr(0, b.out.find("report written")));
    for (const auto& entry : fs::directory_iterator(dir / "a")) {
        const auto name = entry.path().filename();
        CHECK(io::read_file(entry.path()) == io::read_file(dir / "b" / name));
    }
    CHECK(fs::exists(dir / "a" / "pivot_MASE.csv"));

    // Default output directory is named after the run next to the manifest.
    CHECK(run({"eval", (dir / "m.json").string()}).code == cli::kExitOk);
    CHECK(fs::exists(dir / "cli" / "leaderboard.csv"));

    const std::string leaderboard = io::read_file(dir / "a" / "leaderboard.csv");
    fs::remove(dir / "a" / "leaderboard.csv");
    const auto rep = run({"report", (dir / "a").string()});
    CHECK(rep.code == cli::kExitOk);
    CHECK(rep.out == leaderboard);
    CHECK(io::read_file(dir / "a" / "leaderboard.csv") == leaderboard);

    std::vector<std::string> args = {"aggregate"};
    for (const char* m : {"MAE", "MSE", "RMSE", "MAPE", "MASE"})
        args.push_back((dir / "a" / (std::string("pivot_") + m + ".csv")).string());
    args.insert(args.end(), {"--baseline", "seasonal_naive"});
    const auto agg = run(args);
    CHECK(agg.code == cli::kExitOk);
    CHECK(agg.out == leaderboard);
    args.insert(args.end(), {"--out", (dir / "lb.csv").string()});
    CHECK(run(args).code == cli::kExitOk);
    CHECK(io::read_file(dir / "lb.csv") == leaderboard);
}

TEST_CASE("validation errors exit 1 and name the problem") {
    TempDir dir("cli_err");
    write_inputs(dir, manifest_json());
    const auto missing = run({"eval", (dir / "m.json").string()});
    CHECK(missing.code == cli::kExitInvalid);
    CHECK(missing.err.find((dir / "series.csv").string()) != std::string::npos);

    const auto no_manifest = run({"eval", (dir / "nope.json").string()});
    CHECK(no_manifest.code == cli::kExitInvalid);
    CHECK(no_manifest.err.find("nope.json") != std::string::npos);

    const auto flag = run({"eval", "--bogus", (dir / "m.json").string()});
    CHECK(flag.code == cli::kExitInvalid);
    CHECK(flag.err.find("--bogus") != std::string::npos);
    CHECK(run({}).code == cli::kExitInvalid);
    CHECK(run({"frobnicate"}).code == cli::kExitInvalid);
    CHECK(run({"aggregate", (dir / "m.json").string(), "--baseline", "x"}).code ==
          cli::kExitInvalid);
    CHECK(run({"report", (dir / "nothing").string()}).code == cli::kExitInvalid);

    const auto version = run({"--version"});
    CHECK(version.code == cli::kExitOk);
    CHECK(version.out.find(std::string(io::tool_version())) != std::string::npos);
}

TEST_CASE("a failing adapter gives exit 2 and a complete leaderboard") {
    TempDir dir("cli_partial");
    const std::string broken =
        std::string(R"(, {"id": "broken", "external": [")") + TEMPUS_FAKE_ADAPTER +
        R"(", "crash"], "timeout_ms": 5000})";
    write_inputs(dir, manifest_json(broken));
    run({"generate", (dir / "gen.json").string(), (dir / "series.csv").string()});
    const auto r = run({"eval", (dir / "m.json").string(), "--out", (dir / "run").string()});
    CHECK(r.code == cli::kExitPartial);
    CHECK(r.err.find("broken") != std::string::npos);
    CHECK(r.err.find("AdapterCrash") != std::string::npos);
    const std::string lb = io::read_file(dir / "run" / "leaderboard.csv");
    CHECK(lb.find("broken") != std::string::npos);
    CHECK(lb.find("seasonal_naive") != std::string::npos);
    const std::string pivot = io::read_file(dir / "run" / "pivot_MAE.csv");
    CHECK(pivot.find("broken,,\n") != std::string::npos);
}

TEST_CASE("adapter-check") {
    const auto ok = run({"adapter-check", TEMPUS_FAKE_ADAPTER, "naive"});
    CHECK(ok.code == cli::kExitOk);
    CHECK(ok.out.find("name: seasonal_naive_fake") != std::string::npos);
    CHECK(ok.out.find("hyper_grid: 5 assignments") != std::string::npos);
    CHECK(ok.out.find("forecast: ok (1x4)") != std::string::npos);

    CHECK(run({"adapter-check", TEMPUS_FAKE_ADAPTER, "covariates"}).code == cli::kExitOk);
    CHECK(run({"adapter-check", TEMPUS_FAKE_ADAPTER, "wrong-version"}).code == cli::kExitInvalid);
    CHECK(run({"adapter-check", TEMPUS_FAKE_ADAPTER, "error"}).code == cli::kExitInvalid);
    CHECK(run({"adapter-check", "--timeout-ms", "200", TEMPUS_FAKE_ADAPTER, "sleep"}).code ==
          cli::kExitInvalid);
    CHECK(run({"adapter-check"}).code == cli::kExitInvalid);
}
