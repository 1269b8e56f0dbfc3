#include "helpers.hpp"
#include "tempus/extern_protocol.hpp"
#include "tempus/synth.hpp"

#include <doctest.h>

#include <json.hpp>

#include <chrono>

using namespace tempus;
using namespace tempus::adapter;
using testing_support::make_task;
using testing_support::row;
using testing_support::TempDir;
using namespace std::chrono_literals;

namespace {

std::vector<std::string> fake(const std::string& mode, const std::string& state = {}) {
    std::vector<std::string> cmd = {TEMPUS_FAKE_ADAPTER, mode};
    if (!state.empty()) cmd.push_back(state);
    return cmd;
}

ForecastRequest request(std::size_t n = 2, std::size_t h = 3) {
    ForecastRequest r;
    r.task_id = "t";
    r.context.resize(static_cast<Eigen::Index>(n), 6);
    for (Eigen::Index i = 0; i < r.context.rows(); ++i)
        for (Eigen::Index t = 0; t < 6; ++t) r.context(i, t) = 10.0 * static_cast<double>(i) + static_cast<double>(t);
    r.covariates_past.resize(0, 6);
    r.covariates_future.resize(0, static_cast<Eigen::Index>(h));
    r.horizon = h;
    return r;
}

}  // namespace

TEST_CASE("wire encoding") {
    const auto hello = nlohmann::json::parse(encode_hello());
    CHECK(hello["op"] == "hello");
    CHECK(hello["protocol_version"] == 1);

    auto r = request(1, 2);
    r.params = forecasters::Params{{"L", 2}};
    const std::string line = encode_request(r);
    CHECK(line.find('\n') == std::string::npos);
    const auto j = nlohmann::json::parse(line);
    CHECK(j["op"] == "forecast");
    CHECK(j["protocol_version"] == 1);
    CHECK(j["task_id"] == "t");
    CHECK(j["horizon"] == 2);
    CHECK(j["context"].size() == 1);
    CHECK(j["context"][0].size() == 6);
    CHECK(j["covariates_future"].empty());
    CHECK(j["params"]["L"] == 2.0);

    const auto ok = decode_response(R"({"protocol_version":1,"values":[[1,2e0]]})", 1, 2);
    REQUIRE(ok.values.has_value());
    CHECK((*ok.values)(0, 1) == 2.0);
    const auto err =
        decode_response(R"({"protocol_version":1,"error":{"code":"X","message":"m"}})", 1, 2);
    REQUIRE(err.error.has_value());
    CHECK(err.error->code == "X");

    CHECK_THROWS_AS(decode_response("nope", 1, 2), MalformedResponse);
    CHECK_THROWS_AS(decode_response(R"({"protocol_version":1})", 1, 2), MalformedResponse);
    CHECK_THROWS_AS(decode_response(R"({"protocol_version":1,"values":[[1,2]],"error":{"code":"X","message":"m"}})", 1, 2),
                    MalformedResponse);
    CHECK_THROWS_AS(decode_response(R"({"protocol_version":1,"values":[[1,"a"]]})", 1, 2),
                    MalformedResponse);
    CHECK_THROWS_AS(decode_response(R"({"protocol_version":1,"values":[[1,2,3]]})", 1, 2),
                    ShapeMismatch);
    CHECK_THROWS_AS(decode_response(R"({"protocol_version":1,"values":[[1,2],[3,4]]})", 1, 2),
                    ShapeMismatch);
    try {
        decode_capabilities(R"({"name":"x","protocol_version":7,"supports_covariates":false})");
        FAIL("expected MalformedResponse");
    } catch (const MalformedResponse& e) {
        CHECK(e.reason() == "version");
    }
}

TEST_CASE("expand_grid builds a sorted cartesian product") {
    const auto g = expand_grid("ext", {{"b", {2, 1}}, {"a", {0.5}}});
    REQUIRE(g.assignments.size() == 2);
    CHECK(g.assignments[0].model == "ext");
    CHECK(g.assignments[0].params.get("b") == 1.0);
    CHECK(g.assignments[1].params.get("a") == 0.5);
}

TEST_CASE("handshake with the naive fixture") {
    const Capabilities caps = handshake(fake("naive"), 5000ms);
    CHECK(caps.name == "seasonal_naive_fake");
    CHECK_FALSE(caps.supports_covariates);
    REQUIRE(caps.hyper_grid.has_value());
    CHECK(caps.hyper_grid->at("L") == std::vector<double>{1, 4, 7, 12, 24});
    try {
        handshake(fake("wrong-version"), 5000ms);
        FAIL("expected MalformedResponse");
    } catch (const MalformedResponse& e) {
        CHECK(e.reason() == "version");
    }
}

TEST_CASE("call_adapter round trips a forecast") {
    const auto resp = call_adapter(fake("echo"), request(2, 3), 5000ms);
    REQUIRE(resp.values.has_value());
    CHECK(resp.values->rows() == 2);
    CHECK(resp.values->cols() == 3);
    CHECK((*resp.values)(0, 2) == 5.0);
    CHECK((*resp.values)(1, 0) == 15.0);

    auto with_l = request(1, 3);
    with_l.params = forecasters::Params{{"L", 4}};
    const auto naive = call_adapter(fake("naive"), with_l, 5000ms);
    CHECK(*naive.values == row({2, 3, 4}));

    const auto err = call_adapter(fake("error"), request(), 5000ms);
    REQUIRE(err.error.has_value());
    CHECK(err.error->code == "ModelFailure");
}

TEST_CASE("adapter failure modes") {
    CHECK_THROWS_AS(call_adapter(fake("bad-json"), request(), 5000ms), MalformedResponse);
    CHECK_THROWS_AS(call_adapter(fake("wrong-shape"), request(), 5000ms), ShapeMismatch);

    const auto start = std::chrono::steady_clock::now();
    CHECK_THROWS_AS(call_adapter(fake("sleep"), request(), 300ms), AdapterTimeout);
    CHECK(std::chrono::steady_clock::now() - start < 5s);

    try {
        call_adapter(fake("crash"), request(), 5000ms);
        FAIL("expected AdapterCrash");
    } catch (const AdapterCrash& e) {
        CHECK(e.exit_code() == 3);
        CHECK(e.captured_stderr().find("crashing on purpose") != std::string::npos);
    }
    CHECK_THROWS_AS(call_adapter({"/no/such/adapter"}, request(), 5000ms), AdapterCrash);
}

TEST_CASE("client restarts a crashed adapter once") {
    TempDir dir("adapter");
    const std::string state = (dir / "state").string();
    AdapterClient client(fake("crash-once", state), 5000ms);
    client.handshake();
    CHECK_THROWS_AS(client.call(request()), AdapterCrash);
    const auto resp = client.call(request());
    CHECK(resp.values.has_value());

    AdapterClient doomed(fake("crash"), 5000ms);
    doomed.handshake();
    CHECK_THROWS_AS(doomed.call(request()), AdapterCrash);
    CHECK_THROWS_AS(doomed.call(request()), AdapterCrash);
    CHECK_THROWS_AS(doomed.call(request()), AdapterCrash);
}

TEST_CASE("covariates reach adapters that declare support") {
    auto frame = std::make_shared<SeriesFrame>();
    frame->targets.resize(1, 40);
    frame->covariates.resize(1, 40);
    for (Eigen::Index t = 0; t < 40; ++t) {
        frame->timestamps.push_back(std::to_string(t));
        frame->targets(0, t) = std::sin(static_cast<double>(t));
        frame->covariates(0, t) = 100.0 + static_cast<double>(t);
    }
    TaskSpec task;
    task.id = "cov";
    task.context_len = 8;
    task.horizon = 4;
    task.n_targets = 1;
    task.n_covariates = 1;
    task.value_kinds = {ValueKind::continuous};
    task.data = frame;
    task = validate_task(task);

    ExternalModel model("cov", fake("covariates"), 5000ms);
    auto runner = model.open(task);
    CHECK_FALSE(runner->grid().has_value());
    const auto w = pipeline::slice_window(task, Window{10, 18, 18, 22});
    const auto f = runner->forecast(task, w, {"cov", {}});
    CHECK(f.values() == row({118, 119, 120, 121}));

    // Adapters without covariate support get the targets only.
    ExternalModel echo("echo", fake("echo"), 5000ms);
    auto plain = echo.open(task);
    plain->grid();
    const auto g = plain->forecast(task, w, {"echo", {}});
    CHECK(g.values()(0, 0) == frame->targets(0, 17));
}

TEST_CASE("external seasonal naive matches the native model cell for cell") {
    std::vector<TaskSpec> tasks;
    for (std::uint64_t s = 0; s < 5; ++s) {
        synth::GenSpec g;
        g.family = synth::Family::additive_random;
        g.num_points = 150 + 10 * s;
        g.noise_scale = 1.0;
        g.seed = s;
        tasks.push_back(make_task("t" + std::to_string(s), synth::generate(g).y, 30, 6));
    }
    forecasters::HyperGrid grid{"seasonal_naive", {}};
    for (double L : {1, 4, 7, 12, 24}) grid.assignments.push_back({"seasonal_naive", {{"L", L}}});
    std::vector<std::shared_ptr<const pipeline::ModelSpec>> models = {
        std::make_shared<pipeline::NativeModel>("seasonal_naive", grid),
        std::make_shared<ExternalModel>("fake", fake("naive"), 5000ms),
        std::make_shared<ExternalModel>("dead", fake("crash"), 5000ms)};
    pipeline::BenchmarkConfig config;
    config.threads = 3;
    const auto r = pipeline::run_benchmark(tasks, models, config);
    for (const auto& p : r.pivots)
        for (std::size_t b = 0; b < tasks.size(); ++b) {
            CHECK(p.at(0, b) == p.at(1, b));
            CHECK_FALSE(p.at(2, b).has_value());
        }
    CHECK(r.has_failures());
    CHECK(pipeline::leakage_violations(r.audit).empty());
}
