#include "helpers.hpp"
#include "tempus/errors.hpp"
#include "tempus/io.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

using namespace tempus;
using namespace tempus::io;
using testing_support::TempDir;

namespace {

std::size_t count_lines(const std::string& s) {
    std::size_t n = 0;
    for (char c : s) n += c == '\n';
    return n;
}

aggregate::ErrorPivot sample_pivot(const std::string& metric = "MAE") {
    return aggregate::ErrorPivot(metric, {"seasonal_naive", "theta", "arima"}, {"a", "b"},
                                 {1.0, 2.0, 0.5, std::nullopt, 0.1 + 0.2, 1e-300});
}

}  // namespace

TEST_CASE("CSV records") {
    const auto recs = parse_csv_records("a,b\r\n\"x,1\",\"he said \"\"hi\"\"\"\n\n3,\n");
    REQUIRE(recs.size() == 3);
    CHECK(recs[1].line == 2);
    CHECK(recs[1].fields == std::vector<std::string>{"x,1", "he said \"hi\""});
    CHECK(recs[2].line == 4);
    CHECK(recs[2].fields == std::vector<std::string>{"3", ""});

    const auto multi = parse_csv_records("a\n\"two\nlines\"\nz\n");
    REQUIRE(multi.size() == 3);
    CHECK(multi[2].line == 4);

    CHECK_THROWS_AS(parse_csv_records("a\n\"open"), ParseError);
    CHECK(csv_escape("plain") == "plain");
    CHECK(csv_escape("a,b") == "\"a,b\"");
    CHECK(csv_escape("q\"") == "\"q\"\"\"");
}

TEST_CASE("numbers") {
    CHECK(format_number(0.1) == "0.10000000000000001");
    CHECK(format_number(2.0) == "2");
    CHECK(parse_number(format_number(0.1 + 0.2), 1, "y") == 0.1 + 0.2);
    CHECK(parse_number("1e-3", 1, "y") == 1e-3);
    CHECK_THROWS_AS(parse_number("", 1, "y"), ParseError);
    CHECK_THROWS_AS(parse_number("1.5x", 1, "y"), ParseError);
    CHECK_THROWS_AS(parse_number("nan", 1, "y"), ParseError);
    CHECK_THROWS_AS(parse_number("inf", 1, "y"), ParseError);
}

TEST_CASE("load_csv on a minimal file") {
    TempDir dir("io");
    write_file(dir / "s.csv", "ts,y\n2024-01-01,1.5\n2024-01-02,2\n2024-01-03,-3\n");
    CsvSchema schema;
    schema.timestamp_column = "ts";
    const SeriesFrame f = load_csv(dir / "s.csv", schema);
    CHECK(f.length() == 3);
    CHECK(f.targets(0, 2) == -3.0);
    CHECK(f.timestamps[1] == "2024-01-02");
    CHECK(f.covariates.rows() == 0);
}

TEST_CASE("load_csv errors carry line and column") {
    const CsvSchema schema;
    try {
        parse_series_csv("t,y\n1,1\n2,2\n3,3\n3,4\n", schema);
        FAIL("expected NonMonotonicTimestamps");
    } catch (const NonMonotonicTimestamps& e) {
        CHECK(e.line() == 5);
    }
    // Integer timestamps compare numerically, so 10 follows 9.
    CHECK(parse_series_csv("t,y\n9,1\n10,2\n", schema).length() == 2);
    CHECK_THROWS_AS(parse_series_csv("t,y\n10,1\n9,2\n", schema), NonMonotonicTimestamps);

    try {
        parse_series_csv("t,y\n1,1\n2,\n", schema);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
        CHECK(e.column() == "y");
    }
    try {
        parse_series_csv("t,value\n1,1\n", schema);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.column() == "y");
    }
    CHECK_THROWS_AS(parse_series_csv("t,y\n1,NaN\n", schema), ParseError);
    CHECK_THROWS_AS(parse_series_csv("t,y\n1,1,1\n", schema), ParseError);
    CHECK_THROWS_AS(parse_series_csv("t,y\n", schema), ParseError);
    try {
        load_csv("/definitely/not/here.csv", schema);
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("/definitely/not/here.csv") != std::string::npos);
    }
}

TEST_CASE("frame CSV round-trip with covariates") {
    CsvSchema schema;
    schema.target_columns = {"y1", "y2"};
    schema.covariate_columns = {"x"};
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    SeriesFrame f;
    f.targets.resize(2, 40);
    f.covariates.resize(1, 40);
    for (int t = 0; t < 40; ++t) {
        f.timestamps.push_back(std::to_string(t * 3));
        f.targets(0, t) = u(rng);
        f.targets(1, t) = u(rng) * 1e-290;
        f.covariates(0, t) = u(rng);
    }
    const std::string text = frame_csv(f, schema);
    const SeriesFrame back = parse_series_csv(text, schema);
    CHECK(back.timestamps == f.timestamps);
    CHECK(back.targets == f.targets);
    CHECK(back.covariates == f.covariates);
    CHECK(frame_csv(back, schema) == text);
}

TEST_CASE("generated series CSV") {
    synth::GenSpec s;
    s.num_points = 5;
    s.noise_scale = 1.0;
    const auto g = synth::generate(s);
    const std::string plain = series_csv(g, false);
    CHECK(plain.rfind("t,y\n", 0) == 0);
    CHECK(count_lines(plain) == 6);
    const std::string truth = series_csv(g, true);
    CHECK(truth.rfind("t,y,y_base\n", 0) == 0);
    const SeriesFrame f = parse_series_csv(plain, CsvSchema{});
    for (std::size_t i = 0; i < 5; ++i) CHECK(f.targets(0, static_cast<Eigen::Index>(i)) == g.y[i]);
}

TEST_CASE("pivot CSV") {
    const auto p = sample_pivot();
    const std::string text = pivot_csv(p);
    CHECK(count_lines(text) == 4);
    CHECK(text.rfind("model,a,b\n", 0) == 0);
    CHECK(text.find("theta,0.5,\n") != std::string::npos);
    CHECK(text.find("NaN") == std::string::npos);
    const auto back = parse_pivot_csv(text, "MAE");
    CHECK(pivot_csv(back) == text);
    CHECK(back.at(2, 1) == 1e-300);
    CHECK_FALSE(back.at(1, 1).has_value());
    CHECK(metric_from_filename("/x/pivot_RMSE.csv") == "RMSE");
    CHECK(metric_from_filename("errors.csv") == "errors");
    CHECK_THROWS_AS(parse_pivot_csv("model,a\nm,-1\n", "MAE"), SchemaError);
}

TEST_CASE("leaderboard") {
    const std::vector<aggregate::ErrorPivot> pivots = {sample_pivot("MAE"), sample_pivot("MSE")};
    const auto reports = aggregate_pivots(pivots, "seasonal_naive");
    const auto rows = build_leaderboard(reports);
    REQUIRE(rows.size() == 3);
    const std::string csv = leaderboard_csv(reports);
    CHECK(csv.rfind("rank,model,win_rate_MAE,skill_score_MAE,win_rate_MSE,skill_score_MSE,"
                    "mean_win_rate,mean_skill_score\n",
                    0) == 0);
    for (const auto& r : rows) {
        if (r.model != "seasonal_naive") continue;
        for (const auto& [metric, s] : r.per_metric) CHECK(*s.skill_score == 0.0);
        CHECK(*r.mean_skill_score == 0.0);
    }
    for (std::size_t i = 1; i < rows.size(); ++i)
        CHECK(rows[i - 1].mean_win_rate.value_or(-1) >= rows[i].mean_win_rate.value_or(-1));
}

TEST_CASE("metadata JSON round-trip") {
    RunMetadata m;
    m.run_id = "r1";
    m.config_hash = sha256_hex("{}");
    m.tool_version = "0.1.0";
    m.seed = 18446744073709551615ULL;
    m.baseline = "seasonal_naive";
    m.n_tune = 3;
    m.n_test = 2;
    m.models = {"seasonal_naive", "theta"};
    m.tasks = {"a"};
    m.metrics = {"MAE"};
    const std::string j = m.to_json();
    CHECK(RunMetadata::from_json(j).to_json() == j);
    CHECK(j.back() == '\n');
}

TEST_CASE("sha256") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("report bundle is reassembled byte for byte") {
    TempDir dir("bundle");
    const std::vector<aggregate::ErrorPivot> pivots = {sample_pivot("MAE"), sample_pivot("RMSE")};
    const auto reports = aggregate_pivots(pivots, "seasonal_naive");
    pipeline::AuditRecord rec;
    rec.run_id = "r";
    rec.task_id = "a";
    rec.model_id = "theta";
    rec.role = "test";
    rec.window = Window{0, 4, 4, 6};
    RunMetadata meta;
    meta.run_id = "r";
    meta.baseline = "seasonal_naive";
    meta.models = pivots[0].models();
    meta.tasks = pivots[0].tasks();
    meta.metrics = {"MAE", "RMSE"};
    const auto out = dir / "run";
    const ReportBundle b = write_reports(pivots, reports, {rec, rec}, meta, out);
    CHECK(b.files().size() == 6);
    for (const auto& f : b.files()) CHECK(std::filesystem::exists(f));
    const std::string leaderboard = read_file(b.leaderboard);
    const std::string summary = read_file(b.summary);
    CHECK(summary.find("| MAE | 1 | 6 |") != std::string::npos);

    std::filesystem::remove(b.leaderboard);
    write_file(b.summary, "stale");
    const ReportBundle again = reassemble_reports(out);
    CHECK(read_file(again.leaderboard) == leaderboard);
    CHECK(read_file(again.summary) == summary);

    const auto audit = load_audit(b.audit_log);
    REQUIRE(audit.size() == 2);
    CHECK(audit[0].to_json_line() == rec.to_json_line());
    CHECK_THROWS_AS(reassemble_reports(dir / "nothing"), IoError);
}
