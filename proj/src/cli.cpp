#include "tempus/cli.hpp"

#include "tempus/aggregate.hpp"
#include "tempus/errors.hpp"
#include "tempus/extern_protocol.hpp"
#include "tempus/io.hpp"
#include "tempus/manifest.hpp"
#include "tempus/metrics.hpp"
#include "tempus/pipeline.hpp"
#include "tempus/synth.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

namespace tempus::cli {

namespace fs = std::filesystem;

namespace {

int cmd_generate(const std::string& spec_path, const std::string& out_path, bool with_truth,
                 std::ostream& out) {
    const auto spec = io::parse_genspec(io::read_file(spec_path));
    const auto series = synth::generate(spec);
    io::write_file(out_path, io::series_csv(series, with_truth));
    out << "wrote " << series.y.size() << " points to " << out_path;
    if (series.alpha_drawn) out << " (alpha " << io::format_number(*series.alpha_drawn) << ")";
    out << '\n';
    return kExitOk;
}

int cmd_eval(const std::string& manifest_path, const std::string& out_dir, std::size_t threads,
             std::ostream& out, std::ostream& err) {
    const auto manifest = io::load_manifest(manifest_path);
    const auto tasks = io::materialize_tasks(manifest);
    const auto models = io::build_models(manifest);

    pipeline::BenchmarkConfig config;
    config.run_id = manifest.run_id;
    config.n_tune = manifest.n_tune;
    config.n_test = manifest.n_test;
    config.threads = threads > 0 ? threads : manifest.threads;
    const auto result = pipeline::run_benchmark(tasks, models, config);

    io::RunMetadata meta;
    meta.run_id = manifest.run_id;
    meta.config_hash = manifest.config_hash;
    meta.tool_version = std::string(io::tool_version());
    meta.seed = manifest.seed;
    meta.baseline = manifest.baseline;
    meta.n_tune = manifest.n_tune;
    meta.n_test = manifest.n_test;
    for (const auto& m : models) meta.models.push_back(m->id());
    for (const auto& t : tasks) meta.tasks.push_back(t.id);
    for (const auto id : metrics::kAllMetrics) meta.metrics.emplace_back(metrics::to_string(id));

    const fs::path dir = out_dir.empty() ? manifest.output_dir : fs::path(out_dir);
    const auto aggregates = io::aggregate_pivots(result.pivots, manifest.baseline);
    const auto bundle = io::write_reports(result.pivots, aggregates, result.audit, meta, dir);

    out << io::leaderboard_csv(aggregates);
    out << "report written to " << bundle.directory.string() << '\n';
    if (!result.has_failures()) return kExitOk;
    for (const auto& cell : result.cells)
        if (cell.failure)
            err << "failed cell " << cell.model_id << " x " << cell.task_id << ": "
                << *cell.failure << '\n';
    return kExitPartial;
}

int cmd_aggregate(const std::vector<std::string>& pivot_paths, const std::string& baseline,
                  const std::string& out_path, std::ostream& out) {
    std::vector<aggregate::ErrorPivot> pivots;
    for (const auto& p : pivot_paths)
        pivots.push_back(io::load_pivot_csv(p, io::metric_from_filename(p)));
    const std::string csv = io::leaderboard_csv(io::aggregate_pivots(pivots, baseline));
    if (out_path.empty())
        out << csv;
    else
        io::write_file(out_path, csv);
    return kExitOk;
}

int cmd_report(const std::string& run_dir, std::ostream& out) {
    const auto bundle = io::reassemble_reports(run_dir);
    out << io::read_file(bundle.leaderboard);
    return kExitOk;
}

// Handshake, then one forecast on a small sine context through the same process.
int cmd_adapter_check(const std::vector<std::string>& command, std::size_t timeout_ms,
                      std::ostream& out, std::ostream& err) {
    if (command.empty()) {
        err << "adapter-check: missing adapter command\n";
        return kExitInvalid;
    }
    adapter::AdapterClient client(command, std::chrono::milliseconds(timeout_ms));
    const auto caps = client.handshake();
    out << "name: " << caps.name << '\n'
        << "supports_covariates: " << (caps.supports_covariates ? "true" : "false") << '\n';

    constexpr Eigen::Index l = 24, h = 4;
    adapter::ForecastRequest req;
    req.task_id = "adapter-check";
    req.horizon = h;
    req.context.resize(1, l);
    for (Eigen::Index t = 0; t < l; ++t)
        req.context(0, t) = 2.0 + std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / 12.0);
    const Eigen::Index m = caps.supports_covariates ? 1 : 0;
    req.covariates_past.resize(m, l);
    req.covariates_future.resize(m, h);
    if (m > 0) {
        for (Eigen::Index t = 0; t < l; ++t) req.covariates_past(0, t) = static_cast<double>(t);
        for (Eigen::Index t = 0; t < h; ++t) req.covariates_future(0, t) = static_cast<double>(l + t);
    }
    if (caps.hyper_grid) {
        const auto grid = adapter::expand_grid(caps.name, *caps.hyper_grid);
        out << "hyper_grid: " << grid.assignments.size() << " assignments\n";
        if (!grid.assignments.empty()) req.params = grid.assignments.front().params;
    } else {
        out << "hyper_grid: none\n";
    }

    const auto resp = client.call(req);
    if (resp.error) {
        err << "adapter returned error " << resp.error->code << ": " << resp.error->message << '\n';
        return kExitInvalid;
    }
    ForecastMatrix(*resp.values).check(1, h);
    out << "forecast: ok (" << resp.values->rows() << "x" << resp.values->cols() << ")\n";
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Forecasting benchmark harness", "tempus"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(io::tool_version()));

    auto* gen = app.add_subcommand("generate", "Write a synthetic series to CSV");
    std::string gen_spec, gen_out;
    bool with_truth = false;
    gen->add_option("spec", gen_spec, "Generator spec (JSON)")->required();
    gen->add_option("out", gen_out, "Output CSV")->required();
    gen->add_flag("--with-truth", with_truth, "Also write the noise-free signal as y_base");

    auto* ev = app.add_subcommand("eval", "Run a benchmark manifest");
    std::string manifest_path, eval_out;
    std::size_t threads = 0;
    ev->add_option("manifest", manifest_path, "Manifest (JSON)")->required();
    ev->add_option("--out", eval_out, "Report directory (overrides the manifest)");
    ev->add_option("--threads", threads, "Worker threads (overrides the manifest)")
        ->check(CLI::PositiveNumber);

    auto* agg = app.add_subcommand("aggregate", "Leaderboard from pivot CSV files");
    std::vector<std::string> pivot_paths;
    std::string baseline = "seasonal_naive", agg_out;
    agg->add_option("pivots", pivot_paths, "Pivot CSV files")->required();
    agg->add_option("--baseline", baseline, "Baseline model for skill scores")
        ->capture_default_str();
    agg->add_option("--out", agg_out, "Write the leaderboard here instead of stdout");

    auto* rep = app.add_subcommand("report", "Rebuild leaderboard and summary of a run");
    std::string run_dir;
    rep->add_option("run_dir", run_dir, "Run directory")->required();

    auto* check = app.add_subcommand("adapter-check", "Check an adapter against the protocol");
    std::size_t timeout_ms = 10'000;
    check->add_option("--timeout-ms", timeout_ms, "Per-request timeout")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    check->prefix_command();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << (dynamic_cast<const CLI::CallForVersion*>(&e) ? e.what() : app.help()) << '\n';
            return kExitOk;
        }
        err << "usage error: " << e.what() << '\n';
        return kExitInvalid;
    }

    try {
        if (gen->parsed()) return cmd_generate(gen_spec, gen_out, with_truth, out);
        if (ev->parsed()) return cmd_eval(manifest_path, eval_out, threads, out, err);
        if (agg->parsed()) return cmd_aggregate(pivot_paths, baseline, agg_out, out);
        if (rep->parsed()) return cmd_report(run_dir, out);
        if (check->parsed()) return cmd_adapter_check(check->remaining(), timeout_ms, out, err);
    } catch (const Error& e) {
        err << "error: " << e.code() << ": " << e.what() << '\n';
        return kExitInvalid;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitInvalid;
    }
    return kExitInvalid;
}

}  // namespace tempus::cli
