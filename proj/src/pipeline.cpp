#include "tempus/pipeline.hpp"

#include "tempus/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <limits>
#include <thread>

namespace tempus::pipeline {

using forecasters::HyperAssignment;
using forecasters::HyperGrid;
using metrics::MetricId;
using nlohmann::json;

WindowData slice_window(const TaskSpec& task, const Window& window) {
    const SeriesFrame& frame = *task.data;
    WindowData out;
    out.window = window;
    out.context = slice_columns(frame.targets, window.context_start, window.context_end);
    out.actual = slice_columns(frame.targets, window.eval_start, window.eval_end);
    out.covariates_past = slice_columns(frame.covariates, window.context_start, window.context_end);
    out.covariates_future = slice_columns(frame.covariates, window.eval_start, window.eval_end);
    return out;
}

// ---------------------------------------------------------------------------
// Native models

namespace {

class NativeRunner final : public ModelRunner {
public:
    explicit NativeRunner(HyperGrid grid) : grid_(std::move(grid)) {}

    std::optional<HyperGrid> grid() override { return grid_; }

    ForecastMatrix forecast(const TaskSpec& task, const WindowData& window,
                            const HyperAssignment& assignment) override {
        return forecasters::forecast(assignment, window.context, task.horizon);
    }

private:
    HyperGrid grid_;
};

}  // namespace

NativeModel::NativeModel(std::string family) : family_(std::move(family)) {
    if (!forecasters::is_native_family(family_)) throw UnknownModel(family_);
}

NativeModel::NativeModel(std::string family, HyperGrid grid)
    : NativeModel(std::move(family)) {
    grid_ = std::move(grid);
}

std::unique_ptr<ModelRunner> NativeModel::open(const TaskSpec& task) const {
    return std::make_unique<NativeRunner>(grid_ ? *grid_
                                                : forecasters::default_grid(family_, task));
}

// ---------------------------------------------------------------------------
// Audit records

namespace {

json metrics_to_json(const MetricMap& values) {
    json out = json::object();
    for (const auto& [id, value] : values) {
        if (value)
            out[std::string(metrics::to_string(id))] = *value;
        else
            out[std::string(metrics::to_string(id))] = nullptr;
    }
    return out;
}

json params_to_json(const forecasters::Params& params) {
    json out = json::object();
    for (const auto& [name, value] : params.values()) out[name] = value;
    return out;
}

}  // namespace

std::string AuditRecord::to_json_line() const {
    json j;
    j["run_id"] = run_id;
    j["task_id"] = task_id;
    j["model_id"] = model_id;
    j["role"] = role;
    if (window_index) j["window_index"] = *window_index;
    if (window) {
        j["context_start"] = window->context_start;
        j["context_end"] = window->context_end;
        j["eval_start"] = window->eval_start;
        j["eval_end"] = window->eval_end;
    }
    if (assignment) {
        j["assignment"] = {{"model", assignment->model},
                           {"params", params_to_json(assignment->params)}};
    }
    if (!metrics.empty()) j["metrics"] = metrics_to_json(metrics);
    if (error_code) j["error"] = {{"code", *error_code}, {"message", error_message.value_or("")}};
    return j.dump();
}

AuditRecord AuditRecord::from_json_line(const std::string& line) {
    const json j = json::parse(line);
    AuditRecord r;
    r.run_id = j.at("run_id").get<std::string>();
    r.task_id = j.at("task_id").get<std::string>();
    r.model_id = j.at("model_id").get<std::string>();
    r.role = j.at("role").get<std::string>();
    if (j.contains("window_index")) r.window_index = j["window_index"].get<std::size_t>();
    if (j.contains("context_start")) {
        r.window = Window{j["context_start"].get<std::size_t>(), j["context_end"].get<std::size_t>(),
                          j["eval_start"].get<std::size_t>(), j["eval_end"].get<std::size_t>()};
    }
    if (j.contains("assignment")) {
        HyperAssignment a;
        a.model = j["assignment"].at("model").get<std::string>();
        for (const auto& [name, value] : j["assignment"].at("params").items())
            a.params.set(name, value.get<double>());
        r.assignment = std::move(a);
    }
    if (j.contains("metrics")) {
        for (const auto& [name, value] : j["metrics"].items()) {
            const MetricId id = metrics::parse_metric(name);
            r.metrics[id] = value.is_null() ? std::nullopt : std::optional(value.get<double>());
        }
    }
    if (j.contains("error")) {
        r.error_code = j["error"].at("code").get<std::string>();
        r.error_message = j["error"].at("message").get<std::string>();
    }
    return r;
}

// ---------------------------------------------------------------------------
// Tuning and evaluation

namespace {

struct Failure {
    std::string code;
    std::string message;
};

// Runs one forecast, folding every exception into a Failure.
template <typename Fn>
std::optional<Failure> guarded(Fn&& fn) {
    try {
        fn();
        return std::nullopt;
    } catch (const Error& e) {
        return Failure{e.code(), e.what()};
    } catch (const std::exception& e) {
        return Failure{"InternalError", e.what()};
    }
}

AuditRecord base_record(const std::string& run_id, const TaskSpec& task,
                        const std::string& model_id, std::string role) {
    AuditRecord r;
    r.run_id = run_id;
    r.task_id = task.id;
    r.model_id = model_id;
    r.role = std::move(role);
    return r;
}

}  // namespace

TuneResult tune(const TaskSpec& task, ModelRunner& runner, const std::string& model_id,
                const HyperGrid& grid, const WindowPlan& plan, std::vector<AuditRecord>* audit,
                const std::string& run_id) {
    TuneResult result;
    result.model_id = model_id;
    if (grid.assignments.empty())
        throw AllAssignmentsFailed("empty hyperparameter grid for " + model_id);

    if (plan.tune_windows.empty()) {
        result.chosen = grid.assignments.front();
        result.skipped = true;
        result.per_assignment_mae.assign(grid.assignments.size(), std::nullopt);
        return result;
    }

    std::vector<WindowData> windows;
    for (const Window& w : plan.tune_windows) windows.push_back(slice_window(task, w));

    std::optional<std::size_t> best;
    for (std::size_t a = 0; a < grid.assignments.size(); ++a) {
        const HyperAssignment& assignment = grid.assignments[a];
        double total = 0.0;
        bool ok = true;
        for (std::size_t w = 0; w < windows.size(); ++w) {
            double loss = 0.0;
            auto failure = guarded([&] {
                const ForecastMatrix f = runner.forecast(task, windows[w], assignment);
                f.check(task.n_targets, task.horizon);
                loss = metrics::mae(f.values(), windows[w].actual, windows[w].context);
            });
            if (audit) {
                AuditRecord r = base_record(run_id, task, model_id, "tune");
                r.window_index = w;
                r.window = windows[w].window;
                r.assignment = assignment;
                if (failure) {
                    r.error_code = failure->code;
                    r.error_message = failure->message;
                } else {
                    r.metrics[MetricId::MAE] = loss;
                }
                audit->push_back(std::move(r));
            }
            if (failure) {
                ok = false;
                break;
            }
            total += loss;
        }
        if (!ok) {
            result.per_assignment_mae.push_back(std::nullopt);
            continue;
        }
        const double mean = total / static_cast<double>(windows.size());
        result.per_assignment_mae.push_back(mean);
        if (!best || mean < *result.per_assignment_mae[*best]) best = a;
    }

    if (!best)
        throw AllAssignmentsFailed("no assignment of " + model_id +
                                   " completed every tuning window");
    result.chosen = grid.assignments[*best];
    result.validation_mae = result.per_assignment_mae[*best];
    result.n_windows_used = windows.size();
    if (audit) {
        AuditRecord r = base_record(run_id, task, model_id, "select");
        r.assignment = result.chosen;
        r.metrics[MetricId::MAE] = result.validation_mae;
        audit->push_back(std::move(r));
    }
    return result;
}

TuneResult tune(const TaskSpec& task, const std::string& model_id, const HyperGrid& grid,
                const WindowPlan& plan) {
    NativeRunner runner(grid);
    return tune(task, runner, model_id, grid, plan);
}

EvalResult evaluate(const TaskSpec& task, ModelRunner& runner, const std::string& model_id,
                    const HyperAssignment& chosen, const WindowPlan& plan,
                    std::vector<AuditRecord>* audit, const std::string& run_id) {
    EvalResult result;
    result.task_id = task.id;
    result.model_id = model_id;
    result.chosen = chosen;

    std::map<MetricId, double> sums;
    std::map<MetricId, bool> defined;
    for (MetricId id : metrics::kAllMetrics) {
        sums[id] = 0.0;
        defined[id] = true;
    }

    for (std::size_t w = 0; w < plan.test_windows.size(); ++w) {
        const WindowData data = slice_window(task, plan.test_windows[w]);
        MetricMap values;
        auto failure = guarded([&] {
            const ForecastMatrix f = runner.forecast(task, data, chosen);
            f.check(task.n_targets, task.horizon);
            for (MetricId id : metrics::kAllMetrics)
                values[id] = metrics::try_compute(id, f.values(), data.actual, data.context);
        });

        AuditRecord r = base_record(run_id, task, model_id, "test");
        r.window_index = w;
        r.window = data.window;
        r.assignment = chosen;
        if (failure) {
            result.failures.push_back({w, failure->code, failure->message});
            for (MetricId id : metrics::kAllMetrics) {
                values[id] = std::nullopt;
                defined[id] = false;
            }
            r.error_code = failure->code;
            r.error_message = failure->message;
        } else {
            for (MetricId id : metrics::kAllMetrics) {
                if (values[id])
                    sums[id] += *values[id];
                else
                    defined[id] = false;
            }
            r.metrics = values;
        }
        if (audit) audit->push_back(std::move(r));
        result.per_window.push_back(std::move(values));
    }

    const auto n = static_cast<double>(plan.test_windows.size());
    for (MetricId id : metrics::kAllMetrics) {
        if (defined[id] && !plan.test_windows.empty())
            result.metrics[id] = sums[id] / n;
        else
            result.metrics[id] = std::nullopt;
    }
    return result;
}

EvalResult evaluate(const TaskSpec& task, const std::string& model_id,
                    const HyperAssignment& chosen, const WindowPlan& plan) {
    NativeRunner runner(HyperGrid{model_id, {chosen}});
    return evaluate(task, runner, model_id, chosen, plan);
}

// ---------------------------------------------------------------------------
// Benchmark runs

bool BenchmarkResult::has_failures() const {
    return std::any_of(cells.begin(), cells.end(),
                       [](const CellResult& c) { return c.failure.has_value(); });
}

const aggregate::ErrorPivot& BenchmarkResult::pivot(MetricId id) const {
    const auto name = metrics::to_string(id);
    for (const auto& p : pivots)
        if (p.metric() == name) return p;
    throw InvalidParams("no pivot for metric " + std::string(name));
}

namespace {

CellResult run_cell(const TaskSpec& task, const ModelSpec& model, const BenchmarkConfig& config) {
    CellResult cell;
    cell.task_id = task.id;
    cell.model_id = model.id();

    auto fail = [&](const std::string& code, const std::string& message) {
        AuditRecord r = base_record(config.run_id, task, model.id(), "plan");
        r.error_code = code;
        r.error_message = message;
        cell.audit.push_back(std::move(r));
        cell.failure = code + ": " + message;
    };

    WindowPlan plan;
    try {
        plan = plan_windows_shrinking(task.data->length(), task.context_len, task.horizon,
                                      config.n_tune, config.n_test);
    } catch (const Error& e) {
        fail(e.code(), e.what());
        return cell;
    }

    std::unique_ptr<ModelRunner> runner;
    std::optional<HyperGrid> grid;
    auto opened = guarded([&] {
        runner = model.open(task);
        grid = runner->grid();
    });
    if (opened) {
        fail(opened->code, opened->message);
        return cell;
    }

    HyperAssignment chosen{model.id(), {}};
    if (grid) {
        auto tuned = guarded([&] {
            cell.tuning = tune(task, *runner, model.id(), *grid, plan, &cell.audit, config.run_id);
        });
        if (tuned) {
            fail(tuned->code, tuned->message);
            return cell;
        }
        chosen = cell.tuning->chosen;
    } else {
        TuneResult skipped;
        skipped.model_id = model.id();
        skipped.chosen = chosen;
        skipped.skipped = true;
        cell.tuning = skipped;
    }

    cell.evaluation = evaluate(task, *runner, model.id(), chosen, plan, &cell.audit,
                               config.run_id);
    if (!cell.evaluation->failures.empty()) {
        const auto& first = cell.evaluation->failures.front();
        cell.failure = first.code + ": " + first.message;
    }
    return cell;
}

}  // namespace

BenchmarkResult run_benchmark(const std::vector<TaskSpec>& tasks,
                              const std::vector<std::shared_ptr<const ModelSpec>>& models,
                              const BenchmarkConfig& config) {
    BenchmarkResult result;
    result.run_id = config.run_id;
    const std::size_t n_cells = tasks.size() * models.size();
    result.cells.resize(n_cells);

    // Cells are written to fixed slots so scheduling cannot affect the output.
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < n_cells; k = next++) {
            const std::size_t m = k / tasks.size();
            const std::size_t t = k % tasks.size();
            result.cells[k] = run_cell(tasks[t], *models[m], config);
        }
    };
    const std::size_t n_threads = std::clamp<std::size_t>(config.threads, 1, std::max<std::size_t>(n_cells, 1));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    }

    std::vector<std::string> model_ids;
    std::vector<std::string> task_ids;
    for (const auto& m : models) model_ids.push_back(m->id());
    for (const auto& t : tasks) task_ids.push_back(t.id);

    for (MetricId id : metrics::kAllMetrics) {
        std::vector<aggregate::Cell> values(n_cells);
        for (std::size_t k = 0; k < n_cells; ++k) {
            const CellResult& cell = result.cells[k];
            if (cell.evaluation) values[k] = cell.evaluation->metrics.at(id);
        }
        result.pivots.emplace_back(std::string(metrics::to_string(id)), model_ids, task_ids,
                                   std::move(values));
    }
    for (const CellResult& cell : result.cells)
        result.audit.insert(result.audit.end(), cell.audit.begin(), cell.audit.end());
    return result;
}

std::vector<std::string> leakage_violations(const std::vector<AuditRecord>& audit) {
    struct Extent {
        std::optional<std::size_t> last_tune;
        std::optional<std::size_t> first_test;
    };
    std::map<std::pair<std::string, std::string>, Extent> cells;
    for (const AuditRecord& r : audit) {
        if (!r.window) continue;
        Extent& e = cells[{r.task_id, r.model_id}];
        if (r.role == "tune") {
            const std::size_t last = std::max(r.window->context_end, r.window->eval_end) - 1;
            e.last_tune = std::max(e.last_tune.value_or(0), last);
        } else if (r.role == "test") {
            e.first_test = std::min(e.first_test.value_or(std::numeric_limits<std::size_t>::max()),
                                    r.window->eval_start);
        }
    }
    std::vector<std::string> out;
    for (const auto& [key, e] : cells) {
        if (e.last_tune && e.first_test && *e.last_tune >= *e.first_test)
            out.push_back("task '" + key.first + "', model '" + key.second + "': tuning reaches t=" +
                          std::to_string(*e.last_tune) + " but testing starts at t=" +
                          std::to_string(*e.first_test));
    }
    return out;
}

}  // namespace tempus::pipeline
