#pragma once

#include "tempus/aggregate.hpp"
#include "tempus/core.hpp"
#include "tempus/forecasters.hpp"
#include "tempus/metrics.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace tempus::pipeline {

/// Everything a forecaster may look at for one window, plus the held-out
/// actuals used for scoring.
struct WindowData {
    Window window;
    Matrix context;            // n x l targets
    Matrix actual;             // n x h targets
    Matrix covariates_past;    // m x l
    Matrix covariates_future;  // m x h
};

WindowData slice_window(const TaskSpec& task, const Window& window);

/// A model bound to one task. Runners are used from a single thread.
class ModelRunner {
public:
    virtual ~ModelRunner() = default;
    /// Grid to tune over, or nullopt when the model has no hyperparameters
    /// to tune and should go straight to evaluation.
    virtual std::optional<forecasters::HyperGrid> grid() = 0;
    virtual ForecastMatrix forecast(const TaskSpec& task, const WindowData& window,
                                    const forecasters::HyperAssignment& assignment) = 0;
};

/// A benchmark entry: something that can be instantiated per task.
class ModelSpec {
public:
    virtual ~ModelSpec() = default;
    virtual const std::string& id() const = 0;
    virtual std::unique_ptr<ModelRunner> open(const TaskSpec& task) const = 0;
};

class NativeModel final : public ModelSpec {
public:
    /// Throws UnknownModel when `family` is not a native family.
    explicit NativeModel(std::string family);
    /// Fixed grid instead of default_grid.
    NativeModel(std::string family, forecasters::HyperGrid grid);

    const std::string& id() const override { return family_; }
    std::unique_ptr<ModelRunner> open(const TaskSpec& task) const override;

private:
    std::string family_;
    std::optional<forecasters::HyperGrid> grid_;
};

using MetricMap = std::map<metrics::MetricId, std::optional<double>>;

struct AuditRecord {
    std::string run_id;
    std::string task_id;
    std::string model_id;
    /// "tune", "select", "test" or "plan".
    std::string role;
    std::optional<std::size_t> window_index;
    std::optional<Window> window;
    std::optional<forecasters::HyperAssignment> assignment;
    MetricMap metrics;
    std::optional<std::string> error_code;
    std::optional<std::string> error_message;

    /// Single-line JSON with sorted keys.
    std::string to_json_line() const;
    static AuditRecord from_json_line(const std::string& line);
};

struct TuneResult {
    std::string model_id;
    forecasters::HyperAssignment chosen;
    std::optional<double> validation_mae;
    /// Aligned with the grid; empty where the assignment failed on any window.
    std::vector<std::optional<double>> per_assignment_mae;
    std::size_t n_windows_used = 0;
    /// True when no selection took place (no tuning windows or no grid).
    bool skipped = false;
};

struct WindowFailure {
    std::size_t window = 0;
    std::string code;
    std::string message;
};

struct EvalResult {
    std::string task_id;
    std::string model_id;
    forecasters::HyperAssignment chosen;
    MetricMap metrics;
    std::vector<MetricMap> per_window;
    std::vector<WindowFailure> failures;
};

/// Grid search on the tuning windows with MAE as the validation loss; the
/// first grid element attaining the minimum wins. Throws AllAssignmentsFailed.
TuneResult tune(const TaskSpec& task, ModelRunner& runner, const std::string& model_id,
                const forecasters::HyperGrid& grid, const WindowPlan& plan,
                std::vector<AuditRecord>* audit = nullptr, const std::string& run_id = {});

/// Convenience overload for native families.
TuneResult tune(const TaskSpec& task, const std::string& model_id,
                const forecasters::HyperGrid& grid, const WindowPlan& plan);

/// Scores `chosen` on every test window. Never throws for model failures:
/// they are recorded per window and turn the affected aggregates missing.
EvalResult evaluate(const TaskSpec& task, ModelRunner& runner, const std::string& model_id,
                    const forecasters::HyperAssignment& chosen, const WindowPlan& plan,
                    std::vector<AuditRecord>* audit = nullptr, const std::string& run_id = {});

EvalResult evaluate(const TaskSpec& task, const std::string& model_id,
                    const forecasters::HyperAssignment& chosen, const WindowPlan& plan);

struct BenchmarkConfig {
    std::string run_id = "run";
    std::size_t n_tune = kDefaultTuneWindows;
    std::size_t n_test = kDefaultTestWindows;
    std::size_t threads = 1;
};

struct CellResult {
    std::string task_id;
    std::string model_id;
    std::optional<TuneResult> tuning;
    std::optional<EvalResult> evaluation;
    /// Set when the cell could not be evaluated at all or any window failed.
    std::optional<std::string> failure;
    std::vector<AuditRecord> audit;
};

struct BenchmarkResult {
    std::string run_id;
    std::vector<aggregate::ErrorPivot> pivots;  // one per metric, kAllMetrics order
    std::vector<CellResult> cells;              // model-major order
    std::vector<AuditRecord> audit;

    bool has_failures() const;
    const aggregate::ErrorPivot& pivot(metrics::MetricId id) const;
};

/// Plans, tunes and evaluates every (task, model) cell. A failing cell
/// becomes missing pivot entries; the run itself does not abort. Results do
/// not depend on config.threads.
BenchmarkResult run_benchmark(const std::vector<TaskSpec>& tasks,
                              const std::vector<std::shared_ptr<const ModelSpec>>& models,
                              const BenchmarkConfig& config);

/// One message per (task, model) whose tuning windows reach a timestamp at
/// or after its earliest test evaluation timestamp.
std::vector<std::string> leakage_violations(const std::vector<AuditRecord>& audit);

}  // namespace tempus::pipeline
