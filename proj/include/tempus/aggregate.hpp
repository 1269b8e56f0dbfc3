#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace tempus::aggregate {

using Cell = std::optional<double>;

/// Models x tasks matrix of one metric. Missing cells are empty optionals.
class ErrorPivot {
public:
    ErrorPivot() = default;
    /// Throws SchemaError on duplicate ids, a wrong cell count, or a present
    /// value that is negative or non-finite.
    ErrorPivot(std::string metric, std::vector<std::string> models,
               std::vector<std::string> tasks, std::vector<Cell> cells);

    const std::string& metric() const { return metric_; }
    const std::vector<std::string>& models() const { return models_; }
    const std::vector<std::string>& tasks() const { return tasks_; }
    std::size_t n_models() const { return models_.size(); }
    std::size_t n_tasks() const { return tasks_.size(); }

    const Cell& at(std::size_t model, std::size_t task) const {
        return cells_[model * tasks_.size() + task];
    }
    /// Throws UnknownModel.
    std::size_t model_index(const std::string& model) const;

    bool operator==(const ErrorPivot&) const = default;

private:
    std::string metric_;
    std::vector<std::string> models_;
    std::vector<std::string> tasks_;
    std::vector<Cell> cells_;
};

inline constexpr double kClipLower = 1e-2;
inline constexpr double kClipUpper = 100.0;

struct WinRate {
    std::optional<double> value;
    std::size_t n_valid_comparisons = 0;
};

struct SkillScore {
    std::optional<double> value;
    std::size_t n_valid_tasks = 0;
};

/// Share of pairwise (task, opponent) comparisons the model wins, ties
/// counting one half. Missing when the model has no valid comparison.
WinRate win_rate(const ErrorPivot& pivot, const std::string& model);

/// Per-task error ratio against the baseline: a zero baseline error maps to
/// 1 when the model is also exact and to kClipUpper otherwise; everything is
/// clipped to [kClipLower, kClipUpper].
double clipped_ratio(double model_error, double baseline_error);

/// One minus the geometric mean of clipped ratios over tasks where both the
/// model and the baseline are present. Computed in log space.
SkillScore skill_score(const ErrorPivot& pivot, const std::string& model,
                       const std::string& baseline);

struct ModelSummary {
    std::string model;
    std::optional<double> win_rate;
    std::optional<double> skill_score;
    std::size_t n_valid_comparisons = 0;
    std::size_t n_valid_tasks_vs_baseline = 0;
};

struct AggregateReport {
    std::string metric;
    std::string baseline;
    std::vector<ModelSummary> models;  // pivot order
    std::vector<std::string> ranking;
};

/// Orders by win rate (descending, missing last), then skill score
/// (descending, missing last), then model id.
std::vector<std::string> rank_models(const std::vector<ModelSummary>& summaries);

AggregateReport aggregate_all(const ErrorPivot& pivot, const std::string& baseline);

}  // namespace tempus::aggregate
