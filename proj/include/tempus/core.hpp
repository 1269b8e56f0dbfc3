#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tempus {

/// Rows are variates, columns are time steps.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline std::span<const double> row_span(const Matrix& m, Eigen::Index row) {
    return {m.data() + row * m.cols(), static_cast<std::size_t>(m.cols())};
}

enum class ValueKind { continuous, count, categorical, binary };

std::string_view to_string(ValueKind kind);
ValueKind parse_value_kind(std::string_view name);

/// Observed data for one task. Time is canonically the column index;
/// `timestamps` are labels carried through from the source file.
struct SeriesFrame {
    std::vector<std::string> timestamps;
    Matrix targets;     // n x T
    Matrix covariates;  // m x T

    std::size_t length() const { return static_cast<std::size_t>(targets.cols()); }
};

struct TaskSpec {
    std::string id;
    std::size_t context_len = 0;
    std::size_t horizon = 0;
    std::size_t n_targets = 0;
    std::size_t n_covariates = 0;
    std::vector<ValueKind> value_kinds;
    std::string frequency_label;
    std::shared_ptr<const SeriesFrame> data;

    bool univariate() const { return n_targets == 1; }
    bool unconditional() const { return n_covariates == 0; }
};

/// Integer labels compare numerically, anything else (ISO-8601) as text.
bool timestamp_before(std::string_view a, std::string_view b);

/// Checks every TaskSpec/SeriesFrame invariant and returns the task unchanged.
/// Throws SchemaError naming the first violated field.
TaskSpec validate_task(TaskSpec spec);

/// An n x h point forecast.
class ForecastMatrix {
public:
    ForecastMatrix() = default;
    explicit ForecastMatrix(Matrix values);

    const Matrix& values() const { return values_; }
    std::size_t n_targets() const { return static_cast<std::size_t>(values_.rows()); }
    std::size_t horizon() const { return static_cast<std::size_t>(values_.cols()); }

    /// Throws ShapeMismatch or NonFiniteForecast.
    void check(std::size_t n_targets, std::size_t horizon) const;

private:
    Matrix values_;
};

/// Half-open index ranges [context_start, context_end) and [eval_start, eval_end).
struct Window {
    std::size_t context_start = 0;
    std::size_t context_end = 0;
    std::size_t eval_start = 0;
    std::size_t eval_end = 0;

    bool operator==(const Window&) const = default;
};

struct WindowPlan {
    std::vector<Window> tune_windows;
    std::vector<Window> test_windows;
    std::size_t stride = 0;

    bool operator==(const WindowPlan&) const = default;
};

/// End-anchored rolling layout: test evaluation segments tile the last
/// n_test * horizon steps, tuning segments tile the n_tune * horizon steps
/// right before them, and each context is the context_len steps preceding
/// its evaluation segment. Stride equals the horizon.
WindowPlan plan_windows(std::size_t length, std::size_t context_len, std::size_t horizon,
                        std::size_t n_tune, std::size_t n_test);

/// Like plan_windows, but drops tuning windows first and then test windows
/// (never below one) until the layout fits.
WindowPlan plan_windows_shrinking(std::size_t length, std::size_t context_len,
                                  std::size_t horizon, std::size_t n_tune, std::size_t n_test);

inline constexpr std::size_t kDefaultTuneWindows = 3;
inline constexpr std::size_t kDefaultTestWindows = 3;

/// Slices columns [begin, end) of a matrix.
Matrix slice_columns(const Matrix& m, std::size_t begin, std::size_t end);

}  // namespace tempus
