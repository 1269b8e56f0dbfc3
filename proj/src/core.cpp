#include "tempus/core.hpp"

#include "tempus/errors.hpp"

#include <charconv>
#include <cmath>
#include <optional>

namespace tempus {

std::string_view to_string(ValueKind kind) {
    switch (kind) {
        case ValueKind::continuous: return "continuous";
        case ValueKind::count: return "count";
        case ValueKind::categorical: return "categorical";
        case ValueKind::binary: return "binary";
    }
    return "continuous";
}

ValueKind parse_value_kind(std::string_view name) {
    if (name == "continuous") return ValueKind::continuous;
    if (name == "count") return ValueKind::count;
    if (name == "categorical") return ValueKind::categorical;
    if (name == "binary") return ValueKind::binary;
    throw SchemaError("value_kind", "unknown kind '" + std::string(name) + "'");
}

namespace {

bool conforms(ValueKind kind, double v) {
    switch (kind) {
        case ValueKind::continuous: return true;
        case ValueKind::count:
        case ValueKind::categorical: return v >= 0.0 && std::floor(v) == v;
        case ValueKind::binary: return v == 0.0 || v == 1.0;
    }
    return false;
}

}  // namespace

bool timestamp_before(std::string_view a, std::string_view b) {
    auto as_integer = [](std::string_view s) -> std::optional<long long> {
        long long v = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
        return v;
    };
    const auto ia = as_integer(a);
    const auto ib = as_integer(b);
    if (ia && ib) return *ia < *ib;
    return a < b;
}

TaskSpec validate_task(TaskSpec spec) {
    if (spec.context_len < 1) throw SchemaError("context_len", "must be >= 1");
    if (spec.horizon < 1) throw SchemaError("horizon", "must be >= 1");
    if (spec.n_targets < 1) throw SchemaError("n_targets", "must be >= 1");
    if (spec.value_kinds.size() != spec.n_targets)
        throw SchemaError("value_kind", "expected one value kind per target");
    if (!spec.data) throw SchemaError("data", "task has no series data");

    const SeriesFrame& frame = *spec.data;
    const auto length = frame.length();
    if (static_cast<std::size_t>(frame.targets.rows()) != spec.n_targets)
        throw SchemaError("n_targets", "target matrix has " +
                                           std::to_string(frame.targets.rows()) + " rows");
    if (static_cast<std::size_t>(frame.covariates.rows()) != spec.n_covariates)
        throw SchemaError("n_covariates", "covariate matrix has " +
                                              std::to_string(frame.covariates.rows()) +
                                              " rows");
    if (spec.n_covariates > 0 && static_cast<std::size_t>(frame.covariates.cols()) != length)
        throw SchemaError("covariates", "covariates must have one column per time step");
    if (!frame.timestamps.empty() && frame.timestamps.size() != length)
        throw SchemaError("timestamps", "one timestamp per column required");
    for (std::size_t t = 1; t < frame.timestamps.size(); ++t)
        if (!timestamp_before(frame.timestamps[t - 1], frame.timestamps[t]))
            throw SchemaError("timestamps", "not strictly increasing at step " + std::to_string(t));

    for (Eigen::Index i = 0; i < frame.targets.rows(); ++i) {
        for (Eigen::Index t = 0; t < frame.targets.cols(); ++t) {
            const double v = frame.targets(i, t);
            if (!std::isfinite(v))
                throw SchemaError("targets", "non-finite value at row " + std::to_string(i) +
                                                 ", step " + std::to_string(t));
            if (!conforms(spec.value_kinds[static_cast<std::size_t>(i)], v))
                throw SchemaError("value_kind",
                                  "value " + std::to_string(v) + " is not " +
                                      std::string(to_string(
                                          spec.value_kinds[static_cast<std::size_t>(i)])));
        }
    }
    return spec;
}

ForecastMatrix::ForecastMatrix(Matrix values) : values_(std::move(values)) {}

void ForecastMatrix::check(std::size_t n_targets, std::size_t horizon) const {
    if (this->n_targets() != n_targets || this->horizon() != horizon)
        throw ShapeMismatch("forecast shape (" + std::to_string(values_.rows()) + ", " +
                            std::to_string(values_.cols()) + ") != expected (" +
                            std::to_string(n_targets) + ", " + std::to_string(horizon) + ")");
    if (!values_.allFinite()) throw NonFiniteForecast("forecast contains non-finite values");
}

WindowPlan plan_windows(std::size_t length, std::size_t context_len, std::size_t horizon,
                        std::size_t n_tune, std::size_t n_test) {
    if (context_len < 1) throw SchemaError("context_len", "must be >= 1");
    if (horizon < 1) throw SchemaError("horizon", "must be >= 1");
    const std::size_t required = context_len + horizon * (n_tune + n_test);
    if (length < required) throw InsufficientHistory(length, required);

    auto window_ending_before = [&](std::size_t eval_start) {
        return Window{eval_start - context_len, eval_start, eval_start, eval_start + horizon};
    };

    WindowPlan plan;
    plan.stride = horizon;
    const std::size_t test_begin = length - n_test * horizon;
    const std::size_t tune_begin = test_begin - n_tune * horizon;
    for (std::size_t k = 0; k < n_tune; ++k)
        plan.tune_windows.push_back(window_ending_before(tune_begin + k * horizon));
    for (std::size_t k = 0; k < n_test; ++k)
        plan.test_windows.push_back(window_ending_before(test_begin + k * horizon));
    return plan;
}

WindowPlan plan_windows_shrinking(std::size_t length, std::size_t context_len,
                                  std::size_t horizon, std::size_t n_tune, std::size_t n_test) {
    if (n_test < 1) n_test = 1;
    while (true) {
        const std::size_t required = context_len + horizon * (n_tune + n_test);
        if (length >= required || (n_tune == 0 && n_test == 1))
            return plan_windows(length, context_len, horizon, n_tune, n_test);
        if (n_tune > 0)
            --n_tune;
        else
            --n_test;
    }
}

Matrix slice_columns(const Matrix& m, std::size_t begin, std::size_t end) {
    if (m.rows() == 0) return Matrix(0, static_cast<Eigen::Index>(end - begin));
    return m.middleCols(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin));
}

}  // namespace tempus
