#pragma once

#include "tempus/core.hpp"

#include <array>
#include <optional>
#include <string_view>

namespace tempus::metrics {

enum class MetricId { MAE, MSE, RMSE, MAPE, MASE };

inline constexpr std::array<MetricId, 5> kAllMetrics = {MetricId::MAE, MetricId::MSE,
                                                        MetricId::RMSE, MetricId::MAPE,
                                                        MetricId::MASE};

std::string_view to_string(MetricId id);
MetricId parse_metric(std::string_view name);

// Every metric takes (forecast F, actual Y*, context Y). F and Y* are n x h;
// the context (n x l) is only read by MASE. Shape problems raise
// ShapeMismatch; division by a zero actual (MAPE) or by a zero naive scale
// (MASE) raises UndefinedMetric.

double mae(const Matrix& forecast, const Matrix& actual, const Matrix& context = {});
double mse(const Matrix& forecast, const Matrix& actual, const Matrix& context = {});
double rmse(const Matrix& forecast, const Matrix& actual, const Matrix& context = {});
/// In percent.
double mape(const Matrix& forecast, const Matrix& actual, const Matrix& context = {});
/// Errors scaled per variate by the mean absolute first difference of that
/// variate's context, i.e. the in-sample one-step naive error.
double mase(const Matrix& forecast, const Matrix& actual, const Matrix& context);

double compute(MetricId id, const Matrix& forecast, const Matrix& actual, const Matrix& context);

/// Same as compute, with UndefinedMetric mapped to an empty optional.
std::optional<double> try_compute(MetricId id, const Matrix& forecast, const Matrix& actual,
                                  const Matrix& context);

}  // namespace tempus::metrics
