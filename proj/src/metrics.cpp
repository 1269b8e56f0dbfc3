#include "tempus/metrics.hpp"

#include "tempus/errors.hpp"

#include <cmath>
#include <string>

namespace tempus::metrics {

std::string_view to_string(MetricId id) {
    switch (id) {
        case MetricId::MAE: return "MAE";
        case MetricId::MSE: return "MSE";
        case MetricId::RMSE: return "RMSE";
        case MetricId::MAPE: return "MAPE";
        case MetricId::MASE: return "MASE";
    }
    return "MAE";
}

MetricId parse_metric(std::string_view name) {
    for (MetricId id : kAllMetrics)
        if (to_string(id) == name) return id;
    throw InvalidParams("unknown metric '" + std::string(name) + "'");
}

namespace {

void check_shapes(const Matrix& forecast, const Matrix& actual) {
    if (forecast.rows() != actual.rows() || forecast.cols() != actual.cols())
        throw ShapeMismatch("forecast is " + std::to_string(forecast.rows()) + "x" +
                            std::to_string(forecast.cols()) + " but actual is " +
                            std::to_string(actual.rows()) + "x" +
                            std::to_string(actual.cols()));
    if (forecast.size() == 0) throw ShapeMismatch("empty forecast");
}

double count(const Matrix& m) { return static_cast<double>(m.rows() * m.cols()); }

}  // namespace

double mae(const Matrix& forecast, const Matrix& actual, const Matrix&) {
    check_shapes(forecast, actual);
    return (forecast - actual).cwiseAbs().sum() / count(forecast);
}

double mse(const Matrix& forecast, const Matrix& actual, const Matrix&) {
    check_shapes(forecast, actual);
    return (forecast - actual).squaredNorm() / count(forecast);
}

double rmse(const Matrix& forecast, const Matrix& actual, const Matrix& context) {
    return std::sqrt(mse(forecast, actual, context));
}

double mape(const Matrix& forecast, const Matrix& actual, const Matrix&) {
    check_shapes(forecast, actual);
    double total = 0.0;
    for (Eigen::Index i = 0; i < actual.rows(); ++i) {
        for (Eigen::Index t = 0; t < actual.cols(); ++t) {
            const double a = actual(i, t);
            if (a == 0.0) throw UndefinedMetric("MAPE undefined: zero actual value");
            total += std::abs(forecast(i, t) - a) / std::abs(a);
        }
    }
    return 100.0 * total / count(forecast);
}

double mase(const Matrix& forecast, const Matrix& actual, const Matrix& context) {
    check_shapes(forecast, actual);
    if (context.rows() != actual.rows())
        throw ShapeMismatch("context has " + std::to_string(context.rows()) +
                            " variates, forecast has " + std::to_string(actual.rows()));
    if (context.cols() < 2) throw UndefinedMetric("MASE undefined: context shorter than 2");

    const auto l = context.cols();
    double total = 0.0;
    for (Eigen::Index i = 0; i < actual.rows(); ++i) {
        double scale = 0.0;
        for (Eigen::Index t = 0; t + 1 < l; ++t)
            scale += std::abs(context(i, t + 1) - context(i, t));
        scale /= static_cast<double>(l - 1);
        if (scale == 0.0) throw UndefinedMetric("MASE undefined: constant context");
        for (Eigen::Index t = 0; t < actual.cols(); ++t)
            total += std::abs(forecast(i, t) - actual(i, t)) / scale;
    }
    return total / count(forecast);
}

double compute(MetricId id, const Matrix& forecast, const Matrix& actual,
               const Matrix& context) {
    switch (id) {
        case MetricId::MAE: return mae(forecast, actual, context);
        case MetricId::MSE: return mse(forecast, actual, context);
        case MetricId::RMSE: return rmse(forecast, actual, context);
        case MetricId::MAPE: return mape(forecast, actual, context);
        case MetricId::MASE: return mase(forecast, actual, context);
    }
    throw InvalidParams("unknown metric");
}

std::optional<double> try_compute(MetricId id, const Matrix& forecast, const Matrix& actual,
                                  const Matrix& context) {
    try {
        return compute(id, forecast, actual, context);
    } catch (const UndefinedMetric&) {
        return std::nullopt;
    }
}

}  // namespace tempus::metrics
