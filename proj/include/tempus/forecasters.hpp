#pragma once

#include "tempus/core.hpp"

#include <compare>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tempus::forecasters {

enum class ModelId {
    seasonal_naive,
    croston,
    ses,
    holt_winters_add,
    holt_winters_mul,
    theta,
    arima,
    drift,
};

std::string_view to_string(ModelId id);
/// Throws UnknownModel.
ModelId parse_model_id(std::string_view name);
bool is_model_id(std::string_view name);

/// Ordered name -> value map. Integer and flag parameters are stored as
/// doubles so every assignment serializes the same way.
class Params {
public:
    Params() = default;
    Params(std::initializer_list<std::pair<const std::string, double>> init) : values_(init) {}

    void set(const std::string& name, double value) { values_[name] = value; }
    bool has(const std::string& name) const { return values_.contains(name); }
    /// Throws InvalidParams when the name is absent.
    double get(const std::string& name) const;
    /// Throws InvalidParams unless the value is a non-negative integer.
    std::size_t get_count(const std::string& name) const;
    bool get_flag(const std::string& name) const;

    const std::map<std::string, double>& values() const { return values_; }
    bool empty() const { return values_.empty(); }

    auto operator<=>(const Params&) const = default;
    bool operator==(const Params&) const = default;

private:
    std::map<std::string, double> values_;
};

struct HyperAssignment {
    std::string model;
    Params params;

    auto operator<=>(const HyperAssignment&) const = default;
    bool operator==(const HyperAssignment&) const = default;
};

/// `family` is the benchmark-facing model name; a family may span several
/// concrete model ids (holt_winters covers both seasonal variants).
struct HyperGrid {
    std::string family;
    std::vector<HyperAssignment> assignments;
};

std::string describe(const HyperAssignment& assignment);

// Per-series kernels. Each takes the fitting history of one variate.

std::vector<double> seasonal_naive(std::span<const double> y, std::size_t horizon,
                                   std::size_t period);
std::vector<double> croston(std::span<const double> y, std::size_t horizon, double alpha);
std::vector<double> ses(std::span<const double> y, std::size_t horizon, double alpha);
/// Final SES level with the first observation as initial level.
double ses_level(std::span<const double> y, double alpha);

enum class Seasonality { additive, multiplicative };

struct HoltWintersParams {
    Seasonality seasonality = Seasonality::additive;
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    std::size_t period = 2;
};

std::vector<double> holt_winters(std::span<const double> y, std::size_t horizon,
                                 const HoltWintersParams& params);
std::vector<double> theta(std::span<const double> y, std::size_t horizon, double alpha);
std::vector<double> drift(std::span<const double> y, std::size_t horizon);

struct ArimaOrder {
    std::size_t p = 0;
    std::size_t d = 0;
    std::size_t q = 0;
    bool with_constant = false;
};

/// Coefficients estimated on the d-times differenced series.
struct ArimaCoefficients {
    double constant = 0.0;
    std::vector<double> ar;
    std::vector<double> ma;
};

inline constexpr double kArimaCoefficientBound = 0.99;
inline constexpr int kArimaMaxIterations = 500;
inline constexpr double kArimaTolerance = 1e-8;

/// Pure AR orders use least squares; MA terms use conditional sum of squares
/// minimized by a bounded Nelder-Mead search. Throws SingularFit,
/// NonConvergence or InvalidParams.
ArimaCoefficients arima_fit(std::span<const double> y, const ArimaOrder& order);

/// Recursive forecast with future shocks set to zero, integrated back to the
/// original scale.
std::vector<double> arima_forecast(std::span<const double> y, const ArimaOrder& order,
                                   const ArimaCoefficients& coefficients, std::size_t horizon);

std::vector<double> arima(std::span<const double> y, std::size_t horizon,
                          const ArimaOrder& order);

// Matrix front-ends. Variates are forecast independently with shared params.

ForecastMatrix seasonal_naive_forecast(const Matrix& context, std::size_t horizon,
                                       std::size_t period);
ForecastMatrix croston_forecast(const Matrix& context, std::size_t horizon, double alpha);
ForecastMatrix ses_forecast(const Matrix& context, std::size_t horizon, double alpha);
ForecastMatrix holt_winters_forecast(const Matrix& context, std::size_t horizon,
                                     const HoltWintersParams& params);
ForecastMatrix theta_forecast(const Matrix& context, std::size_t horizon, double alpha);
ForecastMatrix arima_fit_forecast(const Matrix& context, std::size_t horizon,
                                  const ArimaOrder& order);
ForecastMatrix drift_forecast(const Matrix& context, std::size_t horizon);

/// Dispatches on `assignment.model`, checking that exactly the required
/// parameters are present. The result is shape- and finiteness-checked.
ForecastMatrix forecast(const HyperAssignment& assignment, const Matrix& context,
                        std::size_t horizon);

/// Names accepted by default_grid: every model id plus "holt_winters".
std::vector<std::string> native_families();
bool is_native_family(std::string_view family);

/// Deterministic grid, sorted by (model, params).
HyperGrid default_grid(std::string_view family, const TaskSpec& task);

}  // namespace tempus::forecasters
