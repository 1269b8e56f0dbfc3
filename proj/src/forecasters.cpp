#include "tempus/forecasters.hpp"

#include "tempus/errors.hpp"
#include "tempus/optimize.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace tempus::forecasters {

namespace {

constexpr std::array<std::pair<ModelId, std::string_view>, 8> kModelNames = {{
    {ModelId::seasonal_naive, "seasonal_naive"},
    {ModelId::croston, "croston"},
    {ModelId::ses, "ses"},
    {ModelId::holt_winters_add, "holt_winters_add"},
    {ModelId::holt_winters_mul, "holt_winters_mul"},
    {ModelId::theta, "theta"},
    {ModelId::arima, "arima"},
    {ModelId::drift, "drift"},
}};

// Anchored at the first element so that a constant series has a mean equal
// to that constant bit for bit.
double anchored_mean(std::span<const double> y) {
    const double anchor = y.front();
    double deviation = 0.0;
    for (double v : y) deviation += v - anchor;
    return anchor + deviation / static_cast<double>(y.size());
}

void check_smoothing(double value, const char* name, bool allow_zero) {
    const bool ok = allow_zero ? (value >= 0.0 && value <= 1.0) : (value > 0.0 && value <= 1.0);
    if (!ok || std::isnan(value))
        throw InvalidParams(std::string(name) + " must lie in " +
                            (allow_zero ? "[0, 1]" : "(0, 1]"));
}

void require_nonempty(std::span<const double> y, std::size_t minimum, const char* model) {
    if (y.size() < minimum)
        throw InvalidParams(std::string(model) + " needs at least " + std::to_string(minimum) +
                            " context points");
}

template <typename Kernel>
ForecastMatrix per_variate(const Matrix& context, std::size_t horizon, Kernel&& kernel) {
    if (horizon < 1) throw InvalidParams("horizon must be >= 1");
    Matrix out(context.rows(), static_cast<Eigen::Index>(horizon));
    for (Eigen::Index i = 0; i < context.rows(); ++i) {
        const std::vector<double> row = kernel(row_span(context, i));
        std::copy(row.begin(), row.end(), out.data() + i * out.cols());
    }
    return ForecastMatrix(std::move(out));
}

}  // namespace

std::string_view to_string(ModelId id) {
    for (const auto& [model, name] : kModelNames)
        if (model == id) return name;
    return "unknown";
}

ModelId parse_model_id(std::string_view name) {
    for (const auto& [model, known] : kModelNames)
        if (known == name) return model;
    throw UnknownModel(std::string(name));
}

bool is_model_id(std::string_view name) {
    return std::any_of(kModelNames.begin(), kModelNames.end(),
                       [&](const auto& entry) { return entry.second == name; });
}

double Params::get(const std::string& name) const {
    auto it = values_.find(name);
    if (it == values_.end()) throw InvalidParams("missing parameter '" + name + "'");
    return it->second;
}

std::size_t Params::get_count(const std::string& name) const {
    const double v = get(name);
    if (!(v >= 0.0) || std::floor(v) != v || v > 1e9)
        throw InvalidParams("parameter '" + name + "' must be a non-negative integer");
    return static_cast<std::size_t>(v);
}

bool Params::get_flag(const std::string& name) const {
    const double v = get(name);
    if (v != 0.0 && v != 1.0) throw InvalidParams("parameter '" + name + "' must be 0 or 1");
    return v == 1.0;
}

std::string describe(const HyperAssignment& assignment) {
    std::ostringstream out;
    out << assignment.model << '(';
    bool first = true;
    for (const auto& [name, value] : assignment.params.values()) {
        if (!first) out << ", ";
        first = false;
        out << name << '=' << std::setprecision(17) << value;
    }
    out << ')';
    return out.str();
}

// ---------------------------------------------------------------------------
// Kernels

std::vector<double> seasonal_naive(std::span<const double> y, std::size_t horizon,
                                   std::size_t period) {
    if (period < 1 || period > y.size())
        throw InvalidPeriod("seasonal period " + std::to_string(period) +
                            " outside [1, " + std::to_string(y.size()) + "]");
    const std::size_t l = y.size();
    std::vector<double> out(horizon);
    for (std::size_t j = 1; j <= horizon; ++j) {
        const std::size_t cycles = (j + period - 1) / period;
        // 1-indexed position l + j - L*ceil(j/L), which is always in [l-L+1, l].
        out[j - 1] = y[l + j - period * cycles - 1];
    }
    return out;
}

std::vector<double> croston(std::span<const double> y, std::size_t horizon, double alpha) {
    check_smoothing(alpha, "alpha", false);
    require_nonempty(y, 1, "croston");

    // Only strictly positive observations count as demand.
    std::size_t first = y.size();
    for (std::size_t t = 0; t < y.size(); ++t) {
        if (y[t] > 0.0) {
            first = t;
            break;
        }
    }
    if (first == y.size()) return std::vector<double>(horizon, 0.0);

    double size = y[first];
    double interval = static_cast<double>(first + 1);
    std::size_t last_demand = first;
    for (std::size_t t = first + 1; t < y.size(); ++t) {
        if (y[t] <= 0.0) continue;
        const auto q = static_cast<double>(t - last_demand);
        size += alpha * (y[t] - size);
        interval += alpha * (q - interval);
        last_demand = t;
    }
    return std::vector<double>(horizon, size / interval);
}

double ses_level(std::span<const double> y, double alpha) {
    check_smoothing(alpha, "alpha", false);
    require_nonempty(y, 1, "ses");
    double level = y.front();
    for (std::size_t t = 1; t < y.size(); ++t) level += alpha * (y[t] - level);
    return level;
}

std::vector<double> ses(std::span<const double> y, std::size_t horizon, double alpha) {
    return std::vector<double>(horizon, ses_level(y, alpha));
}

std::vector<double> holt_winters(std::span<const double> y, std::size_t horizon,
                                 const HoltWintersParams& params) {
    check_smoothing(params.alpha, "alpha", true);
    check_smoothing(params.beta, "beta", true);
    check_smoothing(params.gamma, "gamma", true);
    const std::size_t period = params.period;
    const std::size_t l = y.size();
    if (period < 2 || 2 * period > l)
        throw InvalidPeriod("Holt-Winters needs 2 <= L <= l/2 (L=" + std::to_string(period) +
                            ", l=" + std::to_string(l) + ")");
    const bool multiplicative = params.seasonality == Seasonality::multiplicative;
    if (multiplicative && std::any_of(y.begin(), y.end(), [](double v) { return v <= 0.0; }))
        throw NonPositiveData("multiplicative Holt-Winters needs strictly positive data");

    const double first_mean = anchored_mean(y.subspan(0, period));
    const double second_mean = anchored_mean(y.subspan(period, period));

    // season[t] holds s_t for 1-indexed time t; level and trend describe time L
    // once initialization has consumed the first season.
    std::vector<double> season(l + 1, 0.0);
    double level = first_mean;
    double trend = (second_mean - first_mean) / static_cast<double>(period);
    for (std::size_t t = 1; t <= period; ++t)
        season[t] = multiplicative ? y[t - 1] / level : y[t - 1] - level;

    const double a = params.alpha;
    const double b = params.beta;
    const double g = params.gamma;
    for (std::size_t t = period + 1; t <= l; ++t) {
        const double obs = y[t - 1];
        const double prior = season[t - period];
        const double previous_level = level;
        if (multiplicative) {
            level = a * (obs / prior) + (1.0 - a) * (previous_level + trend);
            trend = b * (level - previous_level) + (1.0 - b) * trend;
            season[t] = g * (obs / level) + (1.0 - g) * prior;
        } else {
            level = a * (obs - prior) + (1.0 - a) * (previous_level + trend);
            trend = b * (level - previous_level) + (1.0 - b) * trend;
            season[t] = g * (obs - level) + (1.0 - g) * prior;
        }
    }

    std::vector<double> out(horizon);
    for (std::size_t j = 1; j <= horizon; ++j) {
        const std::size_t offset = (j - 1) % period + 1;
        const double s = season[l - period + offset];
        const double base = level + static_cast<double>(j) * trend;
        out[j - 1] = multiplicative ? base * s : base + s;
    }
    return out;
}

std::vector<double> theta(std::span<const double> y, std::size_t horizon, double alpha) {
    check_smoothing(alpha, "alpha", false);
    require_nonempty(y, 2, "theta");
    const std::size_t l = y.size();

    // OLS trend over t = 1..l.
    const double t_mean = (static_cast<double>(l) + 1.0) / 2.0;
    const double y_mean = anchored_mean(y);
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t t = 1; t <= l; ++t) {
        const double dt = static_cast<double>(t) - t_mean;
        sxy += dt * (y[t - 1] - y_mean);
        sxx += dt * dt;
    }
    const double slope = sxy / sxx;
    const double intercept = y_mean - slope * t_mean;
    auto trend_at = [&](double t) { return intercept + slope * t; };

    // theta = 2 line: doubles curvature around the trend.
    std::vector<double> doubled(l);
    for (std::size_t t = 1; t <= l; ++t)
        doubled[t - 1] = 2.0 * y[t - 1] - trend_at(static_cast<double>(t));
    const double short_term = ses_level(doubled, alpha);

    std::vector<double> out(horizon);
    for (std::size_t j = 1; j <= horizon; ++j)
        out[j - 1] = 0.5 * (trend_at(static_cast<double>(l + j)) + short_term);
    return out;
}

std::vector<double> drift(std::span<const double> y, std::size_t horizon) {
    require_nonempty(y, 2, "drift");
    const double last = y.back();
    const double slope = (last - y.front()) / static_cast<double>(y.size() - 1);
    std::vector<double> out(horizon);
    for (std::size_t j = 1; j <= horizon; ++j) out[j - 1] = last + static_cast<double>(j) * slope;
    return out;
}

// ---------------------------------------------------------------------------
// ARIMA

namespace {

std::vector<double> difference(std::span<const double> y, std::size_t d) {
    std::vector<double> w(y.begin(), y.end());
    for (std::size_t k = 0; k < d; ++k) {
        std::vector<double> next(w.size() - 1);
        for (std::size_t t = 1; t < w.size(); ++t) next[t - 1] = w[t] - w[t - 1];
        w = std::move(next);
    }
    return w;
}

void check_order(const ArimaOrder& order, std::size_t length) {
    if (order.p > 2 || order.q > 2 || order.d > 1)
        throw InvalidParams("ARIMA orders must satisfy p, q <= 2 and d <= 1");
    if (length < order.d || length - order.d <= order.p + order.q + 1)
        throw InvalidParams("ARIMA(" + std::to_string(order.p) + "," + std::to_string(order.d) +
                            "," + std::to_string(order.q) + ") needs l - d > p + q + 1 (l=" +
                            std::to_string(length) + ")");
}

// One-step residuals on the differenced series with pre-sample shocks at zero.
// Residuals before index p are left at zero.
std::vector<double> css_residuals(const std::vector<double>& w, const ArimaOrder& order,
                                  const ArimaCoefficients& c) {
    std::vector<double> e(w.size(), 0.0);
    for (std::size_t t = order.p; t < w.size(); ++t) {
        double prediction = c.constant;
        for (std::size_t i = 0; i < order.p; ++i) prediction += c.ar[i] * w[t - 1 - i];
        for (std::size_t j = 0; j < order.q; ++j)
            if (t >= j + 1) prediction += c.ma[j] * e[t - 1 - j];
        e[t] = w[t] - prediction;
    }
    return e;
}

ArimaCoefficients fit_autoregression(const std::vector<double>& w, const ArimaOrder& order) {
    ArimaCoefficients out;
    out.ar.assign(order.p, 0.0);
    if (order.p == 0) {
        if (order.with_constant) out.constant = anchored_mean(w);
        return out;
    }

    const std::size_t rows = w.size() - order.p;
    const std::size_t offset = order.with_constant ? 1 : 0;
    Eigen::MatrixXd design(rows, order.p + offset);
    Eigen::VectorXd response(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t t = r + order.p;
        if (order.with_constant) design(r, 0) = 1.0;
        for (std::size_t i = 0; i < order.p; ++i) design(r, offset + i) = w[t - 1 - i];
        response(r) = w[t];
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < design.cols())
        throw SingularFit("autoregressive design matrix is rank deficient");
    const Eigen::VectorXd beta = qr.solve(response);
    if (order.with_constant) out.constant = beta(0);
    for (std::size_t i = 0; i < order.p; ++i) out.ar[i] = beta(offset + i);
    return out;
}

}  // namespace

ArimaCoefficients arima_fit(std::span<const double> y, const ArimaOrder& order) {
    check_order(order, y.size());
    const std::vector<double> w = difference(y, order.d);

    // A constant differenced series is matched exactly by its level alone.
    const bool flat = std::all_of(w.begin(), w.end(), [&](double v) { return v == w.front(); });
    if (flat && (order.with_constant || w.front() == 0.0)) {
        ArimaCoefficients exact;
        exact.constant = order.with_constant ? w.front() : 0.0;
        exact.ar.assign(order.p, 0.0);
        exact.ma.assign(order.q, 0.0);
        return exact;
    }

    if (order.q == 0) return fit_autoregression(w, order);

    ArimaCoefficients start;
    try {
        start = fit_autoregression(w, ArimaOrder{order.p, 0, 0, order.with_constant});
    } catch (const SingularFit&) {
        start.ar.assign(order.p, 0.0);
        start.constant = order.with_constant ? anchored_mean(w) : 0.0;
    }
    for (double& phi : start.ar)
        phi = std::clamp(phi, -kArimaCoefficientBound, kArimaCoefficientBound);

    // Parameter vector layout: [constant?, ar..., ma...].
    const std::size_t offset = order.with_constant ? 1 : 0;
    const std::size_t dims = offset + order.p + order.q;
    auto unpack = [&](std::span<const double> x) {
        ArimaCoefficients c;
        c.constant = order.with_constant ? x[0] : 0.0;
        c.ar.assign(x.begin() + static_cast<std::ptrdiff_t>(offset),
                    x.begin() + static_cast<std::ptrdiff_t>(offset + order.p));
        c.ma.assign(x.begin() + static_cast<std::ptrdiff_t>(offset + order.p), x.end());
        return c;
    };

    std::vector<double> x0;
    if (order.with_constant) x0.push_back(start.constant);
    x0.insert(x0.end(), start.ar.begin(), start.ar.end());
    x0.insert(x0.end(), order.q, 0.0);

    double spread = 0.0;
    {
        const double mean = anchored_mean(w);
        for (double v : w) spread += (v - mean) * (v - mean);
        spread = std::sqrt(spread / static_cast<double>(w.size()));
    }

    optimize::Bounds bounds;
    optimize::NelderMeadOptions options;
    options.max_iterations = kArimaMaxIterations;
    options.tolerance = kArimaTolerance;
    for (std::size_t i = 0; i < dims; ++i) {
        const bool is_constant = order.with_constant && i == 0;
        const double inf = std::numeric_limits<double>::infinity();
        bounds.lower.push_back(is_constant ? -inf : -kArimaCoefficientBound);
        bounds.upper.push_back(is_constant ? inf : kArimaCoefficientBound);
        options.initial_step.push_back(is_constant ? 0.1 * std::max(spread, 1e-6) : 0.1);
    }

    auto objective = [&](std::span<const double> x) {
        const std::vector<double> e = css_residuals(w, order, unpack(x));
        double sum = 0.0;
        for (std::size_t t = order.p; t < e.size(); ++t) sum += e[t] * e[t];
        return sum;
    };

    const auto result = optimize::nelder_mead(objective, x0, options, &bounds);
    if (!result.converged)
        throw NonConvergence("conditional sum of squares search hit the iteration cap");
    return unpack(result.x);
}

std::vector<double> arima_forecast(std::span<const double> y, const ArimaOrder& order,
                                   const ArimaCoefficients& coefficients, std::size_t horizon) {
    check_order(order, y.size());
    if (coefficients.ar.size() != order.p || coefficients.ma.size() != order.q)
        throw InvalidParams("coefficient counts do not match the ARIMA order");

    std::vector<double> w = difference(y, order.d);
    std::vector<double> e = css_residuals(w, order, coefficients);
    const std::size_t n = w.size();
    for (std::size_t j = 0; j < horizon; ++j) {
        const std::size_t t = n + j;
        double next = coefficients.constant;
        for (std::size_t i = 0; i < order.p; ++i) next += coefficients.ar[i] * w[t - 1 - i];
        for (std::size_t k = 0; k < order.q; ++k)
            if (t >= k + 1) next += coefficients.ma[k] * e[t - 1 - k];
        w.push_back(next);
        e.push_back(0.0);
    }

    std::vector<double> out(w.begin() + static_cast<std::ptrdiff_t>(n), w.end());
    if (order.d == 1) {
        double level = y.back();
        for (double& v : out) {
            level += v;
            v = level;
        }
    }
    return out;
}

std::vector<double> arima(std::span<const double> y, std::size_t horizon,
                          const ArimaOrder& order) {
    return arima_forecast(y, order, arima_fit(y, order), horizon);
}

// ---------------------------------------------------------------------------
// Matrix front-ends

ForecastMatrix seasonal_naive_forecast(const Matrix& context, std::size_t horizon,
                                       std::size_t period) {
    return per_variate(context, horizon,
                       [&](auto y) { return seasonal_naive(y, horizon, period); });
}

ForecastMatrix croston_forecast(const Matrix& context, std::size_t horizon, double alpha) {
    return per_variate(context, horizon, [&](auto y) { return croston(y, horizon, alpha); });
}

ForecastMatrix ses_forecast(const Matrix& context, std::size_t horizon, double alpha) {
    return per_variate(context, horizon, [&](auto y) { return ses(y, horizon, alpha); });
}

ForecastMatrix holt_winters_forecast(const Matrix& context, std::size_t horizon,
                                     const HoltWintersParams& params) {
    return per_variate(context, horizon,
                       [&](auto y) { return holt_winters(y, horizon, params); });
}

ForecastMatrix theta_forecast(const Matrix& context, std::size_t horizon, double alpha) {
    return per_variate(context, horizon, [&](auto y) { return theta(y, horizon, alpha); });
}

ForecastMatrix arima_fit_forecast(const Matrix& context, std::size_t horizon,
                                  const ArimaOrder& order) {
    return per_variate(context, horizon, [&](auto y) { return arima(y, horizon, order); });
}

ForecastMatrix drift_forecast(const Matrix& context, std::size_t horizon) {
    return per_variate(context, horizon, [&](auto y) { return drift(y, horizon); });
}

namespace {

void require_exact_params(const Params& params, std::initializer_list<const char*> names,
                          std::string_view model) {
    std::size_t matched = 0;
    for (const char* name : names) {
        if (!params.has(name))
            throw InvalidParams(std::string(model) + " requires parameter '" + name + "'");
        ++matched;
    }
    if (params.values().size() != matched)
        throw InvalidParams(std::string(model) + " got unexpected parameters");
}

}  // namespace

ForecastMatrix forecast(const HyperAssignment& assignment, const Matrix& context,
                        std::size_t horizon) {
    const ModelId id = parse_model_id(assignment.model);
    const Params& p = assignment.params;
    ForecastMatrix result;
    switch (id) {
        case ModelId::seasonal_naive:
            require_exact_params(p, {"L"}, assignment.model);
            result = seasonal_naive_forecast(context, horizon, p.get_count("L"));
            break;
        case ModelId::croston:
            require_exact_params(p, {"alpha"}, assignment.model);
            result = croston_forecast(context, horizon, p.get("alpha"));
            break;
        case ModelId::ses:
            require_exact_params(p, {"alpha"}, assignment.model);
            result = ses_forecast(context, horizon, p.get("alpha"));
            break;
        case ModelId::holt_winters_add:
        case ModelId::holt_winters_mul: {
            require_exact_params(p, {"L", "alpha", "beta", "gamma"}, assignment.model);
            HoltWintersParams hw;
            hw.seasonality = id == ModelId::holt_winters_mul ? Seasonality::multiplicative
                                                             : Seasonality::additive;
            hw.alpha = p.get("alpha");
            hw.beta = p.get("beta");
            hw.gamma = p.get("gamma");
            hw.period = p.get_count("L");
            result = holt_winters_forecast(context, horizon, hw);
            break;
        }
        case ModelId::theta:
            require_exact_params(p, {"alpha"}, assignment.model);
            result = theta_forecast(context, horizon, p.get("alpha"));
            break;
        case ModelId::arima: {
            require_exact_params(p, {"p", "d", "q", "with_constant"}, assignment.model);
            const ArimaOrder order{p.get_count("p"), p.get_count("d"), p.get_count("q"),
                                   p.get_flag("with_constant")};
            result = arima_fit_forecast(context, horizon, order);
            break;
        }
        case ModelId::drift:
            require_exact_params(p, {}, assignment.model);
            result = drift_forecast(context, horizon);
            break;
    }
    result.check(static_cast<std::size_t>(context.rows()), horizon);
    return result;
}

// ---------------------------------------------------------------------------
// Grids

namespace {

constexpr std::array<std::size_t, 7> kSeasonalPeriods = {1, 4, 7, 12, 24, 52, 168};
constexpr std::array<double, 7> kSmoothingLevels = {0.05, 0.1, 0.2, 0.3, 0.5, 0.8, 1.0};
constexpr std::array<double, 3> kHoltWintersLevels = {0.1, 0.3, 0.5};
constexpr std::array<double, 3> kHoltWintersTrend = {0.0, 0.1, 0.3};

bool any_nonpositive(const TaskSpec& task) {
    if (!task.data) return false;
    return (task.data->targets.array() <= 0.0).any();
}

void add_holt_winters(std::vector<HyperAssignment>& out, ModelId id, const TaskSpec& task) {
    for (std::size_t period : kSeasonalPeriods) {
        if (period < 2 || period > task.context_len / 2) continue;
        for (double alpha : kHoltWintersLevels)
            for (double beta : kHoltWintersTrend)
                for (double gamma : kHoltWintersLevels)
                    out.push_back({std::string(to_string(id)),
                                   Params{{"L", static_cast<double>(period)},
                                          {"alpha", alpha},
                                          {"beta", beta},
                                          {"gamma", gamma}}});
    }
}

}  // namespace

std::vector<std::string> native_families() {
    std::vector<std::string> out;
    for (const auto& [id, name] : kModelNames) out.emplace_back(name);
    out.emplace_back("holt_winters");
    return out;
}

bool is_native_family(std::string_view family) {
    return family == "holt_winters" || is_model_id(family);
}

HyperGrid default_grid(std::string_view family, const TaskSpec& task) {
    HyperGrid grid;
    grid.family = std::string(family);
    auto& out = grid.assignments;

    if (family == "holt_winters") {
        add_holt_winters(out, ModelId::holt_winters_add, task);
        if (!any_nonpositive(task)) add_holt_winters(out, ModelId::holt_winters_mul, task);
        std::sort(out.begin(), out.end());
        return grid;
    }

    const ModelId id = parse_model_id(family);
    const std::string name(family);
    switch (id) {
        case ModelId::seasonal_naive:
            for (std::size_t period : kSeasonalPeriods)
                if (period <= task.context_len)
                    out.push_back({name, Params{{"L", static_cast<double>(period)}}});
            break;
        case ModelId::croston:
        case ModelId::ses:
        case ModelId::theta:
            for (double alpha : kSmoothingLevels) out.push_back({name, Params{{"alpha", alpha}}});
            break;
        case ModelId::holt_winters_add: add_holt_winters(out, id, task); break;
        case ModelId::holt_winters_mul:
            if (!any_nonpositive(task)) add_holt_winters(out, id, task);
            break;
        case ModelId::arima:
            for (std::size_t p = 0; p <= 2; ++p)
                for (std::size_t d = 0; d <= 1; ++d)
                    for (std::size_t q = 0; q <= 1; ++q) {
                        if (p == 0 && d == 0 && q == 0) continue;
                        for (double constant : {0.0, 1.0})
                            out.push_back({name, Params{{"p", static_cast<double>(p)},
                                                        {"d", static_cast<double>(d)},
                                                        {"q", static_cast<double>(q)},
                                                        {"with_constant", constant}}});
                    }
            break;
        case ModelId::drift: out.push_back({name, Params{}}); break;
    }
    std::sort(out.begin(), out.end());
    return grid;
}

}  // namespace tempus::forecasters
