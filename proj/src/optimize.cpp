#include "tempus/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace tempus::optimize {

namespace {

struct Vertex {
    std::vector<double> x;
    double f;
};

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& objective,
                             std::vector<double> start, const NelderMeadOptions& options,
                             const Bounds* bounds) {
    const std::size_t n = start.size();

    auto project = [&](std::vector<double>& x) {
        if (!bounds) return;
        for (std::size_t i = 0; i < n; ++i)
            x[i] = std::clamp(x[i], bounds->lower[i], bounds->upper[i]);
    };
    auto evaluate = [&](std::vector<double> x) {
        project(x);
        double f = objective(x);
        if (!std::isfinite(f)) f = std::numeric_limits<double>::infinity();
        return Vertex{std::move(x), f};
    };

    if (n == 0) {
        Vertex v = evaluate(start);
        return {v.x, v.f, 0, true};
    }

    std::vector<Vertex> simplex;
    simplex.reserve(n + 1);
    simplex.push_back(evaluate(start));
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> x = simplex.front().x;
        double step = options.initial_step.empty() ? 0.1 : options.initial_step[i];
        // Step inward when the start sits on an upper bound.
        if (bounds && x[i] + step > bounds->upper[i]) step = -step;
        x[i] += step;
        simplex.push_back(evaluate(std::move(x)));
    }

    auto by_value = [](const Vertex& a, const Vertex& b) { return a.f < b.f; };

    int iteration = 0;
    for (; iteration < options.max_iterations; ++iteration) {
        std::stable_sort(simplex.begin(), simplex.end(), by_value);
        const double best = simplex.front().f;
        const double worst = simplex.back().f;
        if (std::isfinite(worst) &&
            worst - best <= options.tolerance * std::max(1.0, std::abs(best))) {
            return {simplex.front().x, best, iteration, true};
        }

        std::vector<double> centroid(n, 0.0);
        for (std::size_t v = 0; v < n; ++v)
            for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[v].x[i];
        for (double& c : centroid) c /= static_cast<double>(n);

        auto along = [&](double coefficient) {
            std::vector<double> x(n);
            for (std::size_t i = 0; i < n; ++i)
                x[i] = centroid[i] + coefficient * (simplex.back().x[i] - centroid[i]);
            return evaluate(std::move(x));
        };

        Vertex reflected = along(-1.0);
        if (reflected.f < simplex.front().f) {
            Vertex expanded = along(-2.0);
            simplex.back() = expanded.f < reflected.f ? std::move(expanded) : std::move(reflected);
            continue;
        }
        if (reflected.f < simplex[n - 1].f) {
            simplex.back() = std::move(reflected);
            continue;
        }
        Vertex contracted = reflected.f < simplex.back().f ? along(-0.5) : along(0.5);
        if (contracted.f < std::min(reflected.f, simplex.back().f)) {
            simplex.back() = std::move(contracted);
            continue;
        }
        for (std::size_t v = 1; v <= n; ++v) {
            std::vector<double> x(n);
            for (std::size_t i = 0; i < n; ++i)
                x[i] = simplex.front().x[i] + 0.5 * (simplex[v].x[i] - simplex.front().x[i]);
            simplex[v] = evaluate(std::move(x));
        }
    }

    std::stable_sort(simplex.begin(), simplex.end(), by_value);
    return {simplex.front().x, simplex.front().f, iteration, false};
}

}  // namespace tempus::optimize
