#pragma once

#include <functional>
#include <span>
#include <vector>

namespace tempus::optimize {

struct Bounds {
    std::vector<double> lower;
    std::vector<double> upper;
};

struct NelderMeadOptions {
    int max_iterations = 500;
    /// Stop when max(f) - min(f) over the simplex <= tolerance * max(1, |min f|).
    double tolerance = 1e-8;
    /// Per-coordinate initial simplex offsets; empty means 0.1 for all.
    std::vector<double> initial_step;
};

struct NelderMeadResult {
    std::vector<double> x;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Derivative-free simplex minimization. Points are projected into `bounds`
/// (when given) before every evaluation; non-finite objective values count
/// as +infinity.
NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& objective,
                             std::vector<double> start, const NelderMeadOptions& options = {},
                             const Bounds* bounds = nullptr);

}  // namespace tempus::optimize
