#include "tempus/optimize.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace tempus::optimize;

TEST_CASE("nelder_mead finds the minimum of a shifted quadratic") {
    auto f = [](std::span<const double> x) {
        return (x[0] - 0.3) * (x[0] - 0.3) + 2.0 * (x[1] + 0.4) * (x[1] + 0.4) + 1.0;
    };
    const auto r = nelder_mead(f, {0.0, 0.0});
    CHECK(r.converged);
    CHECK(r.x[0] == doctest::Approx(0.3).epsilon(1e-3));
    CHECK(r.x[1] == doctest::Approx(-0.4).epsilon(1e-3));
    CHECK(r.value == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("nelder_mead respects bounds") {
    auto f = [](std::span<const double> x) { return (x[0] - 5.0) * (x[0] - 5.0); };
    const Bounds b{{-0.99}, {0.99}};
    const auto r = nelder_mead(f, {0.0}, {}, &b);
    CHECK(r.x[0] <= 0.99);
    CHECK(r.x[0] == doctest::Approx(0.99).epsilon(1e-4));
}

TEST_CASE("nelder_mead treats non-finite values as infinitely bad") {
    auto f = [](std::span<const double> x) {
        if (x[0] < 0.0) return std::numeric_limits<double>::quiet_NaN();
        return (x[0] - 1.0) * (x[0] - 1.0);
    };
    const auto r = nelder_mead(f, {0.5});
    CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("nelder_mead reports an exhausted iteration budget") {
    auto rosenbrock = [](std::span<const double> x) {
        return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
    };
    NelderMeadOptions opts;
    opts.max_iterations = 5;
    const auto r = nelder_mead(rosenbrock, {-1.2, 1.0}, opts);
    CHECK_FALSE(r.converged);
    CHECK(r.iterations == 5);
}

TEST_CASE("nelder_mead is deterministic") {
    auto f = [](std::span<const double> x) { return std::cos(3 * x[0]) + x[1] * x[1] + x[0] * x[0]; };
    const auto a = nelder_mead(f, {0.7, -0.2});
    const auto b = nelder_mead(f, {0.7, -0.2});
    CHECK(a.x == b.x);
    CHECK(a.value == b.value);
}
