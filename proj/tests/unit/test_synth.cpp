#include "tempus/errors.hpp"
#include "tempus/synth.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace tempus;
using namespace tempus::synth;

namespace {

GenSpec spec_of(Family f, std::size_t n, double beta, std::uint64_t seed = 1, double period = 1.0) {
    GenSpec s;
    s.family = f;
    s.num_points = n;
    s.noise_scale = beta;
    s.seed = seed;
    s.period = period;
    return s;
}

double mean(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double variance(const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

}  // namespace

TEST_CASE("PRNG building blocks") {
    // First output of a SplitMix64 generator seeded with 0.
    CHECK(splitmix64(0) == 0xE220A8397B1DCDAFULL);
    // The 10000th output of a default-constructed mt19937_64 is fixed by the C++ standard.
    std::mt19937_64 e;
    e.discard(9999);
    CHECK(e() == 9981545732273789042ULL);

    Stream a(42), b(42), c(42, 1);
    for (int i = 0; i < 100; ++i) {
        const double u = a.uniform();
        CHECK(u == b.uniform());
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    CHECK(Stream(42).uniform() != c.uniform());
}

TEST_CASE("exponential noise") {
    CHECK(exponential_from_uniform(0.5, 2.0) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-15));
    CHECK(exponential_from_uniform(0.0, 3.0) == 0.0);
    for (double v : exponential_noise(50, 0.0, 9)) CHECK(v == 0.0);
    const auto noise = exponential_noise(10000, 2.0, 123);
    for (double v : noise) CHECK(v >= 0.0);
    CHECK(mean(noise) >= 1.9);
    CHECK(mean(noise) <= 2.1);
    CHECK(noise == exponential_noise(10000, 2.0, 123));
    CHECK(noise != exponential_noise(10000, 2.0, 124));
}

TEST_CASE("additive generators") {
    const auto fixed = generate(spec_of(Family::additive_fixed, 10, 0.0));
    CHECK(fixed.t.front() == 0);
    CHECK(fixed.y[0] == 6.0);
    CHECK(fixed.y == fixed.y_base);
    CHECK_FALSE(fixed.alpha_drawn.has_value());
    for (std::size_t i = 0; i < 10; ++i) {
        const double t = static_cast<double>(i);
        CHECK(fixed.y_base[i] == doctest::Approx(2 * std::sin(t) + 2 * std::cos(t / 2) + t / 4 + 4));
    }

    for (std::uint64_t seed : {1ULL, 2ULL, 77ULL}) {
        const auto r = generate(spec_of(Family::additive_random, 50, 0.0, seed));
        REQUIRE(r.alpha_drawn.has_value());
        CHECK(*r.alpha_drawn >= 0.0);
        CHECK(*r.alpha_drawn <= 5.0);
        for (std::size_t i = 0; i < r.y.size(); ++i) {
            const double t = static_cast<double>(r.t[i]);
            const double extra = r.y[i] - additive_base(t);
            CHECK(extra == doctest::Approx(std::sin(*r.alpha_drawn * t)).epsilon(1e-12));
            CHECK(std::fabs(extra) <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("multiplicative generators") {
    const auto fixed = generate(spec_of(Family::multiplicative_fixed, 5, 0.0));
    CHECK(fixed.y[0] == 3.0);
    CHECK(fixed.y == fixed.y_base);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto r = generate(spec_of(Family::multiplicative_random, 3, 0.5, seed));
        REQUIRE(r.alpha_drawn.has_value());
        CHECK(*r.alpha_drawn >= 5.0);
        CHECK(*r.alpha_drawn <= 10.0);
    }
}

TEST_CASE("periodic generator") {
    const auto p = generate(spec_of(Family::periodic, 4, 0.0, 1, 4.0));
    const double want[] = {0, 1, 0, -1};
    for (int i = 0; i < 4; ++i) CHECK(std::fabs(p.y[i] - want[i]) < 1e-12);

    GenSpec s = spec_of(Family::periodic, 500, 0.0, 1, 24.0);
    s.start_time = -37;
    const auto q = generate(s);
    for (std::size_t i = 0; i + 24 < q.y.size(); ++i) CHECK(q.y[i] == q.y[i + 24]);

    const auto noisy = generate(spec_of(Family::periodic, 1000, 0.7, 3, 7.5));
    for (std::size_t i = 0; i < noisy.y.size(); ++i) CHECK(noisy.y[i] - noisy.y_base[i] >= 0.0);
}

TEST_CASE("noise statistics at N = 10^4") {
    const auto g = generate(spec_of(Family::additive_fixed, 10000, 2.0, 2024));
    std::vector<double> resid(g.y.size());
    for (std::size_t i = 0; i < resid.size(); ++i) resid[i] = g.y[i] - g.y_base[i];
    for (double r : resid) CHECK(r >= 0.0);
    CHECK(mean(resid) == doctest::Approx(2.0).epsilon(0.05));
    CHECK(variance(resid) == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("same spec and seed give identical output") {
    for (Family f : {Family::additive_fixed, Family::additive_random, Family::multiplicative_fixed,
                     Family::multiplicative_random, Family::periodic}) {
        const GenSpec s = spec_of(f, 300, 1.5, 8, 12.0);
        const auto a = generate(s);
        const auto b = generate(s);
        CHECK(a.y == b.y);
        CHECK(a.y_base == b.y_base);
        CHECK(a.alpha_drawn == b.alpha_drawn);
    }
}

TEST_CASE("first differences of the additive trend have no linear component") {
    const auto g = generate(spec_of(Family::additive_fixed, 400, 0.0));
    std::vector<double> d;
    for (std::size_t i = 1; i < g.y_base.size(); ++i) d.push_back(g.y_base[i] - g.y_base[i - 1]);
    const double m = mean(d);
    // OLS slope of (d - mean) against the index; the t/4 trend differences to a constant.
    const double tm = static_cast<double>(d.size() - 1) / 2.0;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        sxy += (static_cast<double>(i) - tm) * (d[i] - m);
        sxx += (static_cast<double>(i) - tm) * (static_cast<double>(i) - tm);
    }
    CHECK(std::fabs(sxy / sxx) < 1e-3);
    CHECK(m == doctest::Approx(0.25).epsilon(0.05));
}

TEST_CASE("invalid specs are rejected") {
    CHECK_THROWS_AS(generate(spec_of(Family::additive_fixed, 0, 0.0)), InvalidParams);
    CHECK_THROWS_AS(generate(spec_of(Family::additive_fixed, 5, -1.0)), InvalidParams);
    CHECK_THROWS_AS(generate(spec_of(Family::periodic, 5, 0.0, 1, 0.0)), InvalidParams);
    CHECK_THROWS_AS(generate_additive(spec_of(Family::periodic, 5, 0.0, 1, 3.0)), InvalidParams);
    CHECK_THROWS_AS(parse_family("brownian"), InvalidParams);
    for (Family f : {Family::additive_fixed, Family::periodic}) CHECK(parse_family(to_string(f)) == f);
}
