#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

namespace tempus::synth {

enum class Family {
    additive_fixed,
    additive_random,
    multiplicative_fixed,
    multiplicative_random,
    periodic,
};

std::string_view to_string(Family family);
Family parse_family(std::string_view name);

struct GenSpec {
    Family family = Family::additive_fixed;
    std::size_t num_points = 1;
    std::int64_t start_time = 0;
    double noise_scale = 0.0;
    double period = 1.0;
    std::uint64_t seed = 0;
};

struct GenOutput {
    std::vector<std::int64_t> t;
    std::vector<double> y;
    std::vector<double> y_base;
    std::optional<double> alpha_drawn;
};

/// Throws InvalidParams on N == 0, negative scale, or non-positive period.
void validate(const GenSpec& spec);

/// Random source for every generator: std::mt19937_64 (bit-exact across
/// standard libraries) seeded through SplitMix64 so that distinct stream ids
/// give decorrelated sequences. Uniform draws take the top 53 bits, which
/// keeps them portable, unlike std::uniform_real_distribution.
class Stream {
public:
    explicit Stream(std::uint64_t seed, std::uint64_t stream_id = 0);

    /// Uniform on [0, 1).
    double uniform();
    double uniform(double low, double high);

private:
    std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Inverse CDF of the exponential distribution with the given scale (mean).
double exponential_from_uniform(double u, double scale);

/// i.i.d. exponential draws; a zero scale yields zeros without touching the RNG.
std::vector<double> exponential_noise(std::size_t n, double scale, std::uint64_t seed);
std::vector<double> exponential_noise(std::size_t n, double scale, Stream& stream);

double additive_base(double t);
double multiplicative_base(double t);

GenOutput generate_additive(const GenSpec& spec);
GenOutput generate_multiplicative(const GenSpec& spec);
GenOutput generate_periodic(const GenSpec& spec);
/// Dispatches on spec.family.
GenOutput generate(const GenSpec& spec);

}  // namespace tempus::synth
