#include "tempus/synth.hpp"

#include "tempus/errors.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <string>

namespace tempus::synth {

std::string_view to_string(Family family) {
    switch (family) {
        case Family::additive_fixed: return "additive_fixed";
        case Family::additive_random: return "additive_random";
        case Family::multiplicative_fixed: return "multiplicative_fixed";
        case Family::multiplicative_random: return "multiplicative_random";
        case Family::periodic: return "periodic";
    }
    return "additive_fixed";
}

Family parse_family(std::string_view name) {
    for (Family f : {Family::additive_fixed, Family::additive_random,
                     Family::multiplicative_fixed, Family::multiplicative_random,
                     Family::periodic})
        if (to_string(f) == name) return f;
    throw InvalidParams("unknown generator family '" + std::string(name) + "'");
}

void validate(const GenSpec& spec) {
    if (spec.num_points < 1) throw InvalidParams("num_points must be >= 1");
    if (!(spec.noise_scale >= 0.0) || !std::isfinite(spec.noise_scale))
        throw InvalidParams("noise_scale must be finite and >= 0");
    if (spec.family == Family::periodic && !(spec.period > 0.0 && std::isfinite(spec.period)))
        throw InvalidParams("period must be > 0");
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

Stream::Stream(std::uint64_t seed, std::uint64_t stream_id)
    : engine_(splitmix64(seed ^ splitmix64(stream_id))) {}

double Stream::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Stream::uniform(double low, double high) { return low + (high - low) * uniform(); }

double exponential_from_uniform(double u, double scale) { return -scale * std::log1p(-u); }

std::vector<double> exponential_noise(std::size_t n, double scale, Stream& stream) {
    if (scale < 0.0) throw InvalidParams("noise scale must be >= 0");
    std::vector<double> out(n, 0.0);
    if (scale == 0.0) return out;
    for (double& v : out) v = exponential_from_uniform(stream.uniform(), scale);
    return out;
}

std::vector<double> exponential_noise(std::size_t n, double scale, std::uint64_t seed) {
    Stream stream(seed);
    return exponential_noise(n, scale, stream);
}

double additive_base(double t) {
    return 2.0 * std::sin(t) + 2.0 * std::cos(t / 2.0) + t / 4.0 + 4.0;
}

double multiplicative_base(double t) {
    return std::exp(t / 100.0) * std::sin(t) + 3.0 * std::cos(t / 2.0) + t / 2.0;
}

namespace {

// Draw order is fixed: alpha (when present), then one noise value per point.
GenOutput assemble(const GenSpec& spec, const std::function<double(double)>& base,
                   std::optional<std::pair<double, double>> alpha_range) {
    validate(spec);
    Stream stream(spec.seed);
    GenOutput out;
    if (alpha_range) out.alpha_drawn = stream.uniform(alpha_range->first, alpha_range->second);

    out.t.resize(spec.num_points);
    out.y_base.resize(spec.num_points);
    for (std::size_t i = 0; i < spec.num_points; ++i) {
        out.t[i] = spec.start_time + static_cast<std::int64_t>(i);
        const auto t = static_cast<double>(out.t[i]);
        double value = base(t);
        if (out.alpha_drawn) value += std::sin(*out.alpha_drawn * t);
        out.y_base[i] = value;
    }

    if (spec.noise_scale == 0.0) {
        out.y = out.y_base;
        return out;
    }
    const std::vector<double> noise = exponential_noise(spec.num_points, spec.noise_scale, stream);
    out.y.resize(spec.num_points);
    for (std::size_t i = 0; i < spec.num_points; ++i) out.y[i] = out.y_base[i] + noise[i];
    return out;
}

}  // namespace

GenOutput generate_additive(const GenSpec& spec) {
    if (spec.family != Family::additive_fixed && spec.family != Family::additive_random)
        throw InvalidParams("generate_additive needs an additive family");
    const bool random = spec.family == Family::additive_random;
    return assemble(spec, &additive_base,
                    random ? std::optional(std::pair{0.0, 5.0}) : std::nullopt);
}

GenOutput generate_multiplicative(const GenSpec& spec) {
    if (spec.family != Family::multiplicative_fixed &&
        spec.family != Family::multiplicative_random)
        throw InvalidParams("generate_multiplicative needs a multiplicative family");
    const bool random = spec.family == Family::multiplicative_random;
    return assemble(spec, &multiplicative_base,
                    random ? std::optional(std::pair{5.0, 10.0}) : std::nullopt);
}

GenOutput generate_periodic(const GenSpec& spec) {
    if (spec.family != Family::periodic)
        throw InvalidParams("generate_periodic needs the periodic family");
    const double period = spec.period;
    return assemble(
        spec,
        [period](double t) {
            // Reducing the phase first makes integer periods repeat bit for bit.
            double phase = std::fmod(t, period);
            if (phase < 0.0) phase += period;
            return std::sin(2.0 * std::numbers::pi * phase / period);
        },
        std::nullopt);
}

GenOutput generate(const GenSpec& spec) {
    switch (spec.family) {
        case Family::additive_fixed:
        case Family::additive_random: return generate_additive(spec);
        case Family::multiplicative_fixed:
        case Family::multiplicative_random: return generate_multiplicative(spec);
        case Family::periodic: return generate_periodic(spec);
    }
    throw InvalidParams("unknown generator family");
}

}  // namespace tempus::synth
