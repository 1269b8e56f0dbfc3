#pragma once

#include "tempus/core.hpp"
#include "tempus/io.hpp"
#include "tempus/pipeline.hpp"
#include "tempus/synth.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tempus::io {

/// A task resolves to exactly one of a CSV file or an inline generator.
struct TaskEntry {
    std::string id;
    std::optional<std::filesystem::path> csv;
    std::optional<synth::GenSpec> generator;
    /// Generator seed was left out and must be derived from the run seed.
    bool derive_seed = false;
    CsvSchema schema;
    std::size_t context_len = 0;
    std::size_t horizon = 0;
    std::vector<ValueKind> value_kinds;  // empty: all continuous
    std::string frequency;
};

struct ModelEntry {
    std::string id;
    /// Native family name, or empty for an external adapter.
    std::string family;
    std::vector<std::string> command;
    std::chrono::milliseconds timeout{120'000};
    std::optional<forecasters::HyperGrid> grid;

    bool external() const { return !command.empty(); }
};

struct Manifest {
    std::string run_id;
    std::vector<TaskEntry> tasks;
    std::vector<ModelEntry> models;
    std::size_t n_tune = kDefaultTuneWindows;
    std::size_t n_test = kDefaultTestWindows;
    std::uint64_t seed = 0;
    std::filesystem::path output_dir;
    std::string baseline = "seasonal_naive";
    std::size_t threads = 1;
    /// SHA-256 of the manifest bytes.
    std::string config_hash;
};

inline constexpr const char* kSeedEnvVar = "TEMPUS_SEED";

/// Throws ManifestError. Relative paths resolve against `base_dir`.
/// `seed_override` replaces the manifest seed when set.
Manifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir,
                        std::optional<std::uint64_t> seed_override = std::nullopt);
/// Reads the file and applies the TEMPUS_SEED environment override.
Manifest load_manifest(const std::filesystem::path& path);

/// Parses a GenSpec JSON object. Throws ManifestError.
synth::GenSpec parse_genspec(std::string_view text);

/// Seed used for a generator task that does not name one.
std::uint64_t derived_task_seed(std::uint64_t run_seed, std::size_t task_index);

/// Loads or generates every task's data and validates it.
std::vector<TaskSpec> materialize_tasks(const Manifest& manifest);
std::vector<std::shared_ptr<const pipeline::ModelSpec>> build_models(const Manifest& manifest);

std::string_view tool_version();

}  // namespace tempus::io
