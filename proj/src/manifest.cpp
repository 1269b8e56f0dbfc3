#include "tempus/manifest.hpp"

#include "tempus/errors.hpp"
#include "tempus/extern_protocol.hpp"
#include "tempus/forecasters.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <set>

#ifndef TEMPUS_VERSION
#define TEMPUS_VERSION "0.0.0"
#endif

namespace tempus::io {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string_view tool_version() { return TEMPUS_VERSION; }

namespace {

void only_keys(const json& obj, std::initializer_list<std::string_view> allowed,
               const std::string& where) {
    for (const auto& [key, value] : obj.items())
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ManifestError(where + ": unknown key '" + key + "'");
}

const json& require(const json& obj, const char* key, const std::string& where) {
    const auto it = obj.find(key);
    if (it == obj.end()) throw ManifestError(where + ": missing '" + key + "'");
    return *it;
}

template <class T>
T get_as(const json& value, const std::string& where) {
    try {
        return value.get<T>();
    } catch (const json::exception&) {
        throw ManifestError(where + ": wrong type");
    }
}

std::size_t get_count(const json& value, const std::string& where) {
    if (!value.is_number_unsigned()) throw ManifestError(where + ": expected a non-negative integer");
    return value.get<std::size_t>();
}

std::vector<std::string> string_list(const json& value, const std::string& where) {
    if (!value.is_array()) throw ManifestError(where + ": expected an array of strings");
    std::vector<std::string> out;
    for (const auto& v : value) {
        if (!v.is_string()) throw ManifestError(where + ": expected an array of strings");
        out.push_back(v.get<std::string>());
    }
    return out;
}

synth::GenSpec genspec_from_json(const json& j, const std::string& where, bool* seed_given) {
    if (!j.is_object()) throw ManifestError(where + ": expected an object");
    only_keys(j, {"family", "num_points", "start_time", "noise_scale", "period", "seed"}, where);
    synth::GenSpec spec;
    try {
        spec.family = synth::parse_family(get_as<std::string>(require(j, "family", where),
                                                              where + ".family"));
    } catch (const Error& e) {
        if (dynamic_cast<const ManifestError*>(&e)) throw;
        throw ManifestError(where + ".family: " + e.what());
    }
    spec.num_points = get_count(require(j, "num_points", where), where + ".num_points");
    if (j.contains("start_time")) {
        if (!j["start_time"].is_number_integer())
            throw ManifestError(where + ".start_time: expected an integer");
        spec.start_time = j["start_time"].get<std::int64_t>();
    }
    if (j.contains("noise_scale"))
        spec.noise_scale = get_as<double>(j["noise_scale"], where + ".noise_scale");
    if (spec.family == synth::Family::periodic)
        spec.period = get_as<double>(require(j, "period", where), where + ".period");
    else if (j.contains("period"))
        spec.period = get_as<double>(j["period"], where + ".period");
    if (seed_given) *seed_given = j.contains("seed");
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned())
            throw ManifestError(where + ".seed: expected a 64-bit unsigned integer");
        spec.seed = j["seed"].get<std::uint64_t>();
    }
    try {
        synth::validate(spec);
    } catch (const InvalidParams& e) {
        throw ManifestError(where + ": " + e.what());
    }
    return spec;
}

fs::path resolve(const fs::path& base, const fs::path& p) {
    return p.is_absolute() ? p : (base / p).lexically_normal();
}

TaskEntry task_from_json(const json& j, std::size_t index, const fs::path& base_dir) {
    const std::string where = "tasks[" + std::to_string(index) + "]";
    if (!j.is_object()) throw ManifestError(where + ": expected an object");
    only_keys(j,
              {"id", "csv", "generator", "context_len", "horizon", "timestamp_column",
               "targets", "covariates", "value_kinds", "frequency"},
              where);
    TaskEntry t;
    t.id = get_as<std::string>(require(j, "id", where), where + ".id");
    if (t.id.empty()) throw ManifestError(where + ".id: must not be empty");
    const bool has_csv = j.contains("csv");
    const bool has_gen = j.contains("generator");
    if (has_csv == has_gen)
        throw ManifestError(where + " ('" + t.id +
                            "'): exactly one of 'csv' or 'generator' is required");
    if (has_csv) {
        t.csv = resolve(base_dir, get_as<std::string>(j["csv"], where + ".csv"));
        if (j.contains("timestamp_column"))
            t.schema.timestamp_column =
                get_as<std::string>(j["timestamp_column"], where + ".timestamp_column");
        if (j.contains("targets")) t.schema.target_columns = string_list(j["targets"], where + ".targets");
        if (j.contains("covariates"))
            t.schema.covariate_columns = string_list(j["covariates"], where + ".covariates");
        if (t.schema.target_columns.empty())
            throw ManifestError(where + ".targets: at least one target column is required");
    } else {
        for (const char* key : {"timestamp_column", "targets", "covariates"})
            if (j.contains(key))
                throw ManifestError(where + "." + key + ": not allowed for generator tasks");
        bool seed_given = false;
        t.generator = genspec_from_json(j["generator"], where + ".generator", &seed_given);
        t.derive_seed = !seed_given;
    }
    t.context_len = get_count(require(j, "context_len", where), where + ".context_len");
    t.horizon = get_count(require(j, "horizon", where), where + ".horizon");
    if (j.contains("value_kinds")) {
        for (const auto& name : string_list(j["value_kinds"], where + ".value_kinds")) {
            try {
                t.value_kinds.push_back(parse_value_kind(name));
            } catch (const Error& e) {
                throw ManifestError(where + ".value_kinds: " + e.what());
            }
        }
    }
    if (j.contains("frequency")) t.frequency = get_as<std::string>(j["frequency"], where + ".frequency");
    return t;
}

forecasters::HyperGrid grid_from_json(const json& j, const std::string& family,
                                      const std::string& where) {
    if (!j.is_array() || j.empty()) throw ManifestError(where + ": expected a non-empty array");
    forecasters::HyperGrid grid;
    grid.family = family;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string w = where + "[" + std::to_string(i) + "]";
        const json& entry = j[i];
        if (!entry.is_object()) throw ManifestError(w + ": expected an object");
        forecasters::HyperAssignment a;
        a.model = family;
        for (const auto& [key, value] : entry.items()) {
            if (key == "model") {
                a.model = get_as<std::string>(value, w + ".model");
                continue;
            }
            if (!value.is_number()) throw ManifestError(w + "." + key + ": expected a number");
            a.params.set(key, value.get<double>());
        }
        if (!forecasters::is_model_id(a.model))
            throw ManifestError(w + ": '" + a.model + "' is not a concrete model id");
        grid.assignments.push_back(std::move(a));
    }
    std::sort(grid.assignments.begin(), grid.assignments.end());
    return grid;
}

ModelEntry model_from_json(const json& j, std::size_t index, const fs::path& base_dir) {
    const std::string where = "models[" + std::to_string(index) + "]";
    ModelEntry m;
    if (j.is_string()) {
        m.family = m.id = j.get<std::string>();
    } else if (j.is_object()) {
        if (j.contains("external")) {
            only_keys(j, {"id", "external", "timeout_ms"}, where);
            m.id = get_as<std::string>(require(j, "id", where), where + ".id");
            m.command = string_list(j["external"], where + ".external");
            if (m.command.empty()) throw ManifestError(where + ".external: empty command");
            // Relative program paths are taken relative to the manifest.
            if (m.command.front().find('/') != std::string::npos)
                m.command.front() = resolve(base_dir, m.command.front()).string();
            if (j.contains("timeout_ms")) {
                const auto ms = get_count(j["timeout_ms"], where + ".timeout_ms");
                if (ms == 0) throw ManifestError(where + ".timeout_ms: must be positive");
                m.timeout = std::chrono::milliseconds(ms);
            }
            return m;
        }
        only_keys(j, {"model_id", "grid"}, where);
        m.family = m.id = get_as<std::string>(require(j, "model_id", where), where + ".model_id");
        if (j.contains("grid")) {
            if (!forecasters::is_native_family(m.family))
                throw ManifestError(where + ": unknown model '" + m.family + "'");
            m.grid = grid_from_json(j["grid"], m.family, where + ".grid");
        }
    } else {
        throw ManifestError(where + ": expected a model name or an object");
    }
    if (!forecasters::is_native_family(m.family))
        throw ManifestError(where + ": unknown model '" + m.family + "'");
    return m;
}

}  // namespace

synth::GenSpec parse_genspec(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ManifestError(std::string("generator spec is not valid JSON: ") + e.what());
    }
    return genspec_from_json(j, "generator", nullptr);
}

std::uint64_t derived_task_seed(std::uint64_t run_seed, std::size_t task_index) {
    return synth::splitmix64(run_seed ^ synth::splitmix64(task_index + 1));
}

Manifest parse_manifest(std::string_view text, const fs::path& base_dir,
                        std::optional<std::uint64_t> seed_override) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ManifestError(std::string("manifest is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ManifestError("manifest: expected a JSON object");
    only_keys(j,
              {"run_id", "tasks", "models", "tuning", "seed", "output_dir", "baseline",
               "threads"},
              "manifest");

    Manifest m;
    m.config_hash = sha256_hex(text);
    m.run_id = get_as<std::string>(require(j, "run_id", "manifest"), "run_id");
    if (m.run_id.empty()) throw ManifestError("run_id: must not be empty");

    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned())
            throw ManifestError("seed: expected a 64-bit unsigned integer");
        m.seed = j["seed"].get<std::uint64_t>();
    }
    if (seed_override) m.seed = *seed_override;

    if (j.contains("tuning")) {
        const json& t = j["tuning"];
        if (!t.is_object()) throw ManifestError("tuning: expected an object");
        only_keys(t, {"n_tune", "n_test"}, "tuning");
        if (t.contains("n_tune")) m.n_tune = get_count(t["n_tune"], "tuning.n_tune");
        if (t.contains("n_test")) m.n_test = get_count(t["n_test"], "tuning.n_test");
        if (m.n_test == 0) throw ManifestError("tuning.n_test: must be at least 1");
    }
    if (j.contains("threads")) {
        m.threads = get_count(j["threads"], "threads");
        if (m.threads == 0) throw ManifestError("threads: must be at least 1");
    }
    m.output_dir = resolve(base_dir, j.contains("output_dir")
                                         ? get_as<std::string>(j["output_dir"], "output_dir")
                                         : m.run_id);
    if (j.contains("baseline")) m.baseline = get_as<std::string>(j["baseline"], "baseline");

    const json& tasks = require(j, "tasks", "manifest");
    if (!tasks.is_array() || tasks.empty()) throw ManifestError("tasks: expected a non-empty array");
    std::set<std::string> task_ids;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        TaskEntry t = task_from_json(tasks[i], i, base_dir);
        if (!task_ids.insert(t.id).second)
            throw ManifestError("tasks: duplicate task id '" + t.id + "'");
        if (t.generator && t.derive_seed) t.generator->seed = derived_task_seed(m.seed, i);
        m.tasks.push_back(std::move(t));
    }

    const json& models = require(j, "models", "manifest");
    if (!models.is_array() || models.empty()) throw ManifestError("models: expected a non-empty array");
    std::set<std::string> model_ids;
    for (std::size_t i = 0; i < models.size(); ++i) {
        ModelEntry entry = model_from_json(models[i], i, base_dir);
        if (!model_ids.insert(entry.id).second)
            throw ManifestError("models: duplicate model id '" + entry.id + "'");
        m.models.push_back(std::move(entry));
    }
    if (!model_ids.contains(m.baseline))
        throw ManifestError("baseline: '" + m.baseline + "' is not one of the manifest models");
    return m;
}

Manifest load_manifest(const fs::path& path) {
    if (!fs::exists(path)) throw IoError("no such file '" + path.string() + "'");
    std::optional<std::uint64_t> override_seed;
    if (const char* env = std::getenv(kSeedEnvVar); env && *env) {
        std::uint64_t v = 0;
        const std::string_view s(env);
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size())
            throw ManifestError(std::string(kSeedEnvVar) + ": not an unsigned integer '" +
                                std::string(s) + "'");
        override_seed = v;
    }
    const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
    return parse_manifest(read_file(path), base, override_seed);
}

std::vector<TaskSpec> materialize_tasks(const Manifest& manifest) {
    std::vector<TaskSpec> out;
    for (const auto& entry : manifest.tasks) {
        auto frame = std::make_shared<SeriesFrame>();
        if (entry.csv) {
            *frame = load_csv(*entry.csv, entry.schema);
        } else {
            const auto series = synth::generate(*entry.generator);
            const auto N = static_cast<Eigen::Index>(series.y.size());
            frame->targets.resize(1, N);
            frame->covariates.resize(0, N);
            for (Eigen::Index i = 0; i < N; ++i) {
                frame->targets(0, i) = series.y[static_cast<std::size_t>(i)];
                frame->timestamps.push_back(std::to_string(series.t[static_cast<std::size_t>(i)]));
            }
        }
        TaskSpec task;
        task.id = entry.id;
        task.context_len = entry.context_len;
        task.horizon = entry.horizon;
        task.n_targets = static_cast<std::size_t>(frame->targets.rows());
        task.n_covariates = static_cast<std::size_t>(frame->covariates.rows());
        task.value_kinds = entry.value_kinds.empty()
                               ? std::vector<ValueKind>(task.n_targets, ValueKind::continuous)
                               : entry.value_kinds;
        task.frequency_label = entry.frequency;
        task.data = std::move(frame);
        try {
            out.push_back(validate_task(std::move(task)));
        } catch (const SchemaError& e) {
            throw SchemaError(e.field(), "task '" + entry.id + "': " + e.what());
        }
    }
    return out;
}

std::vector<std::shared_ptr<const pipeline::ModelSpec>> build_models(const Manifest& manifest) {
    std::vector<std::shared_ptr<const pipeline::ModelSpec>> out;
    for (const auto& m : manifest.models) {
        if (m.external())
            out.push_back(std::make_shared<adapter::ExternalModel>(m.id, m.command, m.timeout));
        else if (m.grid)
            out.push_back(std::make_shared<pipeline::NativeModel>(m.family, *m.grid));
        else
            out.push_back(std::make_shared<pipeline::NativeModel>(m.family));
    }
    return out;
}

}  // namespace tempus::io
