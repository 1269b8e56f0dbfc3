#include "tempus/io.hpp"

#include "tempus/errors.hpp"
#include "tempus/metrics.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace tempus::io {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::vector<CsvRecord> parse_csv_records(std::string_view text) {
    std::vector<CsvRecord> records;
    CsvRecord current;
    std::string field;
    std::size_t line = 1;
    bool in_quotes = false;
    bool field_quoted = false;
    bool record_started = false;

    auto end_field = [&] {
        current.fields.push_back(std::move(field));
        field.clear();
        field_quoted = false;
    };
    auto end_record = [&] {
        end_field();
        // A bare empty line carries no record.
        const bool blank = current.fields.size() == 1 && current.fields[0].empty();
        if (!blank || record_started) records.push_back(std::move(current));
        current = CsvRecord{};
        record_started = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (current.fields.empty() && field.empty() && !field_quoted && !record_started)
            current.line = line;
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                if (!field.empty())
                    throw ParseError(line, "", "quote inside an unquoted field");
                in_quotes = true;
                field_quoted = true;
                record_started = true;
                break;
            case ',':
                end_field();
                record_started = true;
                break;
            case '\r':
                if (i + 1 < text.size() && text[i + 1] == '\n') break;
                field.push_back(c);
                break;
            case '\n':
                end_record();
                ++line;
                break;
            default:
                if (field_quoted) throw ParseError(line, "", "text after closing quote");
                field.push_back(c);
                record_started = true;
        }
    }
    if (in_quotes) throw ParseError(current.line, "", "unterminated quoted field");
    if (record_started || !field.empty() || !current.fields.empty()) end_record();
    return records;
}

std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string format_number(double value) {
    char buf[32];
    const int n = std::snprintf(buf, sizeof buf, "%.17g", value);
    return std::string(buf, static_cast<std::size_t>(n));
}

double parse_number(std::string_view text, std::size_t line, const std::string& column) {
    if (text.empty()) throw ParseError(line, column, "empty cell");
    std::string_view body = text;
    if (body.front() == '+') body.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), value);
    if (ec == std::errc::result_out_of_range)
        throw ParseError(line, column, "value out of range '" + std::string(text) + "'");
    if (ec != std::errc{} || ptr != body.data() + body.size())
        throw ParseError(line, column, "not a number '" + std::string(text) + "'");
    if (!std::isfinite(value))
        throw ParseError(line, column, "non-finite value '" + std::string(text) + "'");
    return value;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("cannot read '" + path.string() + "'");
    return ss.str();
}

void write_file(const fs::path& path, std::string_view contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.close();
    if (!out) throw IoError("cannot write '" + path.string() + "'");
}

namespace {

std::size_t column_index(const std::vector<std::string>& header, const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ParseError(1, name, "column not found in header");
    return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

SeriesFrame parse_series_csv(std::string_view text, const CsvSchema& schema) {
    if (schema.timestamp_column.empty())
        throw SchemaError("timestamp_column", "must name a column");
    if (schema.target_columns.empty())
        throw SchemaError("target_columns", "at least one target column is required");

    const auto records = parse_csv_records(text);
    if (records.empty()) throw ParseError(1, "", "missing header row");
    const auto& header = records.front().fields;
    for (std::size_t i = 0; i < header.size(); ++i)
        for (std::size_t j = i + 1; j < header.size(); ++j)
            if (header[i] == header[j])
                throw ParseError(records.front().line, header[i], "duplicate column name");

    const std::size_t ts_col = column_index(header, schema.timestamp_column);
    std::vector<std::size_t> target_cols, cov_cols;
    for (const auto& name : schema.target_columns)
        target_cols.push_back(column_index(header, name));
    for (const auto& name : schema.covariate_columns)
        cov_cols.push_back(column_index(header, name));

    const std::size_t T = records.size() - 1;
    if (T == 0) throw ParseError(records.front().line, "", "no data rows");

    SeriesFrame frame;
    frame.timestamps.reserve(T);
    frame.targets.resize(static_cast<Eigen::Index>(target_cols.size()),
                         static_cast<Eigen::Index>(T));
    frame.covariates.resize(static_cast<Eigen::Index>(cov_cols.size()),
                            static_cast<Eigen::Index>(T));

    for (std::size_t r = 0; r < T; ++r) {
        const auto& rec = records[r + 1];
        if (rec.fields.size() != header.size())
            throw ParseError(rec.line, "",
                             "expected " + std::to_string(header.size()) + " fields, found " +
                                 std::to_string(rec.fields.size()));
        const std::string& ts = rec.fields[ts_col];
        if (ts.empty()) throw ParseError(rec.line, schema.timestamp_column, "empty timestamp");
        if (!frame.timestamps.empty() && !timestamp_before(frame.timestamps.back(), ts))
            throw NonMonotonicTimestamps(rec.line);
        frame.timestamps.push_back(ts);

        const auto col = static_cast<Eigen::Index>(r);
        for (std::size_t k = 0; k < target_cols.size(); ++k)
            frame.targets(static_cast<Eigen::Index>(k), col) = parse_number(
                rec.fields[target_cols[k]], rec.line, schema.target_columns[k]);
        for (std::size_t k = 0; k < cov_cols.size(); ++k)
            frame.covariates(static_cast<Eigen::Index>(k), col) = parse_number(
                rec.fields[cov_cols[k]], rec.line, schema.covariate_columns[k]);
    }
    return frame;
}

SeriesFrame load_csv(const fs::path& path, const CsvSchema& schema) {
    if (!fs::exists(path)) throw IoError("no such file '" + path.string() + "'");
    return parse_series_csv(read_file(path), schema);
}

std::string series_csv(const synth::GenOutput& series, bool with_truth) {
    std::string out = with_truth ? "t,y,y_base\n" : "t,y\n";
    for (std::size_t i = 0; i < series.y.size(); ++i) {
        out += std::to_string(series.t[i]);
        out += ',';
        out += format_number(series.y[i]);
        if (with_truth) {
            out += ',';
            out += format_number(series.y_base[i]);
        }
        out += '\n';
    }
    return out;
}

std::string frame_csv(const SeriesFrame& frame, const CsvSchema& schema) {
    if (schema.target_columns.size() != static_cast<std::size_t>(frame.targets.rows()) ||
        schema.covariate_columns.size() != static_cast<std::size_t>(frame.covariates.rows()))
        throw ShapeMismatch("schema column count does not match the frame");
    std::string out = csv_escape(schema.timestamp_column);
    for (const auto& c : schema.target_columns) out += ',' + csv_escape(c);
    for (const auto& c : schema.covariate_columns) out += ',' + csv_escape(c);
    out += '\n';
    for (std::size_t t = 0; t < frame.length(); ++t) {
        const auto col = static_cast<Eigen::Index>(t);
        out += csv_escape(frame.timestamps[t]);
        for (Eigen::Index k = 0; k < frame.targets.rows(); ++k)
            out += ',' + format_number(frame.targets(k, col));
        for (Eigen::Index k = 0; k < frame.covariates.rows(); ++k)
            out += ',' + format_number(frame.covariates(k, col));
        out += '\n';
    }
    return out;
}

std::string pivot_csv(const aggregate::ErrorPivot& pivot) {
    std::string out = "model";
    for (const auto& task : pivot.tasks()) out += ',' + csv_escape(task);
    out += '\n';
    for (std::size_t m = 0; m < pivot.n_models(); ++m) {
        out += csv_escape(pivot.models()[m]);
        for (std::size_t b = 0; b < pivot.n_tasks(); ++b) {
            out += ',';
            if (const auto& cell = pivot.at(m, b)) out += format_number(*cell);
        }
        out += '\n';
    }
    return out;
}

aggregate::ErrorPivot parse_pivot_csv(std::string_view text, const std::string& metric) {
    const auto records = parse_csv_records(text);
    if (records.empty()) throw ParseError(1, "", "missing header row");
    const auto& header = records.front().fields;
    if (header.empty() || header.front() != "model")
        throw ParseError(records.front().line, header.empty() ? "" : header.front(),
                         "first column must be 'model'");
    std::vector<std::string> tasks(header.begin() + 1, header.end());
    std::vector<std::string> models;
    std::vector<aggregate::Cell> cells;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        if (rec.fields.size() != header.size())
            throw ParseError(rec.line, "",
                             "expected " + std::to_string(header.size()) + " fields, found " +
                                 std::to_string(rec.fields.size()));
        models.push_back(rec.fields.front());
        for (std::size_t b = 0; b < tasks.size(); ++b) {
            const auto& field = rec.fields[b + 1];
            if (field.empty())
                cells.emplace_back(std::nullopt);
            else
                cells.emplace_back(parse_number(field, rec.line, tasks[b]));
        }
    }
    return aggregate::ErrorPivot(metric, std::move(models), std::move(tasks), std::move(cells));
}

aggregate::ErrorPivot load_pivot_csv(const fs::path& path, const std::string& metric) {
    if (!fs::exists(path)) throw IoError("no such file '" + path.string() + "'");
    return parse_pivot_csv(read_file(path), metric);
}

std::string metric_from_filename(const fs::path& path) {
    const std::string stem = path.stem().string();
    constexpr std::string_view prefix = "pivot_";
    if (stem.starts_with(prefix) && stem.size() > prefix.size())
        return stem.substr(prefix.size());
    return stem;
}

namespace {

std::optional<double> mean_of(const std::vector<std::optional<double>>& values) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& v : values)
        if (v) {
            sum += *v;
            ++count;
        }
    if (count == 0) return std::nullopt;
    return sum / static_cast<double>(count);
}

std::string optional_number(const std::optional<double>& v) {
    return v ? format_number(*v) : std::string();
}

std::string fixed3(const std::optional<double>& v) {
    if (!v) return "n/a";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", *v);
    std::string s = buf;
    if (s == "-0.000") s = "0.000";
    return s;
}

}  // namespace

std::vector<LeaderboardRow> build_leaderboard(
    const std::vector<aggregate::AggregateReport>& reports) {
    std::vector<std::string> models;
    std::map<std::string, LeaderboardRow> rows;
    for (const auto& report : reports)
        for (const auto& s : report.models) {
            auto [it, inserted] = rows.try_emplace(s.model);
            if (inserted) {
                it->second.model = s.model;
                models.push_back(s.model);
            }
            it->second.per_metric[report.metric] = s;
        }

    std::vector<aggregate::ModelSummary> means;
    for (auto& [name, row] : rows) {
        std::vector<std::optional<double>> wins, skills;
        for (const auto& report : reports) {
            const auto it = row.per_metric.find(report.metric);
            if (it == row.per_metric.end()) continue;
            wins.push_back(it->second.win_rate);
            skills.push_back(it->second.skill_score);
        }
        row.mean_win_rate = mean_of(wins);
        row.mean_skill_score = mean_of(skills);
        aggregate::ModelSummary s;
        s.model = name;
        s.win_rate = row.mean_win_rate;
        s.skill_score = row.mean_skill_score;
        means.push_back(std::move(s));
    }

    std::vector<LeaderboardRow> out;
    for (const auto& name : aggregate::rank_models(means)) out.push_back(rows.at(name));
    return out;
}

std::string leaderboard_csv(const std::vector<aggregate::AggregateReport>& reports) {
    std::string out = "rank,model";
    for (const auto& r : reports)
        out += ",win_rate_" + r.metric + ",skill_score_" + r.metric;
    out += ",mean_win_rate,mean_skill_score\n";
    std::size_t rank = 0;
    for (const auto& row : build_leaderboard(reports)) {
        out += std::to_string(++rank) + ',' + csv_escape(row.model);
        for (const auto& r : reports) {
            const auto it = row.per_metric.find(r.metric);
            out += ',';
            if (it != row.per_metric.end()) out += optional_number(it->second.win_rate);
            out += ',';
            if (it != row.per_metric.end()) out += optional_number(it->second.skill_score);
        }
        out += ',' + optional_number(row.mean_win_rate) + ',' +
               optional_number(row.mean_skill_score) + '\n';
    }
    return out;
}

std::string RunMetadata::to_json() const {
    json j;
    j["run_id"] = run_id;
    j["config_hash"] = config_hash;
    j["tool_version"] = tool_version;
    j["seed"] = seed;
    j["baseline"] = baseline;
    j["n_tune"] = n_tune;
    j["n_test"] = n_test;
    j["models"] = models;
    j["tasks"] = tasks;
    j["metrics"] = metrics;
    return j.dump(2) + "\n";
}

RunMetadata RunMetadata::from_json(std::string_view text) {
    try {
        const json j = json::parse(text);
        RunMetadata m;
        m.run_id = j.at("run_id").get<std::string>();
        m.config_hash = j.at("config_hash").get<std::string>();
        m.tool_version = j.at("tool_version").get<std::string>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.baseline = j.at("baseline").get<std::string>();
        m.n_tune = j.at("n_tune").get<std::size_t>();
        m.n_test = j.at("n_test").get<std::size_t>();
        m.models = j.at("models").get<std::vector<std::string>>();
        m.tasks = j.at("tasks").get<std::vector<std::string>>();
        m.metrics = j.at("metrics").get<std::vector<std::string>>();
        return m;
    } catch (const json::exception& e) {
        throw SchemaError("metadata", e.what());
    }
}

std::string summary_markdown(const RunMetadata& metadata,
                             const std::vector<aggregate::ErrorPivot>& pivots,
                             const std::vector<aggregate::AggregateReport>& reports) {
    std::ostringstream md;
    md << "# Benchmark run `" << metadata.run_id << "`\n\n";
    md << "- tool version: " << metadata.tool_version << "\n";
    md << "- config hash: `" << metadata.config_hash << "`\n";
    md << "- seed: " << metadata.seed << "\n";
    md << "- baseline: `" << metadata.baseline << "`\n";
    md << "- " << metadata.models.size() << " models, " << metadata.tasks.size()
       << " tasks, " << metadata.n_tune << " tuning and " << metadata.n_test
       << " test windows per task\n\n";

    md << "## Leaderboard\n\n";
    md << "| rank | model | mean win rate | mean skill score |";
    for (const auto& r : reports) md << ' ' << r.metric << " win rate | " << r.metric << " skill |";
    md << "\n|---:|---|---:|---:|";
    for (std::size_t i = 0; i < reports.size(); ++i) md << "---:|---:|";
    md << '\n';
    std::size_t rank = 0;
    for (const auto& row : build_leaderboard(reports)) {
        md << "| " << ++rank << " | " << row.model << " | " << fixed3(row.mean_win_rate)
           << " | " << fixed3(row.mean_skill_score) << " |";
        for (const auto& r : reports) {
            const auto it = row.per_metric.find(r.metric);
            const bool has = it != row.per_metric.end();
            md << ' ' << fixed3(has ? it->second.win_rate : std::nullopt) << " | "
               << fixed3(has ? it->second.skill_score : std::nullopt) << " |";
        }
        md << '\n';
    }

    md << "\n## Missing cells\n\n| metric | missing | total |\n|---|---:|---:|\n";
    for (const auto& p : pivots) {
        std::size_t missing = 0;
        for (std::size_t m = 0; m < p.n_models(); ++m)
            for (std::size_t b = 0; b < p.n_tasks(); ++b)
                if (!p.at(m, b)) ++missing;
        md << "| " << p.metric() << " | " << missing << " | " << p.n_models() * p.n_tasks()
           << " |\n";
    }
    return md.str();
}

std::vector<fs::path> ReportBundle::files() const {
    std::vector<fs::path> out = pivot_files;
    out.push_back(leaderboard);
    out.push_back(summary);
    out.push_back(audit_log);
    out.push_back(metadata);
    return out;
}

std::vector<aggregate::AggregateReport> aggregate_pivots(
    const std::vector<aggregate::ErrorPivot>& pivots, const std::string& baseline) {
    std::vector<aggregate::AggregateReport> out;
    out.reserve(pivots.size());
    for (const auto& p : pivots) out.push_back(aggregate::aggregate_all(p, baseline));
    return out;
}

namespace {

fs::path pivot_path(const fs::path& dir, const std::string& metric) {
    return dir / ("pivot_" + metric + ".csv");
}

void ensure_directory(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw IoError("cannot create directory '" + dir.string() + "'" +
                      (ec ? ": " + ec.message() : ""));
}

}  // namespace

ReportBundle write_reports(const std::vector<aggregate::ErrorPivot>& pivots,
                           const std::vector<aggregate::AggregateReport>& aggregates,
                           const std::vector<pipeline::AuditRecord>& audit,
                           const RunMetadata& metadata, const fs::path& directory) {
    ensure_directory(directory);
    ReportBundle bundle;
    bundle.directory = directory;
    for (const auto& p : pivots) {
        bundle.pivot_files.push_back(pivot_path(directory, p.metric()));
        write_file(bundle.pivot_files.back(), pivot_csv(p));
    }
    bundle.leaderboard = directory / kLeaderboardFile;
    write_file(bundle.leaderboard, leaderboard_csv(aggregates));
    bundle.summary = directory / kSummaryFile;
    write_file(bundle.summary, summary_markdown(metadata, pivots, aggregates));

    std::string lines;
    for (const auto& record : audit) lines += record.to_json_line() + '\n';
    bundle.audit_log = directory / kAuditFile;
    write_file(bundle.audit_log, lines);
    bundle.metadata = directory / kMetadataFile;
    write_file(bundle.metadata, metadata.to_json());
    return bundle;
}

ReportBundle reassemble_reports(const fs::path& directory) {
    const fs::path meta_path = directory / kMetadataFile;
    if (!fs::exists(meta_path)) throw IoError("no such file '" + meta_path.string() + "'");
    const RunMetadata metadata = RunMetadata::from_json(read_file(meta_path));
    std::vector<aggregate::ErrorPivot> pivots;
    for (const auto& metric : metadata.metrics)
        pivots.push_back(load_pivot_csv(pivot_path(directory, metric), metric));
    const auto aggregates = aggregate_pivots(pivots, metadata.baseline);

    ReportBundle bundle;
    bundle.directory = directory;
    for (const auto& metric : metadata.metrics)
        bundle.pivot_files.push_back(pivot_path(directory, metric));
    bundle.leaderboard = directory / kLeaderboardFile;
    write_file(bundle.leaderboard, leaderboard_csv(aggregates));
    bundle.summary = directory / kSummaryFile;
    write_file(bundle.summary, summary_markdown(metadata, pivots, aggregates));
    bundle.audit_log = directory / kAuditFile;
    bundle.metadata = meta_path;
    return bundle;
}

std::vector<pipeline::AuditRecord> load_audit(const fs::path& path) {
    const std::string text = read_file(path);
    std::vector<pipeline::AuditRecord> out;
    std::istringstream in(text);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        try {
            out.push_back(pipeline::AuditRecord::from_json_line(line));
        } catch (const std::exception& e) {
            throw ParseError(n, "", std::string("bad audit record: ") + e.what());
        }
    }
    return out;
}

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw IoError("SHA-256 computation failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

}  // namespace tempus::io
