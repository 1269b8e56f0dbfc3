#pragma once

#include "tempus/aggregate.hpp"
#include "tempus/core.hpp"
#include "tempus/pipeline.hpp"
#include "tempus/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace tempus::io {

/// One parsed CSV record and the 1-based file line it starts on.
struct CsvRecord {
    std::size_t line = 0;
    std::vector<std::string> fields;
};

/// RFC-4180 style: comma separated, double-quote escaping, LF or CRLF.
std::vector<CsvRecord> parse_csv_records(std::string_view text);
std::string csv_escape(std::string_view field);

/// Shortest decimal text for a double is not required here: values are
/// written with 17 significant digits, which round-trips exactly.
std::string format_number(double value);
/// Full-string parse; throws ParseError on garbage or non-finite values.
double parse_number(std::string_view text, std::size_t line, const std::string& column);

std::string read_file(const std::filesystem::path& path);
/// Throws IoError.
void write_file(const std::filesystem::path& path, std::string_view contents);

struct CsvSchema {
    std::string timestamp_column = "t";
    std::vector<std::string> target_columns = {"y"};
    std::vector<std::string> covariate_columns;
};

/// Throws ParseError(line, column, reason) and NonMonotonicTimestamps(line);
/// line numbers count the header as line 1.
SeriesFrame parse_series_csv(std::string_view text, const CsvSchema& schema);
SeriesFrame load_csv(const std::filesystem::path& path, const CsvSchema& schema);

/// Writes `t,y` (plus `y_base` when requested).
std::string series_csv(const synth::GenOutput& series, bool with_truth);
/// Writes a frame back out with the schema's column names.
std::string frame_csv(const SeriesFrame& frame, const CsvSchema& schema);

/// Models as rows, tasks as columns, missing cells as empty fields.
std::string pivot_csv(const aggregate::ErrorPivot& pivot);
aggregate::ErrorPivot parse_pivot_csv(std::string_view text, const std::string& metric);
aggregate::ErrorPivot load_pivot_csv(const std::filesystem::path& path,
                                     const std::string& metric);
/// Metric name from a `pivot_<METRIC>.csv` file name, else the stem.
std::string metric_from_filename(const std::filesystem::path& path);

/// Leaderboard rows ranked by the unweighted mean of per-metric win rates,
/// then mean skill score, then model id.
struct LeaderboardRow {
    std::string model;
    std::map<std::string, aggregate::ModelSummary> per_metric;
    std::optional<double> mean_win_rate;
    std::optional<double> mean_skill_score;
};

std::vector<LeaderboardRow> build_leaderboard(const std::vector<aggregate::AggregateReport>& reports);
std::string leaderboard_csv(const std::vector<aggregate::AggregateReport>& reports);

struct RunMetadata {
    std::string run_id;
    std::string config_hash;
    std::string tool_version;
    std::uint64_t seed = 0;
    std::string baseline;
    std::size_t n_tune = 0;
    std::size_t n_test = 0;
    std::vector<std::string> models;
    std::vector<std::string> tasks;
    std::vector<std::string> metrics;

    std::string to_json() const;
    static RunMetadata from_json(std::string_view text);
};

std::string summary_markdown(const RunMetadata& metadata,
                             const std::vector<aggregate::ErrorPivot>& pivots,
                             const std::vector<aggregate::AggregateReport>& reports);

struct ReportBundle {
    std::filesystem::path directory;
    std::vector<std::filesystem::path> pivot_files;
    std::filesystem::path leaderboard;
    std::filesystem::path summary;
    std::filesystem::path audit_log;
    std::filesystem::path metadata;

    std::vector<std::filesystem::path> files() const;
};

inline constexpr std::string_view kLeaderboardFile = "leaderboard.csv";
inline constexpr std::string_view kSummaryFile = "summary.md";
inline constexpr std::string_view kAuditFile = "audit.jsonl";
inline constexpr std::string_view kMetadataFile = "metadata.json";

std::vector<aggregate::AggregateReport> aggregate_pivots(
    const std::vector<aggregate::ErrorPivot>& pivots, const std::string& baseline);

ReportBundle write_reports(const std::vector<aggregate::ErrorPivot>& pivots,
                           const std::vector<aggregate::AggregateReport>& aggregates,
                           const std::vector<pipeline::AuditRecord>& audit,
                           const RunMetadata& metadata, const std::filesystem::path& directory);

/// Rebuilds the leaderboard and summary of an existing run directory from its
/// pivot files and metadata.
ReportBundle reassemble_reports(const std::filesystem::path& directory);

std::vector<pipeline::AuditRecord> load_audit(const std::filesystem::path& path);

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view bytes);

}  // namespace tempus::io
