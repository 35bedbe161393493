#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "ecasim/engine.hpp"
#include "ecasim/sweep.hpp"

namespace ecasim {

/// Quotes a CSV field when it contains a comma, quote, CR or LF (RFC 4180).
std::string csv_field(std::string_view value);

/// Column order of results.csv and key order of results.json.
const std::vector<std::string>& result_columns();

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows);
void write_results_json(std::ostream& out, const std::vector<ResultRow>& rows);

/// Mean-over-replications cumulative collision fraction: n,slot_index,fraction
void write_series_csv(std::ostream& out, const std::vector<PointResult>& points);

/// Per-replication series: n,replication,slot_index,fraction
void write_replication_series_csv(std::ostream& out, const std::vector<PointResult>& points);

/// Trace sink emitting slot,station,b,s,tx,outcome rows. Writes the header
/// immediately.
TraceSink csv_trace_sink(std::ostream& out);

/// Runs `world` for n_slots with a CSV trace written to `path`.
RunMetrics emit_trace(World& world, std::uint64_t n_slots, const std::filesystem::path& path,
                      const RunOptions& options = {});

/// Writes results.csv, results.json and collision_series.csv into `dir`.
void write_outputs(const std::filesystem::path& dir, const std::vector<PointResult>& points);

} // namespace ecasim
