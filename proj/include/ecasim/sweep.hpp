#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ecasim/metrics.hpp"
#include "ecasim/scenario.hpp"

namespace ecasim {

/// Outcome of one simulation instance.
struct ReplicationResult {
    std::uint32_t replication = 0;
    std::uint64_t seed = 0;
    double aggregate_bps = 0.0;
    double jfi = 0.0;
    double collision_fraction = 0.0; // over the whole run
    std::uint64_t attempts = 0;
    std::uint64_t failed_attempts = 0;
    std::optional<std::uint64_t> convergence_slot;
    std::vector<SeriesPoint> series;
};

/// One output line: statistics over the replications at one station count.
/// CI fields are empty when fewer than two replications exist.
struct ResultRow {
    std::string scenario;
    std::uint32_t n = 0;
    std::string variants;
    std::uint32_t replications = 0;
    double throughput_mbps_mean = 0.0;
    std::optional<double> throughput_mbps_ci;
    double jfi_mean = 0.0;
    std::optional<double> jfi_ci;
    double collision_fraction_mean = 0.0;
    double convergence_rate = 0.0;
    std::optional<double> mean_slots_to_convergence;
};

struct PointResult {
    ResultRow row;
    std::vector<ReplicationResult> replications; // ordered by replication index
    std::vector<SeriesPoint> mean_series;        // mean over replications
};

/// Seed of replication `index`; independent of the replication count.
std::uint64_t replication_seed(std::uint64_t master, std::uint32_t index);

ReplicationResult run_replication(const Scenario& scenario, const std::vector<PopulationEntry>& population,
                                  std::uint32_t index);

/// Runs every replication of one population on `jobs` worker threads
/// (0 = hardware concurrency). Results are ordered by replication index, so
/// the output does not depend on scheduling. The first failing replication
/// aborts the batch.
std::vector<ReplicationResult> run_replications(const Scenario& scenario,
                                                const std::vector<PopulationEntry>& population, unsigned jobs);

ResultRow summarize(const Scenario& scenario, std::uint32_t n, const std::vector<PopulationEntry>& population,
                    const std::vector<ReplicationResult>& reps);

PointResult simulate_point(const Scenario& scenario, std::uint32_t n, unsigned jobs);

using PointSink = std::function<void(const PointResult&)>;

/// Simulates every station count of the scenario in order.
std::vector<PointResult> sweep(const Scenario& scenario, unsigned jobs, const PointSink& sink = {});

} // namespace ecasim
