#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace ecasim {

class MetricsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct OutcomeTally {
    std::uint64_t empty = 0;
    std::uint64_t success = 0;
    std::uint64_t collision = 0;

    std::uint64_t total() const { return empty + success + collision; }

    friend bool operator==(const OutcomeTally&, const OutcomeTally&) = default;
};

/// Cumulative collision count over slots [0, slot].
struct CollisionSample {
    std::uint64_t slot = 0;
    std::uint64_t collisions = 0;

    friend bool operator==(const CollisionSample&, const CollisionSample&) = default;
};

struct RunMetrics {
    std::uint64_t payload_bits = 12000;
    std::uint64_t slots = 0;
    std::vector<std::uint64_t> delivered;       // packets, per station
    std::vector<std::uint64_t> dropped;         // packets, per station
    std::vector<std::uint64_t> attempts;        // channel accesses, per station
    std::vector<std::uint64_t> failed_attempts; // accesses that collided
    long double elapsed_us = 0.0L;
    OutcomeTally tally;
    std::uint64_t sample_every = 100;
    std::vector<CollisionSample> collision_samples;
    std::optional<std::uint64_t> convergence_slot;

    std::uint64_t delivered_bits(std::size_t station) const { return delivered.at(station) * payload_bits; }

    friend bool operator==(const RunMetrics&, const RunMetrics&) = default;
};

struct Throughput {
    std::vector<double> per_station_bps;
    double aggregate_bps = 0.0;
};

/// Delivered payload bits over elapsed time. Throws MetricsError when no time
/// has elapsed.
Throughput throughput(const RunMetrics& metrics);

/// Jain's fairness index (sum x)^2 / (n * sum x^2). Throws MetricsError on an
/// empty or all-zero vector, or a negative entry.
double jfi(std::span<const double> x);
double jfi(std::span<const std::uint64_t> x);

struct SeriesPoint {
    std::uint64_t slot = 0;
    double fraction = 0.0;
};

/// Cumulative fraction of slots in collision, (#collisions in [0,t]) / (t+1).
std::vector<SeriesPoint> collision_fraction_series(const RunMetrics& metrics);

/// Periodic transmission schedule of one station: it transmits in slots
/// phase, phase + period, phase + 2*period, ...
struct ScheduleEntry {
    bool deterministic = false;
    std::uint64_t period = 0;
    std::uint64_t phase = 0;
};

struct ScheduleSnapshot {
    std::vector<ScheduleEntry> entries;
};

enum class ScheduleVerdict { CollisionFree, Overlap, NotApplicable };

/// Decides whether the periodic schedules ever overlap. Two progressions
/// o_i + k*p_i and o_j + l*p_j meet iff o_i = o_j (mod gcd(p_i, p_j)); for
/// power-of-two periods the gcd is the smaller period. NotApplicable when any
/// station is not on a deterministic schedule.
ScheduleVerdict schedule_oracle(const ScheduleSnapshot& snapshot);

struct ConfidenceInterval {
    double mean = 0.0;
    double half_width = 0.0;
};

/// Student-t interval for the mean. Throws MetricsError for fewer than two
/// samples.
ConfidenceInterval confidence_interval(std::span<const double> samples, double level = 0.95);

} // namespace ecasim
