#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "ecasim/mac.hpp"
#include "ecasim/metrics.hpp"
#include "ecasim/outcome.hpp"
#include "ecasim/rng.hpp"
#include "ecasim/timing.hpp"

namespace ecasim {

struct TrafficModel {
    enum class Kind : std::uint8_t { Saturated, Bernoulli };

    Kind kind = Kind::Saturated;
    double arrival_prob = 1.0;        // per slot, Bernoulli only
    std::uint64_t queue_capacity = 0; // packets, Bernoulli only

    static TrafficModel saturated() { return {}; }
    static TrafficModel bernoulli(double p, std::uint64_t capacity) { return {Kind::Bernoulli, p, capacity}; }

    bool is_saturated() const { return kind == Kind::Saturated; }
    void validate() const;

    friend bool operator==(const TrafficModel&, const TrafficModel&) = default;
};

struct StationSpec {
    ProtocolVariant variant;
    TrafficModel traffic;
};

/// Bernoulli queue bookkeeping. generated counts accepted arrivals; blocked
/// counts arrivals refused by a full queue.
struct QueueState {
    std::uint64_t queued = 0;
    std::uint64_t generated = 0;
    std::uint64_t blocked = 0;
};

struct TraceRow {
    StationId station = 0;
    std::uint64_t backoff = 0; // at the start of the slot
    std::uint32_t stage = 0;
    bool transmitted = false;
};

struct TraceRecord {
    std::uint64_t slot = 0;
    OutcomeKind outcome = OutcomeKind::Empty;
    std::vector<TraceRow> rows;
};

using TraceSink = std::function<void(const TraceRecord&)>;

/// A single collision domain: every station hears every other, the channel
/// never corrupts a frame, and transmitters learn the outcome at the end of
/// the slot.
class World {
public:
    /// Station i draws from stream derive_seed(seed, 2i) for backoffs and
    /// derive_seed(seed, 2i+1) for arrivals.
    World(MacParams params, std::vector<StationSpec> specs, std::uint64_t seed);

    std::size_t size() const { return states_.size(); }
    std::uint64_t slot_index() const { return slot_; }
    std::span<const StationState> stations() const { return states_; }
    const StationState& station(std::size_t i) const { return states_.at(i); }
    const QueueState& queue(std::size_t i) const { return queues_.at(i); }
    const Mac& mac(std::size_t i) const { return macs_.at(i); }
    const TrafficModel& traffic(std::size_t i) const { return traffic_.at(i); }
    const MacParams& params() const { return params_; }

    /// Overrides the initial backoff draws, e.g. to replay a known pattern.
    /// Only valid before the first slot; each value must fit stage 0.
    void set_backoffs(std::span<const std::uint64_t> backoffs);

    void set_trace(TraceSink sink) { trace_ = std::move(sink); }
    bool tracing() const { return static_cast<bool>(trace_); }

    bool all_saturated() const;

    /// True when every station is saturated and runs a deterministic variant,
    /// i.e. when the schedule oracle can certify this world.
    bool schedulable() const;

    /// Stations whose last attempt succeeded under a deterministic variant.
    std::size_t settled_count() const { return settled_count_; }

    /// Current periodic schedule; phases are absolute slot indices.
    ScheduleSnapshot schedule_snapshot() const;

    /// Advances one slot.
    SlotOutcome step();

private:
    friend class Runner;

    void settle(std::size_t i, bool settled);
    void after_service(std::size_t i);

    MacParams params_;
    std::vector<Mac> macs_;
    std::vector<StationState> states_;
    std::vector<TrafficModel> traffic_;
    std::vector<QueueState> queues_;
    std::vector<StreamRng> backoff_rng_;
    std::vector<StreamRng> arrival_rng_;
    std::vector<char> settled_;
    std::size_t settled_count_ = 0;
    std::uint64_t slot_ = 0;
    TraceSink trace_;
};

struct RunOptions {
    TimingParams timing;
    std::uint64_t sample_every = 100;
    // Zero-collision span that counts as convergence when the oracle cannot
    // certify the world (legacy stations or unsaturated traffic).
    std::uint64_t observation_window = 10'000;
    // Force the per-slot reference path even when the event wheel applies.
    bool slot_by_slot = false;
};

/// Runs exactly n_slots slots (n_slots >= 1) and returns what happened in them.
RunMetrics run(World& world, std::uint64_t n_slots, const RunOptions& options = {});

struct ConvergenceResult {
    RunMetrics metrics;
    bool converged = false;
    std::optional<std::uint64_t> slots_to_convergence;
};

/// Runs until the world is certified collision-free or max_slots elapse.
/// `window` is the observational fallback span (see RunOptions).
ConvergenceResult run_until_collision_free(World& world, std::uint64_t max_slots, std::uint64_t window,
                                           RunOptions options = {});

} // namespace ecasim
