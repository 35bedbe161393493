#include "ecasim/engine.hpp"

#include <algorithm>
#include <bit>
#include <cassert>
#include <stdexcept>
#include <string>

namespace ecasim {

void TrafficModel::validate() const
{
    if (kind != Kind::Bernoulli)
        return;
    if (!(arrival_prob > 0.0 && arrival_prob <= 1.0))
        throw ConfigError("arrival_prob must lie in (0, 1]");
    if (queue_capacity == 0)
        throw ConfigError("queue_capacity must be positive");
}

World::World(MacParams params, std::vector<StationSpec> specs, std::uint64_t seed) : params_(params)
{
    params_.validate();
    if (specs.empty())
        throw ConfigError("a world needs at least one station");
    const std::size_t n = specs.size();
    macs_.reserve(n);
    states_.reserve(n);
    backoff_rng_.reserve(n);
    arrival_rng_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        specs[i].traffic.validate();
        macs_.emplace_back(params_, specs[i].variant);
        backoff_rng_.emplace_back(derive_seed(seed, 2 * i));
        arrival_rng_.emplace_back(derive_seed(seed, 2 * i + 1));
        StationState st = macs_.back().init_station(static_cast<StationId>(i), backoff_rng_.back());
        st.has_packet = specs[i].traffic.is_saturated();
        states_.push_back(st);
        traffic_.push_back(specs[i].traffic);
    }
    queues_.assign(n, QueueState{});
    settled_.assign(n, 0);
}

void World::set_backoffs(std::span<const std::uint64_t> backoffs)
{
    if (slot_ != 0)
        throw std::logic_error("initial backoffs can only be set before the first slot");
    if (backoffs.size() != states_.size())
        throw ConfigError("expected " + std::to_string(states_.size()) + " initial backoffs, got " +
                          std::to_string(backoffs.size()));
    for (std::size_t i = 0; i < backoffs.size(); ++i) {
        if (backoffs[i] >= params_.window(0))
            throw ConfigError("initial backoff " + std::to_string(backoffs[i]) + " outside [0, cw_min)");
        states_[i].backoff = backoffs[i];
    }
}

bool World::all_saturated() const
{
    return std::all_of(traffic_.begin(), traffic_.end(), [](const TrafficModel& t) { return t.is_saturated(); });
}

bool World::schedulable() const
{
    if (!all_saturated())
        return false;
    return std::all_of(macs_.begin(), macs_.end(),
                       [](const Mac& m) { return m.variant().deterministic_after_success; });
}

ScheduleSnapshot World::schedule_snapshot() const
{
    ScheduleSnapshot snap;
    snap.entries.reserve(states_.size());
    for (std::size_t i = 0; i < states_.size(); ++i)
        snap.entries.push_back({settled_[i] != 0, params_.window(states_[i].stage) / 2, slot_ + states_[i].backoff});
    return snap;
}

void World::settle(std::size_t i, bool settled)
{
    if (static_cast<bool>(settled_[i]) == settled)
        return;
    settled_[i] = settled;
    if (settled)
        ++settled_count_;
    else
        --settled_count_;
}

void World::after_service(std::size_t i)
{
    if (traffic_[i].is_saturated() || queues_[i].queued > 0)
        return;
    states_[i].has_packet = false;
    states_[i] = macs_[i].on_queue_empty(states_[i], backoff_rng_[i]);
    settle(i, false);
}

SlotOutcome World::step()
{
    const std::size_t n = states_.size();

    std::vector<TxAttempt> attempts;
    for (std::size_t i = 0; i < n; ++i) {
        if (auto a = macs_[i].intent(states_[i])) {
            if (!traffic_[i].is_saturated())
                a->packets = std::min(a->packets, queues_[i].queued);
            attempts.push_back(*a);
        }
    }

    TraceRecord record;
    if (trace_) {
        record.slot = slot_;
        record.rows.reserve(n);
        for (const auto& st : states_)
            record.rows.push_back({st.id, st.backoff, st.stage, false});
        for (const auto& a : attempts)
            record.rows[a.station].transmitted = true;
    }

    SlotOutcome outcome = SlotOutcome::from_attempts(std::move(attempts));
    std::vector<char> transmitted(n, 0);

    if (outcome.kind == OutcomeKind::Success) {
        const TxAttempt& a = outcome.transmitters.front();
        const std::size_t i = a.station;
        transmitted[i] = 1;
        states_[i] = macs_[i].on_success(states_[i], a, backoff_rng_[i]);
        if (!traffic_[i].is_saturated())
            queues_[i].queued -= a.packets;
        settle(i, traffic_[i].is_saturated() && macs_[i].variant().deterministic_after_success);
        after_service(i);
    } else if (outcome.kind == OutcomeKind::Collision) {
        for (const auto& a : outcome.transmitters) {
            const std::size_t i = a.station;
            transmitted[i] = 1;
            const std::uint64_t dropped_before = states_[i].dropped;
            states_[i] = macs_[i].on_collision(states_[i], backoff_rng_[i]);
            settle(i, false);
            if (states_[i].dropped != dropped_before && !traffic_[i].is_saturated()) {
                queues_[i].queued -= 1;
                after_service(i);
            }
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        if (transmitted[i] || !states_[i].has_packet)
            continue;
        assert(states_[i].backoff > 0);
        states_[i] = macs_[i].countdown(states_[i]);
    }

    for (std::size_t i = 0; i < n; ++i) {
        if (traffic_[i].is_saturated() || !arrival_rng_[i].bernoulli(traffic_[i].arrival_prob))
            continue;
        QueueState& q = queues_[i];
        if (q.queued >= traffic_[i].queue_capacity) {
            ++q.blocked;
            continue;
        }
        ++q.queued;
        ++q.generated;
        states_[i].has_packet = true;
    }

#ifndef NDEBUG
    for (const auto& st : states_) {
        assert(st.stage <= params_.max_stage);
        assert(st.retries < params_.retry_limit);
        assert(st.backoff < params_.window(st.stage));
    }
#endif

    ++slot_;
    if (trace_) {
        record.outcome = outcome.kind;
        trace_(record);
    }
    return outcome;
}

// Drives a World for a fixed number of slots and accumulates RunMetrics.
// Saturated worlds without a trace sink go through an event wheel that jumps
// straight to the next slot in which somebody transmits; everything else
// uses World::step. Both paths consume the same random draws in the same
// per-station order, so they produce identical trajectories.
class Runner {
public:
    Runner(World& world, std::uint64_t n_slots, const RunOptions& options, bool stop_on_convergence)
        : world_(world), options_(options), n_slots_(n_slots), stop_(stop_on_convergence),
          start_slot_(world.slot_), oracle_mode_(world.schedulable())
    {
        if (options_.sample_every == 0)
            throw std::invalid_argument("sample_every must be >= 1");
        if (options_.observation_window == 0)
            throw std::invalid_argument("observation_window must be >= 1");
        options_.timing.validate();
        const std::size_t n = world_.size();
        m_.payload_bits = options_.timing.payload_bits;
        m_.sample_every = options_.sample_every;
        m_.attempts.assign(n, 0);
        m_.failed_attempts.assign(n, 0);
        for (const auto& st : world_.states_) {
            start_delivered_.push_back(st.delivered);
            start_dropped_.push_back(st.dropped);
        }
    }

    RunMetrics execute()
    {
        if (oracle_mode_ && world_.settled_count() == world_.size() &&
            schedule_oracle(world_.schedule_snapshot()) == ScheduleVerdict::CollisionFree)
            m_.convergence_slot = 0;
        if (!(stop_ && m_.convergence_slot)) {
            if (world_.all_saturated() && !world_.tracing() && !options_.slot_by_slot)
                run_wheel();
            else
                run_stepwise();
        }
        return finish();
    }

private:
    bool done() const { return stop_ && m_.convergence_slot.has_value(); }

    void record(std::uint64_t t, OutcomeKind kind, std::span<const TxAttempt> tx)
    {
        const std::uint64_t r = t - start_slot_;
        switch (kind) {
        case OutcomeKind::Empty:
            ++m_.tally.empty;
            break;
        case OutcomeKind::Success:
            ++m_.tally.success;
            break;
        case OutcomeKind::Collision:
            ++m_.tally.collision;
            last_collision_end_ = r + 1;
            break;
        }
        std::uint64_t longest = 0;
        for (const auto& a : tx) {
            ++m_.attempts[a.station];
            if (kind == OutcomeKind::Collision)
                ++m_.failed_attempts[a.station];
            longest = std::max(longest, a.packets);
        }
        if (kind != OutcomeKind::Empty)
            busy_us_ += slot_duration(kind, longest, options_.timing);
        if (r == next_sample_) {
            m_.collision_samples.push_back({r, m_.tally.collision});
            next_sample_ += options_.sample_every;
        }
        if (!oracle_mode_ && !m_.convergence_slot && r + 1 - last_collision_end_ >= options_.observation_window)
            m_.convergence_slot = last_collision_end_;
    }

    template <class PhaseOf>
    void check_oracle(std::uint64_t t, PhaseOf phase_of)
    {
        if (!oracle_mode_ || m_.convergence_slot || world_.settled_count() != world_.size())
            return;
        ScheduleSnapshot snap;
        snap.entries.reserve(world_.size());
        for (std::size_t i = 0; i < world_.size(); ++i)
            snap.entries.push_back(
                {world_.settled_[i] != 0, world_.params_.window(world_.states_[i].stage) / 2, phase_of(i)});
        if (schedule_oracle(snap) == ScheduleVerdict::CollisionFree)
            m_.convergence_slot = t + 1 - start_slot_;
    }

    void run_stepwise()
    {
        const std::uint64_t end = start_slot_ + n_slots_;
        while (world_.slot_ < end) {
            const std::uint64_t t = world_.slot_;
            const SlotOutcome out = world_.step();
            record(t, out.kind, out.transmitters);
            if (out.kind == OutcomeKind::Success)
                check_oracle(t, [this](std::size_t i) { return world_.slot_ + world_.states_[i].backoff; });
            if (done())
                break;
        }
    }

    void run_wheel()
    {
        World& w = world_;
        const std::size_t n = w.size();
        const std::uint64_t wheel_size = std::bit_ceil(w.params_.window(w.params_.max_stage));
        const std::uint64_t mask = wheel_size - 1;
        std::vector<std::vector<std::uint32_t>> wheel(wheel_size);
        std::vector<std::uint64_t> next(n);
        for (std::size_t i = 0; i < n; ++i) {
            next[i] = w.slot_ + w.states_[i].backoff;
            wheel[next[i] & mask].push_back(static_cast<std::uint32_t>(i));
        }

        std::vector<std::uint32_t> due;
        std::vector<TxAttempt> tx;
        const std::uint64_t end = start_slot_ + n_slots_;
        std::uint64_t t = w.slot_;
        for (; t < end; ++t) {
            auto& bucket = wheel[t & mask];
            if (bucket.empty()) {
                record(t, OutcomeKind::Empty, {});
                if (done()) {
                    ++t;
                    break;
                }
                continue;
            }
            due.swap(bucket);
            std::sort(due.begin(), due.end());
            tx.clear();
            for (std::uint32_t i : due)
                tx.push_back({i, w.macs_[i].burst_size(w.states_[i].stage)});

            const bool success = due.size() == 1;
            for (std::size_t k = 0; k < due.size(); ++k) {
                const std::uint32_t i = due[k];
                if (success) {
                    w.states_[i] = w.macs_[i].on_success(w.states_[i], tx[k], w.backoff_rng_[i]);
                    w.settle(i, w.macs_[i].variant().deterministic_after_success);
                } else {
                    w.states_[i] = w.macs_[i].on_collision(w.states_[i], w.backoff_rng_[i]);
                    w.settle(i, false);
                }
                next[i] = t + 1 + w.states_[i].backoff;
                wheel[next[i] & mask].push_back(i);
            }
            due.clear();

            record(t, success ? OutcomeKind::Success : OutcomeKind::Collision, tx);
            if (success)
                check_oracle(t, [&next](std::size_t i) { return next[i]; });
            if (done()) {
                ++t;
                break;
            }
        }

        w.slot_ = t;
        for (std::size_t i = 0; i < n; ++i)
            w.states_[i].backoff = next[i] - w.slot_;
    }

    RunMetrics finish()
    {
        const std::size_t n = world_.size();
        m_.slots = world_.slot_ - start_slot_;
        m_.delivered.resize(n);
        m_.dropped.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            m_.delivered[i] = world_.states_[i].delivered - start_delivered_[i];
            m_.dropped[i] = world_.states_[i].dropped - start_dropped_[i];
        }
        m_.elapsed_us = static_cast<long double>(m_.tally.empty) * options_.timing.empty_slot_us + busy_us_;
        return std::move(m_);
    }

    World& world_;
    RunOptions options_;
    std::uint64_t n_slots_;
    bool stop_;
    std::uint64_t start_slot_;
    bool oracle_mode_;
    RunMetrics m_;
    std::vector<std::uint64_t> start_delivered_;
    std::vector<std::uint64_t> start_dropped_;
    long double busy_us_ = 0.0L;
    std::uint64_t next_sample_ = 0;
    std::uint64_t last_collision_end_ = 0;
};

RunMetrics run(World& world, std::uint64_t n_slots, const RunOptions& options)
{
    if (n_slots == 0)
        throw std::invalid_argument("run needs at least one slot");
    return Runner(world, n_slots, options, false).execute();
}

ConvergenceResult run_until_collision_free(World& world, std::uint64_t max_slots, std::uint64_t window,
                                           RunOptions options)
{
    if (window == 0)
        throw std::invalid_argument("observation window must be >= 1");
    if (max_slots == 0)
        throw std::invalid_argument("run needs at least one slot");
    options.observation_window = window;
    ConvergenceResult result;
    result.metrics = Runner(world, max_slots, options, true).execute();
    result.converged = result.metrics.convergence_slot.has_value();
    result.slots_to_convergence = result.metrics.convergence_slot;
    return result;
}

} // namespace ecasim
