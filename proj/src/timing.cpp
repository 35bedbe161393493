#include "ecasim/timing.hpp"

#include <algorithm>

namespace ecasim {

std::string_view to_string(OutcomeKind kind)
{
    switch (kind) {
    case OutcomeKind::Empty:
        return "empty";
    case OutcomeKind::Success:
        return "success";
    case OutcomeKind::Collision:
        return "collision";
    }
    return "unknown";
}

SlotOutcome SlotOutcome::from_attempts(std::vector<TxAttempt> attempts)
{
    SlotOutcome out;
    out.kind = attempts.empty()       ? OutcomeKind::Empty
               : attempts.size() == 1 ? OutcomeKind::Success
                                      : OutcomeKind::Collision;
    out.transmitters = std::move(attempts);
    return out;
}

std::uint64_t SlotOutcome::longest_burst() const
{
    std::uint64_t longest = 0;
    for (const auto& tx : transmitters)
        longest = std::max(longest, tx.packets);
    return longest;
}

void TimingParams::validate() const
{
    if (empty_slot_us <= 0 || sifs_us <= 0 || difs_us <= 0 || phy_header_us <= 0 || ack_us <= 0 ||
        ack_timeout_us <= 0)
        throw ConfigError("timing durations must be positive");
    if (payload_bits == 0)
        throw ConfigError("payload_bits must be positive");
    if (!(data_rate_bps > 0))
        throw ConfigError("data_rate_bps must be positive");
}

double burst_airtime_us(std::uint64_t packets, const TimingParams& p)
{
    const double bits = static_cast<double>(packets) * static_cast<double>(p.payload_bits + p.mpdu_overhead_bits);
    return p.phy_header_us + bits / p.data_rate_bps * 1e6;
}

double slot_duration(OutcomeKind kind, std::uint64_t longest_burst, const TimingParams& p)
{
    switch (kind) {
    case OutcomeKind::Empty:
        return p.empty_slot_us;
    case OutcomeKind::Success:
        return burst_airtime_us(longest_burst, p) + p.sifs_us + p.ack_us + p.difs_us;
    case OutcomeKind::Collision: {
        const std::uint64_t k = p.collision_airtime == CollisionAirtime::LongestBurst ? longest_burst : 1;
        return burst_airtime_us(k, p) + p.sifs_us + p.ack_timeout_us + p.difs_us;
    }
    }
    return 0.0;
}

double slot_duration(const SlotOutcome& outcome, const TimingParams& p)
{
    return slot_duration(outcome.kind, outcome.longest_burst(), p);
}

long double elapsed_time(std::span<const SlotOutcome> outcomes, const TimingParams& p)
{
    long double total = 0.0L;
    for (const auto& o : outcomes)
        total += slot_duration(o, p);
    return total;
}

} // namespace ecasim
