#pragma once

#include <cstdint>
#include <span>

#include "ecasim/outcome.hpp"

namespace ecasim {

enum class CollisionAirtime : std::uint8_t {
    LongestBurst, // airtime of the longest colliding burst
    SinglePacket, // as if every collider sent one packet
};

/// Microsecond durations that turn slot outcomes into airtime. Payload size
/// and data rate follow the 802.11n setup (12000-bit packets at 65 Mbps);
/// the remaining constants are 802.11n-flavoured defaults.
struct TimingParams {
    double empty_slot_us = 9.0;
    double sifs_us = 16.0;
    double difs_us = 34.0;
    double phy_header_us = 40.0;
    double ack_us = 44.0;
    double ack_timeout_us = 44.0;
    std::uint64_t mpdu_overhead_bits = 288; // MAC header + delimiter + FCS
    std::uint64_t payload_bits = 12000;     // L
    double data_rate_bps = 65e6;
    CollisionAirtime collision_airtime = CollisionAirtime::LongestBurst;

    void validate() const;

    friend bool operator==(const TimingParams&, const TimingParams&) = default;
};

/// Airtime of one A-MPDU carrying `packets` MPDUs, excluding the
/// acknowledgement phase.
double burst_airtime_us(std::uint64_t packets, const TimingParams& params);

/// Duration of a slot given its kind and longest burst.
double slot_duration(OutcomeKind kind, std::uint64_t longest_burst, const TimingParams& params);

double slot_duration(const SlotOutcome& outcome, const TimingParams& params);

long double elapsed_time(std::span<const SlotOutcome> outcomes, const TimingParams& params);

} // namespace ecasim
