#pragma once

#include <algorithm>
#include <cassert>
#include <concepts>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string_view>

namespace ecasim {

using StationId = std::uint32_t;

/// Raised for any invalid configuration: bad MAC parameters, an illegal
/// variant combination, malformed scenario files.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Anything that can hand out a uniform integer in [0, n).
template <class R>
concept BackoffSource = requires(R& r, std::uint64_t n) {
    { r.below(n) } -> std::convertible_to<std::uint64_t>;
};

struct MacParams {
    std::uint32_t cw_min = 16;     // slots
    std::uint32_t max_stage = 5;   // S
    std::uint32_t retry_limit = 7; // R

    void validate() const;

    /// Contention window 2^stage * cw_min.
    std::uint64_t window(std::uint32_t stage) const { return std::uint64_t{cw_min} << stage; }

    /// Backoff assigned after a success at `stage` by the deterministic variants.
    std::uint64_t deterministic_backoff(std::uint32_t stage) const { return window(stage) / 2 - 1; }

    friend bool operator==(const MacParams&, const MacParams&) = default;
};

/// Feature flags selecting one of the four contention algorithms. The flags
/// are cumulative: hysteresis requires deterministic backoff, fair-share
/// requires hysteresis.
struct ProtocolVariant {
    bool deterministic_after_success = false;
    bool hysteresis = false;
    bool fair_share = false;

    static constexpr ProtocolVariant csma_ca() { return {false, false, false}; }
    static constexpr ProtocolVariant eca() { return {true, false, false}; }
    static constexpr ProtocolVariant eca_hysteresis() { return {true, true, false}; }
    static constexpr ProtocolVariant eca_hysteresis_fair_share() { return {true, true, true}; }

    constexpr bool valid() const noexcept
    {
        return (!hysteresis || deterministic_after_success) && (!fair_share || hysteresis);
    }
    void validate() const;

    /// Canonical name: "csma-ca", "eca", "eca-hyst" or "eca-hyst-fs".
    std::string_view name() const;

    /// Accepts the canonical names plus "legacy" for CSMA/CA.
    static ProtocolVariant from_name(std::string_view name);

    friend bool operator==(const ProtocolVariant&, const ProtocolVariant&) = default;
};

struct StationState {
    StationId id = 0;
    std::uint32_t retries = 0; // r
    std::uint32_t stage = 0;   // s
    std::uint64_t backoff = 0; // b, slots
    bool has_packet = true;
    std::uint64_t delivered = 0;
    std::uint64_t dropped = 0;

    friend bool operator==(const StationState&, const StationState&) = default;
};

struct TxAttempt {
    StationId station = 0;
    std::uint64_t packets = 1;

    friend bool operator==(const TxAttempt&, const TxAttempt&) = default;
};

/// Per-station contention rules for one protocol variant. Every operation
/// takes the state by value and returns the successor; the only side effect
/// is consuming draws from the supplied random source.
class Mac {
public:
    Mac(MacParams params, ProtocolVariant variant);

    const MacParams& params() const noexcept { return params_; }
    const ProtocolVariant& variant() const noexcept { return variant_; }

    template <BackoffSource R>
    StationState init_station(StationId id, R& rng) const
    {
        StationState st;
        st.id = id;
        st.backoff = draw(0, rng);
        return st;
    }

    /// One idle slot elapsed. Requires backoff > 0.
    StationState countdown(StationState st) const
    {
        assert(st.backoff > 0 && "countdown with an expired backoff counter");
        --st.backoff;
        return st;
    }

    /// Packets sent per channel access at `stage`.
    std::uint64_t burst_size(std::uint32_t stage) const
    {
        return variant_.fair_share ? (std::uint64_t{1} << stage) : 1;
    }

    std::optional<TxAttempt> intent(const StationState& st) const
    {
        if (st.backoff != 0 || !st.has_packet)
            return std::nullopt;
        return TxAttempt{st.id, burst_size(st.stage)};
    }

    template <BackoffSource R>
    StationState on_success(StationState st, const TxAttempt& attempt, R& rng) const
    {
        st.delivered += attempt.packets;
        st.retries = 0;
        if (!variant_.hysteresis)
            st.stage = 0;
        st.backoff = variant_.deterministic_after_success ? params_.deterministic_backoff(st.stage)
                                                          : draw(st.stage, rng);
        return st;
    }

    template <BackoffSource R>
    StationState on_collision(StationState st, R& rng) const
    {
        ++st.retries;
        st.stage = std::min(st.stage + 1, params_.max_stage);
        st.backoff = draw(st.stage, rng);
        if (st.retries >= params_.retry_limit) {
            // Only the head packet is discarded, also for fair-share bursts.
            ++st.dropped;
            st.retries = 0;
            if (!variant_.hysteresis)
                st.stage = 0;
            st.backoff = draw(st.stage, rng);
        }
        return st;
    }

    /// The station left contention; it re-enters at stage 0.
    template <BackoffSource R>
    StationState on_queue_empty(StationState st, R& rng) const
    {
        st.retries = 0;
        st.stage = 0;
        st.backoff = draw(0, rng);
        return st;
    }

private:
    template <BackoffSource R>
    std::uint64_t draw(std::uint32_t stage, R& rng) const
    {
        return static_cast<std::uint64_t>(rng.below(params_.window(stage)));
    }

    MacParams params_;
    ProtocolVariant variant_;
};

} // namespace ecasim
