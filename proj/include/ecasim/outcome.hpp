#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "ecasim/mac.hpp"

namespace ecasim {

enum class OutcomeKind : std::uint8_t { Empty, Success, Collision };

std::string_view to_string(OutcomeKind kind);

/// Channel verdict for one slot. Empty has no transmitters, Success exactly
/// one, Collision two or more.
struct SlotOutcome {
    OutcomeKind kind = OutcomeKind::Empty;
    std::vector<TxAttempt> transmitters;

    static SlotOutcome from_attempts(std::vector<TxAttempt> attempts);

    /// Largest burst among the transmitters; 0 for an empty slot.
    std::uint64_t longest_burst() const;

    friend bool operator==(const SlotOutcome&, const SlotOutcome&) = default;
};

} // namespace ecasim
