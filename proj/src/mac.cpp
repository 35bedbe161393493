#include "ecasim/mac.hpp"

#include <bit>
#include <string>

namespace ecasim {

void MacParams::validate() const
{
    if (cw_min < 2 || !std::has_single_bit(cw_min))
        throw ConfigError("cw_min must be a power of two >= 2, got " + std::to_string(cw_min));
    if (retry_limit < 1)
        throw ConfigError("retry_limit must be >= 1");
    // Keeps 2^S * cw_min comfortably inside 64 bits.
    if (max_stage > 32)
        throw ConfigError("max_stage must be <= 32, got " + std::to_string(max_stage));
}

void ProtocolVariant::validate() const
{
    if (!valid())
        throw ConfigError(fair_share ? "fair_share requires hysteresis"
                                     : "hysteresis requires deterministic_after_success");
}

std::string_view ProtocolVariant::name() const
{
    if (*this == csma_ca())
        return "csma-ca";
    if (*this == eca())
        return "eca";
    if (*this == eca_hysteresis())
        return "eca-hyst";
    if (*this == eca_hysteresis_fair_share())
        return "eca-hyst-fs";
    return "invalid";
}

ProtocolVariant ProtocolVariant::from_name(std::string_view name)
{
    if (name == "csma-ca" || name == "legacy")
        return csma_ca();
    if (name == "eca")
        return eca();
    if (name == "eca-hyst")
        return eca_hysteresis();
    if (name == "eca-hyst-fs")
        return eca_hysteresis_fair_share();
    throw ConfigError("unknown protocol variant '" + std::string(name) + "'");
}

Mac::Mac(MacParams params, ProtocolVariant variant) : params_(params), variant_(variant)
{
    params_.validate();
    variant_.validate();
}

} // namespace ecasim
