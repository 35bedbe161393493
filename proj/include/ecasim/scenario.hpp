#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ecasim/engine.hpp"
#include "ecasim/mac.hpp"
#include "ecasim/timing.hpp"

namespace ecasim {

struct PopulationEntry {
    ProtocolVariant variant;
    std::uint32_t count = 0;

    friend bool operator==(const PopulationEntry&, const PopulationEntry&) = default;
};

/// Inclusive range of station counts.
struct SweepRange {
    std::uint32_t from = 2;
    std::uint32_t to = 50;
    std::uint32_t step = 1;

    std::vector<std::uint32_t> values() const;

    friend bool operator==(const SweepRange&, const SweepRange&) = default;
};

struct Scenario {
    std::string id = "scenario";
    std::vector<PopulationEntry> population; // in file order
    MacParams mac;
    TimingParams timing;
    TrafficModel traffic;
    std::uint64_t slots = 1'000'000;
    std::uint64_t seed = 1;
    std::uint32_t replications = 50;
    std::uint64_t sample_every = 100;
    std::uint64_t observation_window = 10'000;
    std::optional<SweepRange> sweep;

    void validate() const;

    std::uint32_t total_stations() const;

    /// Population with the station count replaced by n. Only defined for a
    /// single-variant population.
    std::vector<PopulationEntry> population_for(std::uint32_t n) const;

    /// Station counts this scenario covers: the sweep range, or the
    /// population total when there is no sweep.
    std::vector<std::uint32_t> station_counts() const;

    RunOptions run_options() const;

    friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Parses the flat YAML scenario format documented in README.md. Throws
/// ConfigError naming the offending key.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);

/// Emits every field explicitly; parse_scenario(write_scenario(s)) == s.
std::string write_scenario(const Scenario& scenario);

/// "csma-ca=5;eca-hyst-fs=5"
std::string describe_population(const std::vector<PopulationEntry>& population);

std::vector<StationSpec> expand_population(const std::vector<PopulationEntry>& population,
                                           const TrafficModel& traffic);

} // namespace ecasim
