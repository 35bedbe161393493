#include "ecasim/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace ecasim {

namespace {

const std::set<std::string, std::less<>> kKnownKeys = {
    "id",           "variant",        "N",               "stations",          "cw_min",
    "max_stage",    "retry_limit",    "slots",           "seed",              "replications",
    "sample_every", "observation_window", "traffic",     "arrival_prob",      "queue_capacity",
    "sweep_from",   "sweep_to",       "sweep_step",      "empty_slot_us",     "sifs_us",
    "difs_us",      "phy_header_us",  "ack_us",          "ack_timeout_us",    "mpdu_overhead_bits",
    "payload_bits", "data_rate_bps",  "collision_airtime",
};

template <class T>
T scalar(const YAML::Node& node, const std::string& key)
{
    try {
        if (!node.IsScalar())
            throw ConfigError("key '" + key + "' must be a scalar");
        if constexpr (std::is_unsigned_v<T>) {
            // yaml-cpp happily wraps "-1" into a huge unsigned value.
            if (!node.Scalar().empty() && node.Scalar().front() == '-')
                throw ConfigError("key '" + key + "' must be non-negative");
        }
        return node.as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError("key '" + key + "' has an invalid value '" + node.Scalar() + "'");
    }
}

std::uint32_t count32(const YAML::Node& node, const std::string& key)
{
    const auto v = scalar<std::uint64_t>(node, key);
    if (v > std::numeric_limits<std::uint32_t>::max())
        throw ConfigError("key '" + key + "' is out of range");
    return static_cast<std::uint32_t>(v);
}

template <class Fn>
void wrap(const std::string& key, Fn&& fn)
{
    try {
        fn();
    } catch (const ConfigError& e) {
        throw ConfigError("key '" + key + "': " + e.what());
    }
}

} // namespace

std::vector<std::uint32_t> SweepRange::values() const
{
    std::vector<std::uint32_t> out;
    for (std::uint64_t n = from; n <= to; n += step)
        out.push_back(static_cast<std::uint32_t>(n));
    return out;
}

std::uint32_t Scenario::total_stations() const
{
    std::uint32_t total = 0;
    for (const auto& p : population)
        total += p.count;
    return total;
}

void Scenario::validate() const
{
    if (population.empty())
        throw ConfigError("scenario has no stations: set 'variant' and 'N', or 'stations'");
    for (const auto& p : population)
        p.variant.validate();
    wrap("cw_min", [&] { mac.validate(); });
    timing.validate();
    wrap("traffic", [&] { traffic.validate(); });
    if (slots == 0)
        throw ConfigError("key 'slots': must be >= 1");
    if (replications == 0)
        throw ConfigError("key 'replications': must be >= 1");
    if (sample_every == 0)
        throw ConfigError("key 'sample_every': must be >= 1");
    if (observation_window == 0)
        throw ConfigError("key 'observation_window': must be >= 1");
    if (sweep) {
        if (population.size() != 1)
            throw ConfigError("key 'sweep_from': a sweep needs a single-variant population");
        if (sweep->from == 0)
            throw ConfigError("key 'sweep_from': must be >= 1");
        if (sweep->step == 0)
            throw ConfigError("key 'sweep_step': must be >= 1");
        if (sweep->to < sweep->from)
            throw ConfigError("key 'sweep_to': empty sweep range");
    } else if (total_stations() == 0) {
        throw ConfigError("key 'N': total stations must be >= 1");
    }
}

std::vector<PopulationEntry> Scenario::population_for(std::uint32_t n) const
{
    if (population.size() != 1)
        throw ConfigError("station count override needs a single-variant population");
    return {{population.front().variant, n}};
}

std::vector<std::uint32_t> Scenario::station_counts() const
{
    if (sweep)
        return sweep->values();
    return {total_stations()};
}

RunOptions Scenario::run_options() const
{
    RunOptions o;
    o.timing = timing;
    o.sample_every = sample_every;
    o.observation_window = observation_window;
    return o;
}

Scenario parse_scenario(std::string_view text)
{
    YAML::Node root;
    try {
        root = YAML::Load(std::string(text));
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("malformed scenario: ") + e.what());
    }
    if (!root.IsMap())
        throw ConfigError("scenario must be a key/value mapping");

    for (const auto& kv : root) {
        const auto key = kv.first.as<std::string>();
        if (!kKnownKeys.contains(key))
            throw ConfigError("unknown key '" + key + "'");
    }

    Scenario sc;
    auto get = [&root](const char* key) { return root[key]; };

    if (auto n = get("id"))
        sc.id = scalar<std::string>(n, "id");

    const bool single = get("variant") || get("N");
    if (single && get("stations"))
        throw ConfigError("key 'stations': cannot be combined with 'variant'/'N'");
    if (single) {
        if (!get("variant"))
            throw ConfigError("key 'variant': required together with 'N'");
        PopulationEntry p;
        wrap("variant", [&] { p.variant = ProtocolVariant::from_name(scalar<std::string>(get("variant"), "variant")); });
        p.count = get("N") ? count32(get("N"), "N") : 0;
        sc.population.push_back(p);
    } else if (auto st = get("stations")) {
        if (!st.IsMap())
            throw ConfigError("key 'stations': expected a mapping of variant -> count");
        for (const auto& kv : st) {
            const auto name = kv.first.as<std::string>();
            PopulationEntry p;
            wrap("stations", [&] { p.variant = ProtocolVariant::from_name(name); });
            p.count = count32(kv.second, "stations." + name);
            for (const auto& existing : sc.population)
                if (existing.variant == p.variant)
                    throw ConfigError("key 'stations': variant '" + name + "' listed twice");
            sc.population.push_back(p);
        }
    }

    auto u32 = [&](const char* key, std::uint32_t& out) {
        if (auto n = get(key))
            out = count32(n, key);
    };
    auto u64 = [&](const char* key, std::uint64_t& out) {
        if (auto n = get(key))
            out = scalar<std::uint64_t>(n, key);
    };
    auto dbl = [&](const char* key, double& out) {
        if (auto n = get(key))
            out = scalar<double>(n, key);
    };

    u32("cw_min", sc.mac.cw_min);
    u32("max_stage", sc.mac.max_stage);
    u32("retry_limit", sc.mac.retry_limit);
    u64("slots", sc.slots);
    u64("seed", sc.seed);
    u32("replications", sc.replications);
    u64("sample_every", sc.sample_every);
    u64("observation_window", sc.observation_window);

    if (auto n = get("traffic")) {
        const auto kind = scalar<std::string>(n, "traffic");
        if (kind == "saturated")
            sc.traffic.kind = TrafficModel::Kind::Saturated;
        else if (kind == "bernoulli")
            sc.traffic.kind = TrafficModel::Kind::Bernoulli;
        else
            throw ConfigError("key 'traffic': expected 'saturated' or 'bernoulli', got '" + kind + "'");
    }
    if ((get("arrival_prob") || get("queue_capacity")) && sc.traffic.is_saturated())
        throw ConfigError("key 'arrival_prob'/'queue_capacity': only valid with traffic: bernoulli");
    dbl("arrival_prob", sc.traffic.arrival_prob);
    u64("queue_capacity", sc.traffic.queue_capacity);

    if (get("sweep_from") || get("sweep_to") || get("sweep_step")) {
        if (!get("sweep_from") || !get("sweep_to"))
            throw ConfigError("key 'sweep_from': a sweep needs both 'sweep_from' and 'sweep_to'");
        SweepRange r;
        u32("sweep_from", r.from);
        u32("sweep_to", r.to);
        u32("sweep_step", r.step);
        sc.sweep = r;
    }

    dbl("empty_slot_us", sc.timing.empty_slot_us);
    dbl("sifs_us", sc.timing.sifs_us);
    dbl("difs_us", sc.timing.difs_us);
    dbl("phy_header_us", sc.timing.phy_header_us);
    dbl("ack_us", sc.timing.ack_us);
    if (get("ack_us") && !get("ack_timeout_us"))
        sc.timing.ack_timeout_us = sc.timing.ack_us;
    dbl("ack_timeout_us", sc.timing.ack_timeout_us);
    u64("mpdu_overhead_bits", sc.timing.mpdu_overhead_bits);
    u64("payload_bits", sc.timing.payload_bits);
    dbl("data_rate_bps", sc.timing.data_rate_bps);
    if (auto n = get("collision_airtime")) {
        const auto mode = scalar<std::string>(n, "collision_airtime");
        if (mode == "longest-burst")
            sc.timing.collision_airtime = CollisionAirtime::LongestBurst;
        else if (mode == "single-packet")
            sc.timing.collision_airtime = CollisionAirtime::SinglePacket;
        else
            throw ConfigError("key 'collision_airtime': expected 'longest-burst' or 'single-packet'");
    }

    sc.validate();
    return sc;
}

Scenario load_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open scenario file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

std::string write_scenario(const Scenario& sc)
{
    YAML::Emitter out;
    out.SetDoublePrecision(17);
    out << YAML::BeginMap;
    out << YAML::Key << "id" << YAML::Value << YAML::DoubleQuoted << sc.id;
    out << YAML::Key << "stations" << YAML::Value << YAML::Flow << YAML::BeginMap;
    for (const auto& p : sc.population)
        out << YAML::Key << std::string(p.variant.name()) << YAML::Value << p.count;
    out << YAML::EndMap;
    out << YAML::Key << "cw_min" << YAML::Value << sc.mac.cw_min;
    out << YAML::Key << "max_stage" << YAML::Value << sc.mac.max_stage;
    out << YAML::Key << "retry_limit" << YAML::Value << sc.mac.retry_limit;
    out << YAML::Key << "slots" << YAML::Value << sc.slots;
    out << YAML::Key << "seed" << YAML::Value << sc.seed;
    out << YAML::Key << "replications" << YAML::Value << sc.replications;
    out << YAML::Key << "sample_every" << YAML::Value << sc.sample_every;
    out << YAML::Key << "observation_window" << YAML::Value << sc.observation_window;
    out << YAML::Key << "traffic" << YAML::Value << (sc.traffic.is_saturated() ? "saturated" : "bernoulli");
    if (!sc.traffic.is_saturated()) {
        out << YAML::Key << "arrival_prob" << YAML::Value << sc.traffic.arrival_prob;
        out << YAML::Key << "queue_capacity" << YAML::Value << sc.traffic.queue_capacity;
    }
    if (sc.sweep) {
        out << YAML::Key << "sweep_from" << YAML::Value << sc.sweep->from;
        out << YAML::Key << "sweep_to" << YAML::Value << sc.sweep->to;
        out << YAML::Key << "sweep_step" << YAML::Value << sc.sweep->step;
    }
    const TimingParams& t = sc.timing;
    out << YAML::Key << "empty_slot_us" << YAML::Value << t.empty_slot_us;
    out << YAML::Key << "sifs_us" << YAML::Value << t.sifs_us;
    out << YAML::Key << "difs_us" << YAML::Value << t.difs_us;
    out << YAML::Key << "phy_header_us" << YAML::Value << t.phy_header_us;
    out << YAML::Key << "ack_us" << YAML::Value << t.ack_us;
    out << YAML::Key << "ack_timeout_us" << YAML::Value << t.ack_timeout_us;
    out << YAML::Key << "mpdu_overhead_bits" << YAML::Value << t.mpdu_overhead_bits;
    out << YAML::Key << "payload_bits" << YAML::Value << t.payload_bits;
    out << YAML::Key << "data_rate_bps" << YAML::Value << t.data_rate_bps;
    out << YAML::Key << "collision_airtime" << YAML::Value
        << (t.collision_airtime == CollisionAirtime::LongestBurst ? "longest-burst" : "single-packet");
    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

std::string describe_population(const std::vector<PopulationEntry>& population)
{
    std::string out;
    for (const auto& p : population) {
        if (!out.empty())
            out += ';';
        out += std::string(p.variant.name()) + "=" + std::to_string(p.count);
    }
    return out;
}

std::vector<StationSpec> expand_population(const std::vector<PopulationEntry>& population,
                                           const TrafficModel& traffic)
{
    std::vector<StationSpec> specs;
    for (const auto& p : population)
        for (std::uint32_t k = 0; k < p.count; ++k)
            specs.push_back({p.variant, traffic});
    return specs;
}

} // namespace ecasim
