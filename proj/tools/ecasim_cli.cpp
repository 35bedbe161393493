// ecasim command-line front end: run, sweep and trace verbs.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "ecasim/output.hpp"
#include "ecasim/scenario.hpp"
#include "ecasim/sweep.hpp"

namespace fs = std::filesystem;
using namespace ecasim;

namespace {

struct Common {
    std::string scenario_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint32_t> replications;
    std::optional<std::uint64_t> slots;
    std::string out = "out";
    unsigned jobs = 0;
};

void add_common(CLI::App& cmd, Common& c)
{
    cmd.add_option("scenario", c.scenario_path, "Scenario file (YAML)")->required()->check(CLI::ExistingFile);
    cmd.add_option("--seed", c.seed, "Master seed");
    cmd.add_option("--replications", c.replications, "Replications per station count")->check(CLI::PositiveNumber);
    cmd.add_option("--slots", c.slots, "Slots per replication")->check(CLI::PositiveNumber);
    cmd.add_option("--out", c.out, "Output directory")->capture_default_str();
    cmd.add_option("--jobs", c.jobs, "Worker threads, 0 = all cores")->capture_default_str();
}

Scenario load(const Common& c)
{
    Scenario sc = load_scenario(c.scenario_path);
    if (c.seed)
        sc.seed = *c.seed;
    if (c.replications)
        sc.replications = *c.replications;
    if (c.slots)
        sc.slots = *c.slots;
    sc.validate();
    return sc;
}

void save_scenario(const fs::path& dir, const Scenario& sc)
{
    fs::create_directories(dir);
    std::ofstream f(dir / "scenario.yaml", std::ios::binary);
    f << write_scenario(sc);
    if (!f)
        throw std::runtime_error("cannot write " + (dir / "scenario.yaml").string());
}

void progress(const PointResult& p)
{
    const auto& r = p.row;
    fmt::print(stderr, "N={:<3} {:<22} throughput {:8.3f} Mbps  jfi {:.4f}  converged {:.2f}\n", r.n, r.variants,
               r.throughput_mbps_mean, r.jfi_mean, r.convergence_rate);
}

void write_replication_series(const fs::path& dir, const std::vector<PointResult>& points)
{
    const auto path = dir / "collision_series_replications.csv";
    std::ofstream f(path, std::ios::binary);
    write_replication_series_csv(f, points);
    if (!f)
        throw std::runtime_error("cannot write " + path.string());
}

int run_points(const Common& c, Scenario sc, bool per_replication)
{
    save_scenario(c.out, sc);
    const auto points = sweep(sc, c.jobs, progress);
    write_outputs(c.out, points);
    if (per_replication)
        write_replication_series(c.out, points);
    return 0;
}

std::vector<std::uint64_t> parse_backoffs(const std::string& text)
{
    std::vector<std::uint64_t> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto comma = std::min(text.find(',', pos), text.size());
        const auto item = text.substr(pos, comma - pos);
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (item.empty() || used != item.size() || item.front() == '-')
            throw ConfigError("--backoffs: '" + item + "' is not a non-negative integer");
        out.push_back(v);
        pos = comma + 1;
    }
    return out;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Slotted-channel simulator for CSMA/CA and CSMA/ECA"};
    app.require_subcommand(1);

    Common run_opts;
    std::optional<std::uint32_t> run_n;
    bool run_series = false;
    auto* run_cmd = app.add_subcommand("run", "Simulate one population with replications");
    add_common(*run_cmd, run_opts);
    run_cmd->add_option("-N,--stations", run_n, "Override the station count (single-variant scenarios)")
        ->check(CLI::PositiveNumber);
    run_cmd->add_flag("--replication-series", run_series, "Also write per-replication collision series");

    Common sweep_opts;
    std::optional<std::uint32_t> from, to, step;
    bool sweep_series = false;
    auto* sweep_cmd = app.add_subcommand("sweep", "Simulate a range of station counts");
    add_common(*sweep_cmd, sweep_opts);
    sweep_cmd->add_option("--from", from, "First station count")->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--to", to, "Last station count")->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--step", step, "Station count increment")->check(CLI::PositiveNumber);
    sweep_cmd->add_flag("--replication-series", sweep_series, "Also write per-replication collision series");

    Common trace_opts;
    std::string backoffs;
    auto* trace_cmd = app.add_subcommand("trace", "Write a per-slot trace of one replication");
    add_common(*trace_cmd, trace_opts);
    trace_cmd->add_option("--backoffs", backoffs, "Initial backoff per station, comma separated");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            Scenario sc = load(run_opts);
            if (sc.sweep)
                throw ConfigError("scenario defines a sweep range; use the sweep verb");
            if (run_n) {
                sc.population = sc.population_for(*run_n);
                sc.validate();
            }
            return run_points(run_opts, sc, run_series);
        }
        if (*sweep_cmd) {
            Scenario sc = load(sweep_opts);
            if (from || to || step) {
                SweepRange r = sc.sweep.value_or(SweepRange{sc.total_stations(), sc.total_stations(), 1});
                r.from = from.value_or(r.from);
                r.to = to.value_or(r.to);
                r.step = step.value_or(r.step);
                sc.sweep = r;
            }
            if (!sc.sweep)
                throw ConfigError("scenario has no sweep range; set sweep_from/sweep_to or pass --from/--to");
            sc.validate();
            return run_points(sweep_opts, sc, sweep_series);
        }
        if (*trace_cmd) {
            Scenario sc = load(trace_opts);
            if (sc.sweep)
                throw ConfigError("trace needs a fixed population; remove the sweep range");
            const auto seed = replication_seed(sc.seed, 0);
            World world(sc.mac, expand_population(sc.population, sc.traffic), seed);
            if (!backoffs.empty())
                world.set_backoffs(parse_backoffs(backoffs));
            save_scenario(trace_opts.out, sc);
            const auto m = emit_trace(world, sc.slots, fs::path(trace_opts.out) / "trace.csv", sc.run_options());
            if (m.convergence_slot)
                fmt::print(stderr, "collision-free from slot {}\n", *m.convergence_slot);
            else
                fmt::print(stderr, "not certified collision-free within {} slots\n", sc.slots);
            return 0;
        }
    } catch (const ConfigError& e) {
        fmt::print(stderr, "ecasim: configuration error: {}\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        fmt::print(stderr, "ecasim: error: {}\n", e.what());
        return 1;
    }
    return 0;
}
