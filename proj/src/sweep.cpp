#include "ecasim/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <stdexcept>
#include <thread>

#include "ecasim/engine.hpp"
#include "ecasim/rng.hpp"

namespace ecasim {

std::uint64_t replication_seed(std::uint64_t master, std::uint32_t index)
{
    return derive_seed(master, index);
}

ReplicationResult run_replication(const Scenario& scenario, const std::vector<PopulationEntry>& population,
                                  std::uint32_t index)
{
    ReplicationResult r;
    r.replication = index;
    r.seed = replication_seed(scenario.seed, index);

    World world(scenario.mac, expand_population(population, scenario.traffic), r.seed);
    const RunMetrics m = run(world, scenario.slots, scenario.run_options());

    r.aggregate_bps = throughput(m).aggregate_bps;
    r.jfi = jfi(std::span<const std::uint64_t>(m.delivered));
    r.collision_fraction = static_cast<double>(m.tally.collision) / static_cast<double>(m.slots);
    for (std::size_t i = 0; i < m.attempts.size(); ++i) {
        r.attempts += m.attempts[i];
        r.failed_attempts += m.failed_attempts[i];
    }
    r.convergence_slot = m.convergence_slot;
    r.series = collision_fraction_series(m);
    return r;
}

std::vector<ReplicationResult> run_replications(const Scenario& scenario,
                                                const std::vector<PopulationEntry>& population, unsigned jobs)
{
    const std::uint32_t count = scenario.replications;
    std::vector<ReplicationResult> results(count);
    std::vector<std::exception_ptr> errors(count);

    if (jobs == 0)
        jobs = std::max(1u, std::thread::hardware_concurrency());
    jobs = std::min<unsigned>(jobs, count);

    std::atomic<std::uint32_t> next{0};
    std::atomic<bool> failed{false};
    auto worker = [&] {
        for (std::uint32_t i = next++; i < count && !failed; i = next++) {
            try {
                results[i] = run_replication(scenario, population, i);
            } catch (...) {
                errors[i] = std::current_exception();
                failed = true;
            }
        }
    };

    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned j = 0; j < jobs; ++j)
            pool.emplace_back(worker);
    }

    for (std::uint32_t i = 0; i < count; ++i) {
        if (!errors[i])
            continue;
        try {
            std::rethrow_exception(errors[i]);
        } catch (const std::exception& e) {
            throw std::runtime_error("replication " + std::to_string(i) + " of " + describe_population(population) +
                                     " failed: " + e.what());
        }
    }
    return results;
}

ResultRow summarize(const Scenario& scenario, std::uint32_t n, const std::vector<PopulationEntry>& population,
                    const std::vector<ReplicationResult>& reps)
{
    ResultRow row;
    row.scenario = scenario.id;
    row.n = n;
    row.variants = describe_population(population);
    row.replications = static_cast<std::uint32_t>(reps.size());

    std::vector<double> mbps, fairness;
    double collision_sum = 0.0;
    std::uint32_t converged = 0;
    double convergence_sum = 0.0;
    for (const auto& r : reps) {
        mbps.push_back(r.aggregate_bps / 1e6);
        fairness.push_back(r.jfi);
        collision_sum += r.collision_fraction;
        if (r.convergence_slot) {
            ++converged;
            convergence_sum += static_cast<double>(*r.convergence_slot);
        }
    }
    const double count = static_cast<double>(reps.size());
    auto mean = [count](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v)
            s += x;
        return s / count;
    };
    if (reps.size() >= 2) {
        const auto t = confidence_interval(mbps);
        const auto f = confidence_interval(fairness);
        row.throughput_mbps_mean = t.mean;
        row.throughput_mbps_ci = t.half_width;
        row.jfi_mean = f.mean;
        row.jfi_ci = f.half_width;
    } else {
        row.throughput_mbps_mean = mean(mbps);
        row.jfi_mean = mean(fairness);
    }
    row.collision_fraction_mean = collision_sum / count;
    row.convergence_rate = static_cast<double>(converged) / count;
    if (converged > 0)
        row.mean_slots_to_convergence = convergence_sum / converged;
    return row;
}

namespace {

std::vector<SeriesPoint> mean_series(const std::vector<ReplicationResult>& reps)
{
    std::vector<SeriesPoint> out;
    if (reps.empty())
        return out;
    out = reps.front().series;
    for (std::size_t r = 1; r < reps.size(); ++r)
        for (std::size_t k = 0; k < out.size(); ++k)
            out[k].fraction += reps[r].series.at(k).fraction;
    for (auto& p : out)
        p.fraction /= static_cast<double>(reps.size());
    return out;
}

} // namespace

PointResult simulate_point(const Scenario& scenario, std::uint32_t n, unsigned jobs)
{
    const auto population = scenario.sweep ? scenario.population_for(n) : scenario.population;
    PointResult p;
    p.replications = run_replications(scenario, population, jobs);
    p.row = summarize(scenario, n, population, p.replications);
    p.mean_series = mean_series(p.replications);
    return p;
}

std::vector<PointResult> sweep(const Scenario& scenario, unsigned jobs, const PointSink& sink)
{
    scenario.validate();
    std::vector<PointResult> points;
    for (std::uint32_t n : scenario.station_counts()) {
        points.push_back(simulate_point(scenario, n, jobs));
        if (sink)
            sink(points.back());
    }
    return points;
}

} // namespace ecasim
