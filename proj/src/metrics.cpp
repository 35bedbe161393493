#include "ecasim/metrics.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <numeric>

namespace ecasim {

Throughput throughput(const RunMetrics& m)
{
    if (!(m.elapsed_us > 0.0L))
        throw MetricsError("throughput undefined: no elapsed time");
    const long double seconds = m.elapsed_us * 1e-6L;
    Throughput t;
    t.per_station_bps.reserve(m.delivered.size());
    long double total = 0.0L;
    for (std::size_t i = 0; i < m.delivered.size(); ++i) {
        const long double bits = static_cast<long double>(m.delivered_bits(i));
        t.per_station_bps.push_back(static_cast<double>(bits / seconds));
        total += bits;
    }
    t.aggregate_bps = static_cast<double>(total / seconds);
    return t;
}

double jfi(std::span<const double> x)
{
    if (x.empty())
        throw MetricsError("jfi of an empty vector");
    long double sum = 0.0L;
    long double sum_sq = 0.0L;
    for (double v : x) {
        if (v < 0.0)
            throw MetricsError("jfi requires non-negative values");
        sum += v;
        sum_sq += static_cast<long double>(v) * v;
    }
    if (sum_sq == 0.0L)
        throw MetricsError("jfi undefined for an all-zero vector");
    return static_cast<double>(sum * sum / (static_cast<long double>(x.size()) * sum_sq));
}

double jfi(std::span<const std::uint64_t> x)
{
    std::vector<double> d(x.begin(), x.end());
    return jfi(std::span<const double>(d));
}

std::vector<SeriesPoint> collision_fraction_series(const RunMetrics& m)
{
    std::vector<SeriesPoint> out;
    out.reserve(m.collision_samples.size());
    for (const auto& s : m.collision_samples)
        out.push_back({s.slot, static_cast<double>(s.collisions) / static_cast<double>(s.slot + 1)});
    return out;
}

ScheduleVerdict schedule_oracle(const ScheduleSnapshot& snapshot)
{
    const auto& e = snapshot.entries;
    for (const auto& entry : e)
        if (!entry.deterministic || entry.period == 0)
            return ScheduleVerdict::NotApplicable;
    for (std::size_t i = 0; i < e.size(); ++i)
        for (std::size_t j = i + 1; j < e.size(); ++j) {
            const std::uint64_t g = std::gcd(e[i].period, e[j].period);
            if (e[i].phase % g == e[j].phase % g)
                return ScheduleVerdict::Overlap;
        }
    return ScheduleVerdict::CollisionFree;
}

ConfidenceInterval confidence_interval(std::span<const double> samples, double level)
{
    if (samples.size() < 2)
        throw MetricsError("confidence interval needs at least two samples");
    if (!(level > 0.0 && level < 1.0))
        throw MetricsError("confidence level must lie in (0, 1)");
    const double n = static_cast<double>(samples.size());
    long double sum = 0.0L;
    for (double v : samples)
        sum += v;
    const double mean = static_cast<double>(sum / samples.size());
    long double ss = 0.0L;
    for (double v : samples)
        ss += (static_cast<long double>(v) - mean) * (static_cast<long double>(v) - mean);
    const double stddev = std::sqrt(static_cast<double>(ss / (samples.size() - 1)));
    const boost::math::students_t dist(n - 1.0);
    const double t = boost::math::quantile(boost::math::complement(dist, (1.0 - level) / 2.0));
    return {mean, t * stddev / std::sqrt(n)};
}

} // namespace ecasim
