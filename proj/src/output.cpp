#include "ecasim/output.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <fstream>
#include <ostream>
#include <stdexcept>

namespace ecasim {

namespace {

std::string num(double v) { return fmt::format("{:.6f}", v); }

std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : "NA"; }

std::vector<std::string> row_fields(const ResultRow& r)
{
    return {r.scenario,
            std::to_string(r.n),
            r.variants,
            std::to_string(r.replications),
            num(r.throughput_mbps_mean),
            opt_num(r.throughput_mbps_ci),
            num(r.jfi_mean),
            opt_num(r.jfi_ci),
            fmt::format("{:.9f}", r.collision_fraction_mean),
            num(r.convergence_rate),
            r.mean_slots_to_convergence ? fmt::format("{:.1f}", *r.mean_slots_to_convergence) : "NA"};
}

void write_line(std::ostream& out, const std::vector<std::string>& fields)
{
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i)
            out << ',';
        out << csv_field(fields[i]);
    }
    out << "\r\n";
}

std::ofstream open_output(const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    return out;
}

void check(const std::ofstream& out, const std::filesystem::path& path)
{
    if (!out)
        throw std::runtime_error("write to " + path.string() + " failed");
}

} // namespace

std::string csv_field(std::string_view value)
{
    if (value.find_first_of(",\"\r\n") == std::string_view::npos)
        return std::string(value);
    std::string quoted = "\"";
    for (char c : value) {
        if (c == '"')
            quoted += '"';
        quoted += c;
    }
    quoted += '"';
    return quoted;
}

const std::vector<std::string>& result_columns()
{
    static const std::vector<std::string> columns = {
        "scenario",    "n",       "variants",           "replications",
        "throughput_mbps_mean", "throughput_mbps_ci", "jfi_mean", "jfi_ci",
        "collision_fraction_mean", "convergence_rate", "mean_slots_to_convergence",
    };
    return columns;
}

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows)
{
    write_line(out, result_columns());
    for (const auto& r : rows)
        write_line(out, row_fields(r));
}

void write_results_json(std::ostream& out, const std::vector<ResultRow>& rows)
{
    // ordered_json keeps the CSV column order.
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr); };
    for (const auto& r : rows) {
        nlohmann::ordered_json o;
        o["scenario"] = r.scenario;
        o["n"] = r.n;
        o["variants"] = r.variants;
        o["replications"] = r.replications;
        o["throughput_mbps_mean"] = r.throughput_mbps_mean;
        o["throughput_mbps_ci"] = opt(r.throughput_mbps_ci);
        o["jfi_mean"] = r.jfi_mean;
        o["jfi_ci"] = opt(r.jfi_ci);
        o["collision_fraction_mean"] = r.collision_fraction_mean;
        o["convergence_rate"] = r.convergence_rate;
        o["mean_slots_to_convergence"] = opt(r.mean_slots_to_convergence);
        arr.push_back(std::move(o));
    }
    out << arr.dump(2) << '\n';
}

void write_series_csv(std::ostream& out, const std::vector<PointResult>& points)
{
    write_line(out, {"n", "slot_index", "fraction"});
    for (const auto& p : points)
        for (const auto& s : p.mean_series)
            write_line(out, {std::to_string(p.row.n), std::to_string(s.slot), fmt::format("{:.9g}", s.fraction)});
}

void write_replication_series_csv(std::ostream& out, const std::vector<PointResult>& points)
{
    write_line(out, {"n", "replication", "slot_index", "fraction"});
    for (const auto& p : points)
        for (const auto& r : p.replications)
            for (const auto& s : r.series)
                write_line(out, {std::to_string(p.row.n), std::to_string(r.replication), std::to_string(s.slot),
                                 fmt::format("{:.9g}", s.fraction)});
}

TraceSink csv_trace_sink(std::ostream& out)
{
    write_line(out, {"slot", "station", "b", "s", "tx", "outcome"});
    return [&out](const TraceRecord& rec) {
        const std::string outcome(to_string(rec.outcome));
        for (const auto& row : rec.rows)
            out << rec.slot << ',' << row.station << ',' << row.backoff << ',' << row.stage << ','
                << (row.transmitted ? 1 : 0) << ',' << outcome << "\r\n";
    };
}

RunMetrics emit_trace(World& world, std::uint64_t n_slots, const std::filesystem::path& path,
                      const RunOptions& options)
{
    if (n_slots == 0)
        throw std::invalid_argument("trace needs at least one slot");
    auto out = open_output(path);
    world.set_trace(csv_trace_sink(out));
    RunMetrics m;
    try {
        m = run(world, n_slots, options);
    } catch (...) {
        world.set_trace({});
        throw;
    }
    world.set_trace({});
    out.flush();
    check(out, path);
    return m;
}

void write_outputs(const std::filesystem::path& dir, const std::vector<PointResult>& points)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());

    std::vector<ResultRow> rows;
    for (const auto& p : points)
        rows.push_back(p.row);

    const auto csv = dir / "results.csv";
    auto f = open_output(csv);
    write_results_csv(f, rows);
    f.flush();
    check(f, csv);

    const auto json = dir / "results.json";
    auto j = open_output(json);
    write_results_json(j, rows);
    j.flush();
    check(j, json);

    const auto series = dir / "collision_series.csv";
    auto s = open_output(series);
    write_series_csv(s, points);
    s.flush();
    check(s, series);
}

} // namespace ecasim
