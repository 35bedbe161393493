#include <doctest.h>

#include <map>
#include <random>
#include <vector>

#include "ecasim/engine.hpp"

using namespace ecasim;

namespace {

std::vector<StationSpec> uniform(std::size_t n, ProtocolVariant v, TrafficModel t = TrafficModel::saturated())
{
    return std::vector<StationSpec>(n, StationSpec{v, t});
}

const std::vector<ProtocolVariant> kVariants = {
    ProtocolVariant::csma_ca(),
    ProtocolVariant::eca(),
    ProtocolVariant::eca_hysteresis(),
    ProtocolVariant::eca_hysteresis_fair_share(),
};

const std::vector<ProtocolVariant> kDeterministic = {
    ProtocolVariant::eca(),
    ProtocolVariant::eca_hysteresis(),
    ProtocolVariant::eca_hysteresis_fair_share(),
};

// Slots in which each station transmitted, collected from a trace.
struct TxLog {
    std::map<StationId, std::vector<std::uint64_t>> slots;
    std::vector<OutcomeKind> outcomes;

    TraceSink sink()
    {
        return [this](const TraceRecord& rec) {
            outcomes.push_back(rec.outcome);
            for (const auto& row : rec.rows)
                if (row.transmitted)
                    slots[row.station].push_back(rec.slot);
        };
    }
};

} // namespace

TEST_CASE("world construction")
{
    CHECK_THROWS_AS(World(MacParams{}, {}, 1), ConfigError);
    CHECK_THROWS_AS(World(MacParams{12, 5, 7}, uniform(2, ProtocolVariant::eca()), 1), ConfigError);
    CHECK_THROWS_AS(World(MacParams{}, uniform(2, ProtocolVariant{true, false, true}), 1), ConfigError);
    CHECK_THROWS_AS(World(MacParams{}, uniform(2, ProtocolVariant::eca(), TrafficModel::bernoulli(0.0, 5)), 1),
                    ConfigError);
    CHECK_THROWS_AS(World(MacParams{}, uniform(2, ProtocolVariant::eca(), TrafficModel::bernoulli(0.5, 0)), 1),
                    ConfigError);

    World w(MacParams{}, uniform(5, ProtocolVariant::eca()), 3);
    CHECK(w.size() == 5);
    CHECK(w.slot_index() == 0);
    for (std::size_t i = 0; i < w.size(); ++i) {
        CHECK(w.station(i).id == i);
        CHECK(w.station(i).backoff < 16);
    }
    CHECK(w.schedulable());

    const std::vector<std::uint64_t> wrong_size{1, 2};
    CHECK_THROWS_AS(w.set_backoffs(wrong_size), ConfigError);
    const std::vector<std::uint64_t> too_large{1, 2, 3, 4, 16};
    CHECK_THROWS_AS(w.set_backoffs(too_large), ConfigError);
    w.step();
    const std::vector<std::uint64_t> fine{1, 2, 3, 4, 5};
    CHECK_THROWS_AS(w.set_backoffs(fine), std::logic_error);
}

TEST_CASE("step arbitration")
{
    SUBCASE("two stations at zero collide and move to stage 1")
    {
        World w(MacParams{}, uniform(2, ProtocolVariant::eca_hysteresis_fair_share()), 1);
        const std::vector<std::uint64_t> b{0, 0};
        w.set_backoffs(b);
        const auto out = w.step();
        CHECK(out.kind == OutcomeKind::Collision);
        CHECK(out.transmitters.size() == 2);
        for (std::size_t i = 0; i < 2; ++i) {
            CHECK(w.station(i).stage == 1);
            CHECK(w.station(i).retries == 1);
            CHECK(w.station(i).backoff < 32);
        }
    }

    SUBCASE("a lone transmitter succeeds while the others count down")
    {
        World w(MacParams{}, uniform(3, ProtocolVariant::eca()), 1);
        const std::vector<std::uint64_t> b{0, 3, 5};
        w.set_backoffs(b);
        const auto out = w.step();
        REQUIRE(out.kind == OutcomeKind::Success);
        CHECK(out.transmitters.front() == TxAttempt{0, 1});
        CHECK(w.station(0).backoff == 7); // no decrement in its own transmission slot
        CHECK(w.station(0).delivered == 1);
        CHECK(w.station(1).backoff == 2);
        CHECK(w.station(2).backoff == 4);
        CHECK(w.slot_index() == 1);
    }

    SUBCASE("an empty slot only decrements")
    {
        World w(MacParams{}, uniform(3, ProtocolVariant::csma_ca()), 1);
        const std::vector<std::uint64_t> b{4, 1, 9};
        w.set_backoffs(b);
        const auto before = std::vector<StationState>(w.stations().begin(), w.stations().end());
        const auto out = w.step();
        CHECK(out.kind == OutcomeKind::Empty);
        CHECK(out.transmitters.empty());
        for (std::size_t i = 0; i < 3; ++i) {
            auto expected = before[i];
            --expected.backoff;
            CHECK(w.station(i) == expected);
        }
    }
}

TEST_CASE("run rejects zero slots")
{
    World w(MacParams{}, uniform(2, ProtocolVariant::eca()), 1);
    CHECK_THROWS_AS(run(w, 0), std::invalid_argument);
    CHECK_THROWS_AS(run_until_collision_free(w, 100, 0), std::invalid_argument);
}

TEST_CASE("single basic ECA station transmits every eighth slot")
{
    World w(MacParams{}, uniform(1, ProtocolVariant::eca()), 1);
    const std::vector<std::uint64_t> b{3};
    w.set_backoffs(b);
    TxLog log;
    w.set_trace(log.sink());
    const auto m = run(w, 100);
    CHECK(m.tally.collision == 0);
    const auto& tx = log.slots[0];
    REQUIRE(tx.size() == 13); // slots 3, 11, ..., 99
    CHECK(tx.front() == 3);
    for (std::size_t k = 1; k < tx.size(); ++k)
        CHECK(tx[k] - tx[k - 1] == 8);

    // Closed form: 13 successes and 87 empty slots.
    const TimingParams p;
    const double success_us = 40.0 + 12288.0 / 65.0 + 16.0 + 44.0 + 34.0;
    const double elapsed = 87 * 9.0 + 13 * success_us;
    CHECK(static_cast<double>(m.elapsed_us) == doctest::Approx(elapsed).epsilon(1e-12));
    CHECK(throughput(m).aggregate_bps == doctest::Approx(13 * 12000.0 / (elapsed * 1e-6)).epsilon(1e-12));
}

TEST_CASE("single station long-run throughput matches the 8-slot cycle")
{
    World w(MacParams{}, uniform(1, ProtocolVariant::eca()), 9);
    const std::vector<std::uint64_t> b{7};
    w.set_backoffs(b);
    const auto m = run(w, 800'000); // exactly 100000 cycles of 7 empty + 1 success
    const double cycle_us = 7 * 9.0 + 40.0 + 12288.0 / 65.0 + 16.0 + 44.0 + 34.0;
    CHECK(throughput(m).aggregate_bps == doctest::Approx(12000.0 / (cycle_us * 1e-6)).epsilon(1e-9));
    // Ceiling: data rate times payload share of each MPDU.
    CHECK(throughput(m).aggregate_bps < 65e6 * 12000.0 / 12288.0);
}

TEST_CASE("one-station trace shows b descending from 7 to 0 after the first success")
{
    World w(MacParams{}, uniform(1, ProtocolVariant::eca()), 4);
    const std::vector<std::uint64_t> b{2};
    w.set_backoffs(b);
    std::vector<std::uint64_t> seen;
    w.set_trace([&](const TraceRecord& rec) { seen.push_back(rec.rows.at(0).backoff); });
    run(w, 3 + 24);
    const std::vector<std::uint64_t> expected = {2, 1, 0, 7, 6, 5, 4, 3, 2, 1, 0, 7, 6, 5, 4, 3, 2, 1, 0,
                                                 7, 6, 5, 4, 3, 2, 1, 0};
    CHECK(seen == expected);
}

// Four ECA+hysteresis+fair-share stations. Stations 0 and 1 start alone and
// settle at stage 0; stations 2 and 3 start on the same counter, collide,
// and settle at stage 1 with two-packet bursts every 16 slots.
TEST_CASE("four-station contention replay")
{
    World w(MacParams{}, uniform(4, ProtocolVariant::eca_hysteresis_fair_share()), 7);
    const std::vector<std::uint64_t> b{2, 5, 11, 11};
    w.set_backoffs(b);
    TxLog log;
    w.set_trace(log.sink());
    const auto m = run(w, 400);

    CHECK(m.tally.collision == 1);
    CHECK(log.outcomes.at(2) == OutcomeKind::Success);
    CHECK(log.outcomes.at(5) == OutcomeKind::Success);
    CHECK(log.outcomes.at(11) == OutcomeKind::Collision);
    CHECK(log.slots[2].front() == 11);
    CHECK(log.slots[3].front() == 11);
    REQUIRE(m.convergence_slot);
    CHECK(*m.convergence_slot == 26);

    CHECK(w.station(0).stage == 0);
    CHECK(w.station(1).stage == 0);
    CHECK(w.station(2).stage == 1);
    CHECK(w.station(3).stage == 1);
    for (StationId s = 0; s < 4; ++s) {
        const auto& tx = log.slots[s];
        const std::uint64_t period = s < 2 ? 8 : 16;
        for (std::size_t k = 1; k < tx.size(); ++k)
            if (tx[k - 1] > 11)
                CHECK(tx[k] - tx[k - 1] == period);
    }
    // Equal packets per slot once periodic: one per 8 vs two per 16.
    CHECK(w.station(2).delivered % 2 == 0);
}

TEST_CASE("event wheel and slot-by-slot paths agree")
{
    std::mt19937_64 gen(77);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 1 + gen() % 20;
        std::vector<StationSpec> specs;
        for (std::size_t i = 0; i < n; ++i)
            specs.push_back({kVariants[gen() % 4], TrafficModel::saturated()});
        const MacParams params{std::uint32_t{1} << (1 + gen() % 5), static_cast<std::uint32_t>(gen() % 6),
                               static_cast<std::uint32_t>(1 + gen() % 7)};
        const std::uint64_t seed = gen();
        const std::uint64_t slots = 1 + gen() % 20'000;

        RunOptions fast;
        fast.sample_every = 1 + gen() % 500;
        fast.observation_window = 1 + gen() % 3000;
        RunOptions slow = fast;
        slow.slot_by_slot = true;

        World a(params, specs, seed);
        World b(params, specs, seed);
        const auto ma = run(a, slots, fast);
        const auto mb = run(b, slots, slow);
        REQUIRE(ma == mb);
        REQUIRE(a.slot_index() == b.slot_index());
        for (std::size_t i = 0; i < n; ++i)
            REQUIRE(a.station(i) == b.station(i));

        // Continuing a run keeps both paths in lockstep.
        const auto ma2 = run(a, 1000, fast);
        const auto mb2 = run(b, 1000, slow);
        REQUIRE(ma2 == mb2);
    }
}

TEST_CASE("slot conservation and determinism")
{
    for (const auto& v : kVariants) {
        World a(MacParams{}, uniform(10, v), 5);
        World b(MacParams{}, uniform(10, v), 5);
        const auto ma = run(a, 50'000);
        const auto mb = run(b, 50'000);
        CHECK(ma.tally.total() == 50'000);
        CHECK(ma.slots == 50'000);
        CHECK(ma == mb);
        std::uint64_t accesses = 0;
        for (auto x : ma.attempts)
            accesses += x;
        CHECK(accesses >= ma.tally.success + 2 * ma.tally.collision);
    }
}

TEST_CASE("hysteresis never lowers the stage under saturation")
{
    for (const auto v : {ProtocolVariant::eca_hysteresis(), ProtocolVariant::eca_hysteresis_fair_share()}) {
        World w(MacParams{}, uniform(20, v), 8);
        std::vector<std::uint32_t> last(20, 0);
        w.set_trace([&](const TraceRecord& rec) {
            for (const auto& row : rec.rows) {
                REQUIRE(row.stage >= last[row.station]);
                last[row.station] = row.stage;
            }
        });
        run(w, 30'000);
    }
}

TEST_CASE("legacy stations return to stage 0 after every success")
{
    World w(MacParams{}, uniform(15, ProtocolVariant::csma_ca()), 21);
    for (int t = 0; t < 20'000; ++t) {
        const auto out = w.step();
        if (out.kind == OutcomeKind::Success) {
            const auto& st = w.station(out.transmitters.front().station);
            REQUIRE(st.stage == 0);
            REQUIRE(st.backoff < 16);
        }
    }
}

TEST_CASE("bernoulli traffic conserves packets and resets the stage on drain")
{
    const auto traffic = TrafficModel::bernoulli(0.01, 20);
    for (const auto& v : kVariants) {
        World w(MacParams{}, uniform(8, v, traffic), 13);
        bool reset_seen = false;
        std::vector<std::uint32_t> last(8, 0);
        w.set_trace([&](const TraceRecord& rec) {
            for (const auto& row : rec.rows) {
                if (row.stage < last[row.station])
                    reset_seen = true;
                last[row.station] = row.stage;
            }
        });
        const auto m = run(w, 100'000);
        CHECK(m.tally.total() == 100'000);
        for (std::size_t i = 0; i < w.size(); ++i) {
            const auto& st = w.station(i);
            const auto& q = w.queue(i);
            CHECK(st.delivered + st.dropped + q.queued == q.generated);
            CHECK(q.queued <= 20);
            CHECK(st.has_packet == (q.queued > 0));
        }
        if (v.hysteresis)
            CHECK(reset_seen);
    }
}

TEST_CASE("bernoulli with a full queue blocks arrivals")
{
    World w(MacParams{}, uniform(30, ProtocolVariant::csma_ca(), TrafficModel::bernoulli(1.0, 3)), 2);
    run(w, 5'000);
    std::uint64_t blocked = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        CHECK(w.queue(i).queued <= 3);
        blocked += w.queue(i).blocked;
    }
    CHECK(blocked > 0);
}

TEST_CASE("fair-share bursts are capped by the queue under bernoulli traffic")
{
    World w(MacParams{}, uniform(12, ProtocolVariant::eca_hysteresis_fair_share(), TrafficModel::bernoulli(0.05, 4)),
            17);
    for (int t = 0; t < 50'000; ++t) {
        std::vector<std::uint64_t> queued;
        for (std::size_t i = 0; i < w.size(); ++i)
            queued.push_back(w.queue(i).queued);
        const auto out = w.step();
        for (const auto& a : out.transmitters) {
            REQUIRE(a.packets >= 1);
            REQUIRE(a.packets <= queued[a.station]);
        }
    }
}

TEST_CASE("convergence: N=6 converges for every deterministic variant")
{
    for (const auto& v : kDeterministic) {
        int converged = 0;
        const int seeds = 40;
        for (int s = 0; s < seeds; ++s) {
            World w(MacParams{}, uniform(6, v), 1000 + s);
            const auto r = run_until_collision_free(w, 100'000, 10'000);
            if (r.converged) {
                ++converged;
                CHECK(*r.slots_to_convergence == r.metrics.slots);
            }
        }
        CHECK(converged >= 0.95 * seeds);
    }
}

TEST_CASE("convergence: N=12 needs hysteresis")
{
    for (int s = 0; s < 3; ++s) {
        World basic(MacParams{}, uniform(12, ProtocolVariant::eca()), 50 + s);
        const auto r = run_until_collision_free(basic, 1'000'000, 10'000);
        CHECK_FALSE(r.converged);
        CHECK(r.metrics.slots == 1'000'000);

        World hyst(MacParams{}, uniform(12, ProtocolVariant::eca_hysteresis()), 50 + s);
        CHECK(run_until_collision_free(hyst, 1'000'000, 10'000).converged);
    }
}

TEST_CASE("certified schedules are absorbing")
{
    const MacParams params;
    const std::uint64_t horizon = 10ull * params.cw_min * (1ull << params.max_stage);
    std::mt19937_64 gen(31);
    int certified = 0;
    for (int trial = 0; trial < 60; ++trial) {
        const auto v = kDeterministic[gen() % 3];
        const std::size_t n = 2 + gen() % (v.hysteresis ? 20 : 7);
        World w(params, uniform(n, v), gen());
        const auto r = run_until_collision_free(w, 200'000, 10'000);
        if (!r.converged)
            continue;
        ++certified;
        REQUIRE(schedule_oracle(w.schedule_snapshot()) == ScheduleVerdict::CollisionFree);
        RunOptions opts;
        opts.sample_every = 64;
        const auto after = run(w, horizon, opts);
        CHECK(after.tally.collision == 0);
        CHECK(after.convergence_slot == std::optional<std::uint64_t>{0});
    }
    CHECK(certified >= 50);
}

TEST_CASE("cumulative collision fraction falls monotonically after convergence")
{
    World w(MacParams{}, uniform(12, ProtocolVariant::eca_hysteresis()), 404);
    const auto m = run(w, 200'000);
    REQUIRE(m.convergence_slot);
    const auto series = collision_fraction_series(m);
    for (std::size_t k = 1; k < series.size(); ++k) {
        CHECK(series[k].fraction >= 0.0);
        CHECK(series[k].fraction <= 1.0);
        if (series[k - 1].slot >= *m.convergence_slot)
            CHECK(series[k].fraction <= series[k - 1].fraction);
    }
    CHECK(series.back().slot == 199'900);
    CHECK(series.front().slot == 0);
}

TEST_CASE("observational fallback for worlds the oracle cannot certify")
{
    World lone(MacParams{}, uniform(1, ProtocolVariant::csma_ca()), 3);
    CHECK_FALSE(lone.schedulable());
    const auto r = run_until_collision_free(lone, 50'000, 1'000);
    CHECK(r.converged);
    CHECK(*r.slots_to_convergence == 0);
    CHECK(r.metrics.slots == 1'000);

    std::vector<StationSpec> mixed = uniform(5, ProtocolVariant::csma_ca());
    for (int i = 0; i < 5; ++i)
        mixed.push_back({ProtocolVariant::eca_hysteresis_fair_share(), TrafficModel::saturated()});
    World coexist(MacParams{}, mixed, 3);
    CHECK_FALSE(coexist.schedulable());
    const auto m = run(coexist, 100'000);
    CHECK(m.tally.collision > 0);
    for (auto d : m.delivered)
        CHECK(d > 0);
}
