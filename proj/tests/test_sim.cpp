#include "tsm/sim.hpp"

#include "tsm/solve.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace tsm;

namespace {

DelayMatrix uniform_delays(std::size_t nodes, const Rat& v) {
    DelayMatrix m(nodes);
    for (NodeId i = 0; i < nodes; ++i)
        for (NodeId j = 0; j < nodes; ++j)
            if (i != j) m.set(i, j, v);
    return m;
}

} // namespace

TEST_CASE("deterministic distance timers ignore the seed entirely") {
    SimConfig cfg;
    cfg.delays = uniform_delays(4, 100);
    cfg.policy = TimerPolicy::deterministic_distance(Rat(1), Rat(1000000));
    cfg.seed = 1;
    Metrics a = run(cfg);
    cfg.seed = 999;
    Metrics b = run(cfg);
    CHECK(log_str(a.log) == log_str(b.log));
    CHECK(a.responses == b.responses);
}

TEST_CASE("identical seeds reproduce randomized runs byte for byte") {
    SimConfig cfg;
    cfg.delays = uniform_delays(5, 50);
    cfg.policy = TimerPolicy::uniform_fixed(
        {Interval{100, 200}, Interval{100, 200}, Interval{100, 200}, Interval{100, 200}},
        Rat(1000000));
    cfg.seed = 42;
    Metrics a = run(cfg);
    Metrics b = run(cfg);
    CHECK(log_str(a.log) == log_str(b.log));
    CHECK(metrics_str(a) == metrics_str(b));
}

TEST_CASE("suppression follows chains of fired responders, not windows alone") {
    // responder 1 fires first and silences 2; 2 would have silenced 3, but a
    // silenced node sends nothing, so 3 fires as well
    DelayMatrix d = uniform_delays(4, 100);
    d.set(0, 1, Rat(10));
    d.set(0, 2, Rat(10));
    d.set(0, 3, Rat(10));
    d.set(1, 2, Rat(2));   // 11 + 2 = 13, inside 2's window ending at 15
    d.set(2, 3, Rat(1));   // would land at 16, before 18, if 2 ever fired
    d.set(1, 3, Rat(100)); // 111, far past 3's expiry at 18

    std::vector<Rat> exp = {Rat(1), Rat(5), Rat(8)};
    CHECK(oracle_max_responses(d, exp) == 2);

    SimConfig cfg;
    cfg.delays = d;
    cfg.policy = TimerPolicy::uniform_fixed(
        {Interval::point(Rat(1)), Interval::point(Rat(5)), Interval::point(Rat(8))},
        Rat(1000000));
    Metrics m = run(cfg);
    CHECK(m.responses == 2);
    CHECK(m.recovered);
}

TEST_CASE("an arrival exactly at the expiry still suppresses") {
    DelayMatrix d = uniform_delays(3, 100);
    d.set(0, 1, Rat(10));
    d.set(0, 2, Rat(10));
    d.set(1, 2, Rat(4)); // 10 + 1 + 4 = 15 = 10 + 5, the exact expiry

    std::vector<Rat> exp = {Rat(1), Rat(5)};
    CHECK(oracle_max_responses(d, exp) == 1);

    SimConfig cfg;
    cfg.delays = d;
    cfg.policy = TimerPolicy::uniform_fixed({Interval::point(Rat(1)), Interval::point(Rat(5))},
                                            Rat(1000000));
    Metrics m = run(cfg);
    CHECK(m.responses == 1);
}

TEST_CASE("event loop and closed-form count agree on fuzzed systems") {
    std::mt19937 rng(501);
    auto rnd = [&](int lo, int hi) { return int(lo + rng() % unsigned(hi - lo + 1)); };
    for (int t = 0; t < 300; ++t) {
        std::size_t n = std::size_t(rnd(1, 6));
        DelayMatrix d(n + 1);
        for (NodeId i = 0; i <= n; ++i)
            for (NodeId j = 0; j <= n; ++j)
                if (i != j) d.set(i, j, Rat(rnd(1, 50)));
        std::vector<Interval> per_node;
        std::vector<Rat> exp;
        for (std::size_t i = 0; i < n; ++i) {
            exp.push_back(Rat(rnd(1, 60)));
            per_node.push_back(Interval::point(exp.back()));
        }
        SimConfig cfg;
        cfg.delays = d;
        cfg.policy = TimerPolicy::uniform_fixed(per_node, Rat(1000000));
        Metrics m = run(cfg);
        INFO("case ", t, " n=", n);
        CHECK(m.responses == oracle_max_responses(d, exp));
        CHECK(m.recovered);
    }
}

TEST_CASE("logs are time ordered and the recovery is the first response at Q") {
    SimConfig cfg;
    cfg.delays = uniform_delays(4, 100);
    cfg.delays.set(0, 1, Rat(30));
    cfg.delays.set(1, 0, Rat(25));
    cfg.policy = TimerPolicy::uniform_fixed(
        {Interval{10, 20}, Interval{10, 20}, Interval{10, 20}}, Rat(1000000));
    cfg.seed = 7;
    Metrics m = run(cfg);
    REQUIRE_FALSE(m.log.empty());
    for (std::size_t i = 1; i < m.log.size(); ++i)
        CHECK(m.log[i - 1].at <= m.log[i].at);

    int tx_res = 0;
    std::optional<Rat> first_at_q;
    for (const auto& e : m.log) {
        if (e.kind == StimulusKind::RespTx) ++tx_res;
        if (e.kind == StimulusKind::RespRx && e.node == 0 && !first_at_q) first_at_q = e.at;
    }
    CHECK(tx_res == m.responses);
    REQUIRE(m.recovery_time);
    CHECK(m.recovery_time == first_at_q);
}

TEST_CASE("the request timer retires after the round budget") {
    SimConfig cfg;
    cfg.delays = uniform_delays(3, 100);
    cfg.policy = TimerPolicy::deterministic_distance(Rat(1), Rat(500));
    cfg.losses = {LossKey{1, MessageClass::Request, 1}, LossKey{1, MessageClass::Request, 2}};
    cfg.max_rounds = 1;
    Metrics m = run(cfg);
    CHECK_FALSE(m.recovered);
    CHECK(m.responses == 0);
    CHECK(m.rounds_used == 1);
    std::string text = metrics_str(m);
    CHECK(text.find("recovered\tno") != std::string::npos);
}

TEST_CASE("a lost response is recovered one request period later") {
    SimConfig cfg;
    cfg.delays = uniform_delays(2, 100);
    cfg.policy = TimerPolicy::uniform_fixed({Interval::point(Rat(50))}, Rat(300));
    cfg.losses = {LossKey{1, MessageClass::Response, 0}};
    cfg.max_rounds = 2;
    Metrics m = run(cfg);
    CHECK(m.recovered);
    CHECK(m.rounds_used == 2);
    CHECK(m.responses == 2); // the responder re-arms and fires again
    REQUIRE(m.recovery_time);
    // Exp_Q + d_Q_1 + Exp_1 + d_1_Q
    CHECK(*m.recovery_time == Rat(550));
}

// ==== timer draws ==============================================================

TEST_CASE("distance timers resolve to the scaled round-trip estimate") {
    DelayMatrix d = uniform_delays(3, 100);
    d.set(0, 1, Rat(30));
    d.set(1, 0, Rat(50)); // estimate (30 + 50) / 2 = 40
    TimerPolicy p = TimerPolicy::deterministic_distance(Rat(3), Rat(1000));
    auto exp = policy_durations(p, d, 9, 1);
    REQUIRE(exp.size() == 2);
    CHECK(exp[0] == Rat(120)); // responder 1
    CHECK(exp[1] == Rat(300)); // responder 2, symmetric 100
}

TEST_CASE("uniform draws stay inside their interval and depend on the seed") {
    DelayMatrix d = uniform_delays(7, 100);
    TimerPolicy p = TimerPolicy::uniform_distance(Rat(1), Rat(2), Rat(1000));
    // estimate 100: window [100, 300]
    auto a = policy_durations(p, d, 1, 1);
    auto b = policy_durations(p, d, 1, 1);
    auto c = policy_durations(p, d, 2, 1);
    auto r2 = policy_durations(p, d, 1, 2);
    REQUIRE(a.size() == 6);
    CHECK(a == b);
    CHECK(a != c);
    CHECK(a != r2); // a fresh draw each round
    for (const auto& x : a) {
        CHECK(x >= Rat(100));
        CHECK(x <= Rat(300));
    }
}

TEST_CASE("synthesized worst and best topologies behave as promised under draws") {
    TopologySynthOptions wopt;
    wopt.responders = 4;
    wopt.mode = Mode::Worst;
    wopt.timers.kind = TimerSpec::Kind::Intervals;
    wopt.timers.intervals = {Interval{100, 200}, Interval{200, 400}, Interval{200, 400},
                             Interval{200, 400}};
    auto worst = synthesize_topology(wopt);
    REQUIRE(worst.status == TopologySynthResult::Status::Absolute);

    TimerPolicy policy = TimerPolicy::uniform_fixed_roles(4, 1, Interval{100, 200},
                                                          Interval{200, 400}, Rat(1000000));
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        SimConfig cfg;
        cfg.delays = worst.matrix;
        cfg.policy = policy;
        cfg.seed = seed;
        CHECK(run(cfg).responses == 4);
    }

    TopologySynthOptions bopt;
    bopt.responders = 4;
    bopt.mode = Mode::Best;
    bopt.timers.kind = TimerSpec::Kind::Distance;
    bopt.timers.c1 = 1;
    auto best = synthesize_topology(bopt);
    REQUIRE(best.status == TopologySynthResult::Status::Absolute);
    SimConfig cfg;
    cfg.delays = best.matrix;
    cfg.policy = TimerPolicy::deterministic_distance(Rat(1), Rat(1000000));
    CHECK(run(cfg).responses == 1);
}

TEST_CASE("sweeps aggregate repetitions per topology and policy") {
    SweepSpec spec;
    spec.topologies = {{"near", uniform_delays(3, 50)}, {"far", uniform_delays(3, 500)}};
    spec.policies = {{"u", TimerPolicy::uniform_fixed({Interval{10, 400}, Interval{10, 400}},
                                                      Rat(1000000))}};
    spec.repetitions = 5;
    spec.seed = 3;
    auto rows = sweep(spec);
    REQUIRE(rows.size() == 2);
    for (const auto& r : rows) {
        CHECK(r.repetitions == 5);
        CHECK(r.recovered_runs == 5);
        CHECK(r.min_responses >= 1);
        CHECK(r.min_responses <= r.max_responses);
        CHECK(Rat(r.min_responses) <= r.mean_responses);
        CHECK(r.mean_responses <= Rat(r.max_responses));
        REQUIRE(r.mean_recovery);
    }
    // wide spacing outruns every timer window: everyone answers
    CHECK(rows[1].min_responses == 2);
    std::string table = sweep_table(rows);
    CHECK(table.find("near") != std::string::npos);
    CHECK(table.find("far") != std::string::npos);
}
