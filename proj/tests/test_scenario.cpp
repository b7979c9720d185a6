#include "tsm/scenario.hpp"

#include "tsm/sim.hpp"

#include <doctest.h>

#include <string>

using namespace tsm;

namespace {

DelayMatrix uniform_delays(std::size_t nodes, const Rat& v) {
    DelayMatrix m(nodes);
    for (NodeId i = 0; i < nodes; ++i)
        for (NodeId j = 0; j < nodes; ++j)
            if (i != j) m.set(i, j, v);
    return m;
}

// A scenario whose claims and sequence come from an actual run, so it must
// verify cleanly.
Scenario consistent_scenario() {
    Scenario s;
    s.responders = 2;
    s.mode = Mode::Worst;
    s.solver = SolverStatus::Absolute;
    s.max_rounds = 1;
    s.seed = 7;
    s.delays = uniform_delays(3, 100);
    s.delays.set(1, 2, Rat(250));
    s.delays.set(2, 1, Rat(250));
    s.policy = TimerPolicy::uniform_fixed({Interval::point(Rat(40)), Interval::point(Rat(60))},
                                          Rat(1000000));

    s.system.declare(delay_var(1, 2));
    SymbolicTime lhs(Rat(200));
    s.system.constraints.push_back(
        LinearConstraint{lhs, SymbolicTime::var(delay_var(1, 2)), true});
    s.system.fixed[delay_var(0, 1)] = Rat(100);

    SimConfig cfg;
    cfg.delays = s.delays;
    cfg.policy = s.policy;
    cfg.seed = s.seed;
    cfg.max_rounds = s.max_rounds;
    Metrics m = run(cfg);
    s.claim_responses = m.responses;
    for (const auto& e : m.log) {
        ChainEvent ce;
        ce.kind = e.kind;
        ce.node = e.node;
        ce.peer = e.peer;
        ce.at = SymbolicTime(e.at);
        s.sequence.push_back(ce);
    }
    return s;
}

} // namespace

TEST_CASE("scenario files round-trip byte for byte") {
    Scenario s = consistent_scenario();
    s.losses.insert(LossKey{1, MessageClass::Response, 2});
    s.claim_recovery = SymbolicTime(Rat(140)); // d_Q_1 + Exp_1
    s.epsilon = Rat(2);
    s.survivor = 2;

    std::string text = serialize_scenario(s);
    auto p = parse_scenario(text);
    REQUIRE(p.scenario);
    CHECK(p.error.empty());
    CHECK(*p.scenario == s);
    CHECK(serialize_scenario(*p.scenario) == text);
}

TEST_CASE("parse failures name the offending line") {
    auto bad_header = parse_scenario("not-a-scenario\n");
    CHECK_FALSE(bad_header.scenario);
    CHECK(bad_header.line == 1);

    Scenario s = consistent_scenario();
    std::string text = serialize_scenario(s);
    // corrupt the loss clause specifically
    std::string broken = text;
    auto pos = broken.find("delays");
    broken.insert(pos, "loss one request 1\n");
    auto p = parse_scenario(broken);
    CHECK_FALSE(p.scenario);
    CHECK(p.line > 1);
    CHECK_FALSE(p.error.empty());
}

TEST_CASE("a consistent scenario verifies with no findings") {
    Scenario s = consistent_scenario();
    auto problems = verify_scenario(s);
    for (const auto& p : problems) INFO(p);
    CHECK(problems.empty());
}

TEST_CASE("a wrong response claim is called out") {
    Scenario s = consistent_scenario();
    s.claim_responses = *s.claim_responses + 1;
    auto problems = verify_scenario(s);
    REQUIRE_FALSE(problems.empty());
    CHECK(problems[0].find("claim") != std::string::npos);
}

TEST_CASE("delays violating a stored constraint are called out") {
    Scenario s = consistent_scenario();
    s.system.constraints.push_back(LinearConstraint{
        SymbolicTime(Rat(100000)), SymbolicTime::var(delay_var(1, 2)), true});
    auto problems = verify_scenario(s);
    REQUIRE_FALSE(problems.empty());
    CHECK(problems[0].find("constraint") != std::string::npos);
}

TEST_CASE("fixed values disagreeing with the matrix are called out") {
    Scenario s = consistent_scenario();
    s.system.fixed[delay_var(0, 1)] = Rat(999);
    auto problems = verify_scenario(s);
    REQUIRE_FALSE(problems.empty());
    CHECK(problems[0].find("disagrees") != std::string::npos);
}

TEST_CASE("a tampered sequence no longer matches the simulated log") {
    Scenario s = consistent_scenario();
    ChainEvent extra;
    extra.kind = StimulusKind::RespTx;
    extra.node = 2;
    extra.peer = 2;
    extra.at = SymbolicTime(Rat(12345));
    s.sequence.push_back(extra);
    auto problems = verify_scenario(s);
    REQUIRE_FALSE(problems.empty());
    CHECK(problems[0].find("sequence") != std::string::npos);
}

TEST_CASE("claims may use symbols carried by the policy and delays") {
    Scenario s = consistent_scenario();
    // recovery = d_Q_1 + Exp_1 + d_1_Q with the survivor answering first
    SymbolicTime rec = SymbolicTime::var(delay_var(0, 1));
    rec += SymbolicTime::var(exp_var(1));
    rec += SymbolicTime::var(delay_var(1, 0));
    s.claim_recovery = rec;
    auto problems = verify_scenario(s);
    for (const auto& p : problems) INFO(p);
    CHECK(problems.empty());

    // and a wrong symbolic claim fails
    s.claim_recovery = rec + SymbolicTime(Rat(1));
    CHECK_FALSE(verify_scenario(s).empty());
}
