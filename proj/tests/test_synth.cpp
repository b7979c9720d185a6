#include "tsm/synth.hpp"

#include "tsm/solve.hpp"

#include <doctest.h>

#include <algorithm>

using namespace tsm;

namespace {

bool has_constraint(const std::vector<LinearConstraint>& cs, const std::string& machine) {
    return std::any_of(cs.begin(), cs.end(),
                       [&](const LinearConstraint& c) { return c.str() == machine; });
}

std::vector<std::string> rule_names(const std::vector<std::string>& v) { return v; }

} // namespace

TEST_CASE("classifying around the response transmission splits the rule table") {
    ProtocolModel m = build_tsm(2);
    TargetEvent t{StimulusKind::RespTx, Objective::Maximize};
    auto c = classify_transitions(m, t);

    auto wanted = rule_names(c.wanted);
    // the expiry emits the response; the arming reception enables the expiry
    CHECK(std::find(wanted.begin(), wanted.end(), "res_tmr") != wanted.end());
    CHECK(std::find(wanted.begin(), wanted.end(), "rcv_req") != wanted.end());
    // hearing a response cancels the armed timer
    CHECK(std::find(c.unwanted.begin(), c.unwanted.end(), "rcv_res") != c.unwanted.end());
    CHECK(std::find(c.unwanted.begin(), c.unwanted.end(), "res_tmr") == c.unwanted.end());

    REQUIRE_FALSE(c.conditions.empty());
    CHECK(c.conditions[0].state == NodeState::RespArmed);
    CHECK(c.conditions[0].created_by == "rcv_req");
    CHECK(c.conditions[0].at == SymbolicTime::var(delay_var(0, 1)));
}

TEST_CASE("backward chains branch on the origin of the request transmission") {
    ProtocolModel m = build_tsm(1);
    auto chains = backward_search(m, Stimulus{StimulusKind::ReqRx, 1, 0}, 2);
    REQUIRE(chains.size() == 2);

    // fewest rounds first
    CHECK(chains[0].rounds == 1);
    CHECK(chains[1].rounds == 2);

    const auto& one = chains[0].events;
    REQUIRE(one.size() == 3);
    CHECK(one[0].kind == StimulusKind::Loss);
    CHECK(one[1].kind == StimulusKind::ReqTx);
    CHECK(one[2].kind == StimulusKind::ReqRx);
    CHECK(one[2].at == SymbolicTime::var(delay_var(0, 1)));

    const auto& two = chains[1].events;
    REQUIRE(two.size() == 5);
    CHECK(two[2].kind == StimulusKind::ReqTimer);
    CHECK(two[3].kind == StimulusKind::ReqTx);
    CHECK(two[3].round == 2);
    // second-round reception lands one full request period later
    SymbolicTime expect = SymbolicTime::var(exp_var(0));
    expect += SymbolicTime::var(delay_var(0, 1));
    CHECK(two[4].at == expect);
}

TEST_CASE("state chains justify an armed responder by its arming reception") {
    ProtocolModel m = build_tsm(2);
    auto chains = backward_search_state(m, 2, NodeState::RespArmed, 1);
    REQUIRE(chains.size() == 1);
    const auto& ev = chains[0].events;
    REQUIRE_FALSE(ev.empty());
    CHECK(ev.back().kind == StimulusKind::ReqRx);
    CHECK(ev.back().node == 2);

    CHECK(backward_search_state(m, 2, NodeState::RespIdle, 1).empty());
}

TEST_CASE("the two-round recovery chain carries the full period in its times") {
    ProtocolModel m = build_tsm(1);
    auto chains = backward_search(m, Stimulus{StimulusKind::RespRx, 0, 1}, 2);
    REQUIRE(chains.size() == 2);
    const Chain& deep = chains[1];
    CHECK(deep.rounds == 2);
    // Exp_Q + d_Q_1 + Exp_1 + d_1_Q at the final reception
    SymbolicTime expect = SymbolicTime::var(exp_var(0));
    expect += SymbolicTime::var(delay_var(0, 1));
    expect += SymbolicTime::var(exp_var(1));
    expect += SymbolicTime::var(delay_var(1, 0));
    CHECK(deep.events.back().at == expect);
}

TEST_CASE("forward replay accepts the lossy chain and rejects the lossless one") {
    ProtocolModel m = build_tsm(1);
    auto chains = backward_search(m, Stimulus{StimulusKind::RespRx, 0, 1}, 2);
    REQUIRE(chains.size() == 2);
    const Chain& deep = chains[1];

    LossPattern losses{LossKey{1, MessageClass::Response, 0}};
    auto good = forward_verify(m, deep, losses, 2);
    CHECK(good.accepted);
    CHECK(good.completed.size() >= deep.events.size());

    auto bad = forward_verify(m, deep, {}, 2);
    CHECK_FALSE(bad.accepted);
    CHECK(bad.reason.find("already recovered") != std::string::npos);
}

TEST_CASE("replay constraints quiesce the round before the retransmission") {
    ProtocolModel m = build_tsm(1);
    auto chains = backward_search(m, Stimulus{StimulusKind::RespRx, 0, 1}, 2);
    const Chain& deep = chains[1];
    LossPattern losses{LossKey{1, MessageClass::Response, 0}};
    auto v = forward_verify(m, deep, losses, 2);
    REQUIRE(v.accepted);
    // the round-1 request must land before the retransmission fires, and the
    // round-1 answer must be sent (and lost) before it as well
    CHECK(has_constraint(v.side_constraints, "1*d_Q_1 < 1*Exp_Q"));
    CHECK(has_constraint(v.side_constraints, "1*Exp_1 + 1*d_Q_1 < 1*Exp_Q"));
    // no constraint may compare a term against itself
    for (const auto& c : v.side_constraints) CHECK(c.lhs.str() != c.rhs.str());
}

TEST_CASE("overhead constraint groups cover every responder pair") {
    auto worst = formulate_overhead_constraints(3, Mode::Worst);
    REQUIRE(worst.size() == 6); // one group per ordered pair
    for (const auto& g : worst) {
        CHECK(g.i != g.j);
        // either i answers first or j's response passes before i arms
        REQUIRE(g.alternatives.size() == 2);
        for (const auto& alt : g.alternatives) CHECK(alt.size() == 1);
    }

    auto best = formulate_overhead_constraints(3, Mode::Best, 2);
    // every non-survivor pairs with the survivor
    REQUIRE(best.size() == 2);
    for (const auto& g : best) CHECK((g.i == 2 || g.j == 2));

    CHECK_THROWS_AS(formulate_overhead_constraints(0, Mode::Worst), std::invalid_argument);
    CHECK_THROWS_AS(formulate_overhead_constraints(2, Mode::Best, 5), std::invalid_argument);
}

TEST_CASE("the synthesized longest recovery needs exactly two rounds") {
    ProtocolModel m = build_tsm(1);
    ResponseTimeOptions opt;
    opt.responders = 1;
    opt.max_rounds = 2;
    auto r = synthesize_response_time(m, opt);
    REQUIRE(r.ok);
    CHECK(r.rounds == 2);
    CHECK(r.losses == LossPattern{LossKey{1, MessageClass::Response, 0}});

    SymbolicTime expect = SymbolicTime::var(exp_var(0));
    expect += SymbolicTime::var(delay_var(0, 1));
    expect += SymbolicTime::var(exp_var(1));
    expect += SymbolicTime::var(delay_var(1, 0));
    CHECK(r.response_time == expect);

    REQUIRE(r.verification.accepted);
    CHECK(has_constraint(r.verification.side_constraints, "1*d_Q_1 < 1*Exp_Q"));

    // the side constraints admit a solution, and under it the recovery really
    // takes the claimed symbolic value (checked numerically by the sim tests)
    ConstraintSystem sys;
    sys.constraints = r.verification.side_constraints;
    auto sol = solve_feasible(sys, Rat(1));
    CHECK(sol.status == Solution::Status::Feasible);
}

TEST_CASE("forbidding losses caps the recovery at one round") {
    ProtocolModel m = build_tsm(1);
    ResponseTimeOptions opt;
    opt.responders = 1;
    opt.max_rounds = 2;
    opt.allow_loss = false;
    auto r = synthesize_response_time(m, opt);
    REQUIRE(r.ok);
    CHECK(r.rounds == 1);
    CHECK(r.losses.empty());
    SymbolicTime expect = SymbolicTime::var(delay_var(0, 1));
    expect += SymbolicTime::var(exp_var(1));
    expect += SymbolicTime::var(delay_var(1, 0));
    CHECK(r.response_time == expect);
}

TEST_CASE("value hints prune chains their intervals cannot order") {
    ProtocolModel m = build_tsm(1);
    ResponseTimeOptions opt;
    opt.responders = 1;
    opt.max_rounds = 2;
    // a request period far above everything else admits the two-round chain
    opt.value_hints[exp_var(0)] = Interval{1000, 2000};
    opt.value_hints[exp_var(1)] = Interval{10, 20};
    opt.value_hints[delay_var(0, 1)] = Interval{50, 60};
    opt.value_hints[delay_var(1, 0)] = Interval{50, 60};
    auto deep = synthesize_response_time(m, opt);
    REQUIRE(deep.ok);
    CHECK(deep.rounds == 2);

    // a request period always beaten by the answer forbids the second round
    opt.value_hints[exp_var(0)] = Interval{1, 2};
    auto shallow = synthesize_response_time(m, opt);
    REQUIRE(shallow.ok);
    CHECK(shallow.rounds == 1);
}

// ==== interval branching =======================================================

TEST_CASE("branch expansion mirrors the interval order sets") {
    std::vector<PendingItem> pending = {{"Exp_1", Interval{3, 5}}, {"d_1_2", Interval{4, 6}}};
    auto branches = expand_branches(pending, false);
    REQUIRE(branches.size() == 2); // either may resolve first; the tie folds in
    for (const auto& b : branches) {
        CHECK(b.tied.empty());
        REQUIRE(b.remaining.size() == 1);
        REQUIRE(b.conditions.size() == 1);
    }
    CHECK(branches[0].winner == 0);
    CHECK(branches[0].conditions[0] == "Exp_1 < d_1_2");
    // the loser keeps waiting for the leftover window
    CHECK(branches[0].remaining[0].value == Interval{0, 3});
    CHECK(branches[1].winner == 1);
    CHECK(branches[1].conditions[0] == "d_1_2 < Exp_1");

    // disjoint intervals leave a single order
    std::vector<PendingItem> forced = {{"a", Interval{1, 2}}, {"b", Interval{5, 9}}};
    CHECK(expand_branches(forced, false).size() == 1);
}

TEST_CASE("a backward step widens a timer to its full elapsed window") {
    CHECK(backward_start_window(Interval{100, 200}) == Interval{0, 200});
    CHECK(backward_start_window(Interval::point(Rat(50))) == Interval{0, 50});
}
