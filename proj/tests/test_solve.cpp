#include "tsm/solve.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>
#include <string>
#include <vector>

using namespace tsm;

namespace {

SymbolicTime v(const std::string& name, int coeff = 1) {
    return SymbolicTime::var(name, Rat(coeff));
}

LinearConstraint lt(SymbolicTime lhs, SymbolicTime rhs) {
    return LinearConstraint{std::move(lhs), std::move(rhs), true};
}

bool holds_with_margin(const LinearConstraint& c, const Assignment& a, const Rat& eps) {
    auto g = c.gap().eval(a);
    if (!g) return false;
    return c.strict ? *g >= eps : *g >= Rat(0);
}

} // namespace

TEST_CASE("contradictory bounds on one variable are infeasible") {
    ConstraintSystem sys;
    sys.constraints.push_back(lt(v("x"), SymbolicTime(Rat(5))));
    sys.constraints.push_back(lt(SymbolicTime(Rat(7)), v("x")));
    auto sol = solve_feasible(sys, Rat(1));
    CHECK(sol.status == Solution::Status::Infeasible);
    CHECK(sol.detail.find("x") != std::string::npos);
}

TEST_CASE("an empty system is feasible") {
    ConstraintSystem sys;
    auto sol = solve_feasible(sys, Rat(1));
    CHECK(sol.status == Solution::Status::Feasible);
}

TEST_CASE("auto-declared variables respect the default open lower bound") {
    ConstraintSystem sys;
    sys.constraints.push_back(lt(v("x"), SymbolicTime(Rat(3))));
    auto sol = solve_feasible(sys, Rat(1));
    REQUIRE(sol.status == Solution::Status::Feasible);
    const Rat& x = sol.assignment.at("x");
    CHECK(x > Rat(0));
    CHECK(x <= Rat(2)); // 3 minus the margin
}

TEST_CASE("fixed values participate without becoming unknowns") {
    ConstraintSystem sys;
    sys.fixed["d_Q_1"] = Rat(100);
    sys.constraints.push_back(lt(SymbolicTime(Rat(99)), v("d_Q_1")));

    auto sol = solve_feasible(sys, Rat(1));
    REQUIRE(sol.status == Solution::Status::Feasible);
    CHECK(sol.assignment.at("d_Q_1") == Rat(100));

    sys.constraints.push_back(lt(v("d_Q_1"), SymbolicTime(Rat(100))));
    auto bad = solve_feasible(sys, Rat(1));
    CHECK(bad.status == Solution::Status::Infeasible);
}

TEST_CASE("declared upper bounds cut the feasible region") {
    ConstraintSystem sys;
    sys.vars.push_back(VarDecl{"x", Rat(0), true, Rat(10)});
    sys.constraints.push_back(lt(SymbolicTime(Rat(20)), v("x")));
    auto sol = solve_feasible(sys, Rat(1));
    CHECK(sol.status == Solution::Status::Infeasible);
}

TEST_CASE("planted systems always come back feasible with the full margin") {
    std::mt19937 rng(7);
    auto rnd = [&](int lo, int hi) { return int(lo + rng() % unsigned(hi - lo + 1)); };
    for (int t = 0; t < 100; ++t) {
        int nv = rnd(1, 4);
        std::vector<std::string> names;
        Assignment planted;
        for (int i = 0; i < nv; ++i) {
            names.push_back("x" + std::to_string(i));
            planted[names.back()] = Rat(rnd(1, 50));
        }
        ConstraintSystem sys;
        int m = rnd(1, 6);
        for (int c = 0; c < m; ++c) {
            SymbolicTime lhs, rhs;
            for (int i = 0; i < nv; ++i) {
                int cl = rnd(-3, 3);
                int cr = rnd(-3, 3);
                if (cl != 0) lhs += v(names[i], cl);
                if (cr != 0) rhs += v(names[i], cr);
            }
            Rat l = *lhs.eval(planted);
            Rat r = *rhs.eval(planted);
            rhs += SymbolicTime(l - r + Rat(rnd(1, 10)));
            sys.constraints.push_back(lt(lhs, rhs));
        }
        auto sol = solve_feasible(sys, Rat(1));
        REQUIRE(sol.status == Solution::Status::Feasible);
        for (const auto& c : sys.constraints) {
            INFO("system ", t, ": ", c.str());
            CHECK(holds_with_margin(c, sol.assignment, Rat(1)));
        }
    }
}

TEST_CASE("strict cycles are reported infeasible") {
    std::mt19937 rng(11);
    auto rnd = [&](int lo, int hi) { return int(lo + rng() % unsigned(hi - lo + 1)); };
    for (int t = 0; t < 50; ++t) {
        int k = rnd(2, 4);
        ConstraintSystem sys;
        for (int i = 0; i < k; ++i) {
            std::string a = "x" + std::to_string(i);
            std::string b = "x" + std::to_string((i + 1) % k);
            sys.constraints.push_back(lt(v(a), v(b)));
        }
        // benign extras must not rescue the cycle
        for (int e = rnd(0, 3); e > 0; --e)
            sys.constraints.push_back(lt(v("x0"), SymbolicTime(Rat(rnd(100, 200)))));
        auto sol = solve_feasible(sys, Rat(1));
        CHECK(sol.status == Solution::Status::Infeasible);
    }
}

TEST_CASE("largest feasible subset matches exhaustive enumeration") {
    std::mt19937 rng(23);
    auto rnd = [&](int lo, int hi) { return int(lo + rng() % unsigned(hi - lo + 1)); };
    const Rat eps(1);
    for (int t = 0; t < 25; ++t) {
        int nv = rnd(1, 3);
        int m = rnd(1, 6);
        ConstraintSystem sys;
        for (int c = 0; c < m; ++c) {
            std::string a = "x" + std::to_string(rnd(0, nv - 1));
            switch (rnd(0, 2)) {
            case 0: sys.constraints.push_back(lt(v(a), SymbolicTime(Rat(rnd(1, 30))))); break;
            case 1: sys.constraints.push_back(lt(SymbolicTime(Rat(rnd(1, 30))), v(a))); break;
            default: {
                std::string b = "x" + std::to_string(rnd(0, nv - 1));
                SymbolicTime rhs = v(b);
                rhs += SymbolicTime(Rat(rnd(-20, 20)));
                sys.constraints.push_back(lt(v(a), rhs));
                break;
            }
            }
        }

        auto feasible = [&](const std::vector<std::size_t>& idx) {
            ConstraintSystem sub = sys;
            sub.constraints.clear();
            for (auto i : idx) sub.constraints.push_back(sys.constraints[i]);
            return solve_feasible(sub, eps).status == Solution::Status::Feasible;
        };
        std::vector<std::size_t> best;
        bool have = false;
        for (unsigned mask = 0; mask < (1u << m); ++mask) {
            std::vector<std::size_t> kept;
            for (int i = 0; i < m; ++i)
                if (mask & (1u << i)) kept.push_back(std::size_t(i));
            if (!feasible(kept)) continue;
            if (!have || kept.size() > best.size() ||
                (kept.size() == best.size() && kept < best)) {
                best = kept;
                have = true;
            }
        }

        auto sub = max_feasible_subset(sys, eps);
        INFO("system ", t);
        CHECK(sub.kept == best);
        CHECK(sub.solution.status == Solution::Status::Feasible);
        for (auto i : sub.kept) CHECK(holds_with_margin(sys.constraints[i], sub.solution.assignment, eps));
    }
}

TEST_CASE("system text round-trips byte for byte") {
    ConstraintSystem sys;
    sys.vars.push_back(VarDecl{"d_1_2", Rat(0), true, std::nullopt});
    sys.vars.push_back(VarDecl{"Exp_1", Rat(5), false, Rat(500)});
    sys.fixed["d_Q_1"] = Rat(100);
    sys.constraints.push_back(lt(SymbolicTime(Rat(300)), v("d_1_2")));
    SymbolicTime rhs = v("Exp_1");
    rhs += SymbolicTime(Rat(-3, 2));
    sys.constraints.push_back(LinearConstraint{v("d_1_2"), rhs, false});

    std::string text = sys.serialize();
    auto p = parse_constraint_system(text);
    REQUIRE(p.system);
    CHECK(p.error.empty());
    CHECK(*p.system == sys);
    CHECK(p.system->serialize() == text);
}

TEST_CASE("parse failures carry the offending line number") {
    auto bad_header = parse_constraint_system("nonsense v9\nend\n");
    CHECK_FALSE(bad_header.system);
    CHECK(bad_header.line == 1);
    CHECK_FALSE(bad_header.error.empty());

    std::string text = "constraint-system v1\nsubject-to\n300 <\nend\n";
    auto bad_row = parse_constraint_system(text);
    CHECK_FALSE(bad_row.system);
    CHECK(bad_row.line == 3);
}

TEST_CASE("link substitution expands path delays and keeps fixed legs") {
    LinkTopology topo;
    topo.node_count = 3;
    topo.links["a"] = Rat(0);
    topo.links["b"] = Rat(0);
    topo.paths[{1, 2}] = {"a", "b"};

    ConstraintSystem sys;
    sys.fixed["d_Q_1"] = Rat(100);
    SymbolicTime rhs = v("d_1_2");
    rhs += v("d_Q_1");
    sys.constraints.push_back(lt(SymbolicTime(Rat(300)), rhs));

    auto r = substitute_link_delays(sys, topo);
    REQUIRE(r.system);
    REQUIRE(r.system->constraints.size() == 1);
    std::string s = r.system->constraints[0].str();
    CHECK(s.find(link_var("a")) != std::string::npos);
    CHECK(s.find(link_var("b")) != std::string::npos);
    CHECK(s.find("d_1_2") == std::string::npos); // expanded away
    CHECK(s.find("d_Q_1") != std::string::npos); // fixed leg untouched

    ConstraintSystem missing;
    missing.constraints.push_back(lt(SymbolicTime(Rat(1)), v("d_2_1")));
    auto bad = substitute_link_delays(missing, topo);
    CHECK_FALSE(bad.system);
    CHECK(bad.error.find("d_2_1") != std::string::npos);

    LinkTopology broken = topo;
    broken.paths[{1, 2}] = {"a", "zz"};
    ConstraintSystem again;
    again.constraints.push_back(lt(SymbolicTime(Rat(1)), v("d_1_2")));
    auto unknown = substitute_link_delays(again, broken);
    CHECK_FALSE(unknown.system);
    CHECK(unknown.error.find("zz") != std::string::npos);
}

// ==== mode-level synthesis =====================================================

TEST_CASE("worst mode separates interval timer windows pair by pair") {
    TopologySynthOptions opt;
    opt.responders = 3;
    opt.mode = Mode::Worst;
    opt.timers.kind = TimerSpec::Kind::Intervals;
    opt.timers.intervals = {Interval{100, 200}, Interval{200, 400}, Interval{200, 400}};

    auto r = synthesize_topology(opt);
    REQUIRE(r.status == TopologySynthResult::Status::Absolute);

    std::vector<std::string> got;
    for (const auto& c : r.system.constraints) got.push_back(c.display_str());
    std::sort(got.begin(), got.end());
    std::vector<std::string> want = {"200 < d_2_3", "300 < d_1_2", "300 < d_1_3"};
    CHECK(got == want);

    // witness margins and the matrix agree with the constraints
    CHECK(r.matrix.at(1, 2) > Rat(300));
    CHECK(r.matrix.at(1, 3) > Rat(300));
    CHECK(r.matrix.at(2, 3) > Rat(200));
    CHECK(r.matrix.at(2, 1) == r.matrix.at(1, 2));
    CHECK(r.matrix.at(0, 1) == Rat(100));
    CHECK(r.matrix.at(1, 0) == Rat(100));
    CHECK(validate(r.matrix).empty());
    for (const auto& c : r.system.constraints)
        CHECK(holds_with_margin(c, r.solution.assignment, Rat(1)));
}

TEST_CASE("worst mode with distance timers separates every pair the same way") {
    TopologySynthOptions opt;
    opt.responders = 3;
    opt.mode = Mode::Worst;
    opt.timers.kind = TimerSpec::Kind::Distance;
    opt.timers.c1 = 1;
    opt.timers.c2 = 1;

    auto r = synthesize_topology(opt);
    REQUIRE(r.status == TopologySynthResult::Status::Absolute);

    std::vector<std::string> got;
    for (const auto& c : r.system.constraints) got.push_back(c.display_str());
    std::sort(got.begin(), got.end());
    std::vector<std::string> want = {"100 < d_1_2", "100 < d_1_3", "100 < d_2_3"};
    CHECK(got == want);
}

TEST_CASE("best mode with overlapping uniform windows degrades to a maximal subset") {
    TopologySynthOptions opt;
    opt.responders = 3;
    opt.mode = Mode::Best;
    opt.timers.kind = TimerSpec::Kind::Intervals;
    opt.timers.intervals = {Interval{100, 200}, Interval{100, 200}, Interval{100, 200}};

    auto r = synthesize_topology(opt);
    CHECK(r.status == TopologySynthResult::Status::Maximal);
    CHECK_FALSE(r.dropped.empty());
    CHECK_FALSE(r.note.empty());
    CHECK(validate(r.matrix).empty());
}

TEST_CASE("best mode with distance timers suppresses absolutely") {
    TopologySynthOptions opt;
    opt.responders = 3;
    opt.mode = Mode::Best;
    opt.timers.kind = TimerSpec::Kind::Distance;
    opt.timers.c1 = 1;
    opt.timers.c2 = 0;

    auto r = synthesize_topology(opt);
    REQUIRE(r.status == TopologySynthResult::Status::Absolute);
    CHECK(r.dropped.empty());
    CHECK(validate(r.matrix).empty());
    for (const auto& c : r.system.constraints)
        CHECK(holds_with_margin(c, r.solution.assignment, Rat(1)));
}

// ==== timer synthesis ==========================================================

TEST_CASE("uniform delay bands collapse to one generic separation") {
    TimerConfigOptions opt;
    opt.responders = 2;
    opt.mode = Mode::Worst;

    opt.uniform = Interval{2, 200};
    auto r = configure_timers(opt);
    REQUIRE(r.feasible);
    CHECK(r.generic == "Exp_i < Exp_j - 196");
    for (const auto& c : r.conditions) CHECK(holds_with_margin(c, r.witness, Rat(1)));

    opt.uniform = Interval{5, 50};
    auto r2 = configure_timers(opt);
    REQUIRE(r2.feasible);
    CHECK(r2.generic == "Exp_i < Exp_j - 40"); // 2*lo - hi
    for (const auto& c : r2.conditions) CHECK(holds_with_margin(c, r2.witness, Rat(1)));

    // bounds scale with the delays
    opt.uniform = Interval{20, 2000};
    CHECK(configure_timers(opt).generic == "Exp_i < Exp_j - 1960");
}

TEST_CASE("exact delays give both ordered separations") {
    DelayMatrix d(3);
    for (NodeId i = 0; i < 3; ++i)
        for (NodeId j = 0; j < 3; ++j)
            if (i != j) d.set(i, j, Rat(100));
    d.set(0, 1, Rat(10));
    d.set(0, 2, Rat(20));
    d.set(1, 2, Rat(5));
    d.set(2, 1, Rat(7));

    TimerConfigOptions opt;
    opt.responders = 2;
    opt.mode = Mode::Worst;
    opt.exact = d;

    auto r = configure_timers(opt);
    REQUIRE(r.feasible);
    std::vector<std::string> got;
    for (const auto& c : r.conditions) got.push_back(c.display_str());
    std::sort(got.begin(), got.end());
    // arrival of j's response at i must trail i's expiry: Exp_i < Exp_j + dQj - dQi + d_j_i
    std::vector<std::string> want = {"Exp_1 < Exp_2 + 17", "Exp_2 < Exp_1 - 5"};
    CHECK(got == want);
    for (const auto& c : r.conditions) CHECK(holds_with_margin(c, r.witness, Rat(1)));
}

TEST_CASE("best mode timers put the survivor strictly first") {
    DelayMatrix d(3);
    for (NodeId i = 0; i < 3; ++i)
        for (NodeId j = 0; j < 3; ++j)
            if (i != j) d.set(i, j, Rat(100));

    TimerConfigOptions opt;
    opt.responders = 2;
    opt.mode = Mode::Best;
    opt.exact = d;
    opt.exp_cap = Rat(10000);

    auto r = configure_timers(opt);
    REQUIRE(r.feasible);
    REQUIRE_FALSE(r.conditions.empty());
    for (const auto& c : r.conditions) CHECK(holds_with_margin(c, r.witness, Rat(1)));
    CHECK(r.witness.at("Exp_1") < r.witness.at("Exp_2"));
}
