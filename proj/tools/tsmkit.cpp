// tsmkit: synthesize suppression scenarios, configure timers, simulate, and
// re-verify stored scenario files.
//
// Exit codes: 0 success, 1 usage or input parse failure, 2 infeasible
// synthesis, 3 verification failure.

#include "tsm/scenario.hpp"
#include "tsm/sim.hpp"
#include "tsm/solve.hpp"
#include "tsm/synth.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

using namespace tsm;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitVerify = 3;

struct TimerSpecParse {
    std::optional<TimerSpec> spec;
    std::string error;
};

// Accepted forms:
//   wb-fixed                first responder [100,200], the rest [200,400]
//   uniform:lo,hi           one shared draw interval
//   distance:c1[,c2]        distance-derived, deterministic when c2 absent
//   fixed:v1,v2,...         one exact value per responder
//   interval:lo1,hi1;...    one interval per responder
TimerSpecParse parse_timer_spec(const std::string& text, std::size_t responders) {
    TimerSpecParse out;
    auto fail = [&](const std::string& m) {
        out.error = m;
        return out;
    };
    auto split = [](const std::string& s, char sep) {
        std::vector<std::string> parts;
        std::string cur;
        for (char c : s) {
            if (c == sep) {
                parts.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        parts.push_back(cur);
        return parts;
    };

    TimerSpec spec;
    if (text == "wb-fixed") {
        spec.kind = TimerSpec::Kind::Intervals;
        for (std::size_t i = 1; i <= responders; ++i)
            spec.intervals.push_back(i == 1 ? Interval{100, 200} : Interval{200, 400});
        out.spec = std::move(spec);
        return out;
    }
    auto colon = text.find(':');
    if (colon == std::string::npos) return fail("unrecognized timer spec: " + text);
    std::string head = text.substr(0, colon), body = text.substr(colon + 1);
    if (head == "uniform") {
        auto parts = split(body, ',');
        if (parts.size() != 2) return fail("uniform needs lo,hi");
        auto lo = parse_rat(parts[0]), hi = parse_rat(parts[1]);
        if (!lo || !hi || *lo > *hi) return fail("bad uniform bounds: " + body);
        spec.kind = TimerSpec::Kind::Intervals;
        spec.intervals.assign(responders, Interval{*lo, *hi});
    } else if (head == "distance") {
        auto parts = split(body, ',');
        if (parts.empty() || parts.size() > 2) return fail("distance needs c1[,c2]");
        auto c1 = parse_rat(parts[0]);
        if (!c1 || *c1 <= 0) return fail("bad distance factor: " + parts[0]);
        spec.kind = TimerSpec::Kind::Distance;
        spec.c1 = *c1;
        if (parts.size() == 2) {
            auto c2 = parse_rat(parts[1]);
            if (!c2 || *c2 < 0) return fail("bad distance width: " + parts[1]);
            spec.c2 = *c2;
        }
    } else if (head == "fixed") {
        auto parts = split(body, ',');
        if (parts.size() != responders) return fail("fixed needs one value per responder");
        spec.kind = TimerSpec::Kind::Scalars;
        for (const auto& p : parts) {
            auto v = parse_rat(p);
            if (!v || *v <= 0) return fail("bad timer value: " + p);
            spec.scalars.push_back(*v);
        }
    } else if (head == "interval") {
        auto groups = split(body, ';');
        if (groups.size() != responders) return fail("interval needs one pair per responder");
        spec.kind = TimerSpec::Kind::Intervals;
        for (const auto& g : groups) {
            auto parts = split(g, ',');
            if (parts.size() != 2) return fail("interval pair needs lo,hi");
            auto lo = parse_rat(parts[0]), hi = parse_rat(parts[1]);
            if (!lo || !hi || *lo > *hi) return fail("bad interval pair: " + g);
            spec.intervals.push_back(Interval{*lo, *hi});
        }
    } else {
        return fail("unrecognized timer spec: " + text);
    }
    out.spec = std::move(spec);
    return out;
}

// The simulation policy matching a synthesis-time timer spec.
TimerPolicy policy_for_spec(const TimerSpec& spec, const Rat& exp_q) {
    switch (spec.kind) {
    case TimerSpec::Kind::Scalars: {
        std::vector<Interval> ivs;
        for (const auto& v : spec.scalars) ivs.push_back(Interval::point(v));
        return TimerPolicy::uniform_fixed(std::move(ivs), exp_q);
    }
    case TimerSpec::Kind::Intervals:
        return TimerPolicy::uniform_fixed(spec.intervals, exp_q);
    case TimerSpec::Kind::Distance:
        if (spec.c2 == 0) return TimerPolicy::deterministic_distance(spec.c1, exp_q);
        return TimerPolicy::uniform_distance(spec.c1, spec.c2, exp_q);
    }
    return {};
}

int write_output(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return 0;
    }
    std::ofstream f(out_path);
    if (!f) {
        std::cerr << "cannot open " << out_path << " for writing\n";
        return kExitUsage;
    }
    f << text;
    return 0;
}

std::optional<Scenario> load_scenario(const std::string& path) {
    std::ifstream f(path);
    if (!f) {
        std::cerr << "cannot read " << path << "\n";
        return std::nullopt;
    }
    std::ostringstream buf;
    buf << f.rdbuf();
    auto parsed = parse_scenario(buf.str());
    if (!parsed.scenario) {
        std::cerr << path << ":" << parsed.line << ": " << parsed.error << "\n";
        return std::nullopt;
    }
    return parsed.scenario;
}

// --- synth-topology ---------------------------------------------------------

int cmd_synth_topology(std::size_t n, const std::string& mode_s, const std::string& timers_s,
                       NodeId survivor, const std::string& pin_s, const std::string& defdelay_s,
                       const std::string& eps_s, const std::string& expq_s,
                       const std::string& out_path) {
    auto pin = parse_rat(pin_s);
    auto defdelay = parse_rat(defdelay_s);
    auto eps = parse_rat(eps_s);
    auto expq = parse_rat(expq_s);
    if (!pin || !defdelay || !eps || !expq || *pin <= 0 || *defdelay <= 0 || *eps <= 0 ||
        *expq <= 0) {
        std::cerr << "pin, default delay, epsilon and request timer must be positive rationals\n";
        return kExitUsage;
    }
    auto ts = parse_timer_spec(timers_s, n);
    if (!ts.spec) {
        std::cerr << ts.error << "\n";
        return kExitUsage;
    }

    TopologySynthOptions opt;
    opt.responders = n;
    opt.mode = mode_s == "best" ? Mode::Best : Mode::Worst;
    opt.timers = *ts.spec;
    opt.pin_requester_delay = *pin;
    opt.default_delay = *defdelay;
    opt.epsilon = *eps;
    opt.survivor = survivor;

    TopologySynthResult res = synthesize_topology(opt);
    if (res.status == TopologySynthResult::Status::Infeasible) {
        std::cerr << "infeasible: " << res.note << "\n";
        return kExitInfeasible;
    }
    if (res.status == TopologySynthResult::Status::Maximal)
        std::cerr << "warning: " << res.note << "\n";

    Scenario sc;
    sc.responders = n;
    sc.mode = opt.mode;
    sc.solver = res.status == TopologySynthResult::Status::Maximal ? SolverStatus::Maximal
                                                                   : SolverStatus::Absolute;
    sc.epsilon = *eps;
    sc.survivor = survivor;
    sc.max_rounds = 1;
    sc.policy = policy_for_spec(*ts.spec, *expq);
    sc.delays = res.matrix;
    if (res.status == TopologySynthResult::Status::Maximal) {
        // Only the kept subset holds, so the response count is not provable.
        sc.system.vars = res.system.vars;
        sc.system.fixed = res.system.fixed;
        for (std::size_t i = 0; i < res.system.constraints.size(); ++i) {
            if (std::find(res.dropped.begin(), res.dropped.end(), i) == res.dropped.end())
                sc.system.constraints.push_back(res.system.constraints[i]);
        }
    } else {
        sc.claim_responses = opt.mode == Mode::Worst ? int(n) : 1;
        sc.system = res.system;
    }
    return write_output(serialize_scenario(sc), out_path);
}

// --- config-timers ----------------------------------------------------------

int cmd_config_timers(std::size_t n, const std::string& mode_s, const std::string& lo_s,
                      const std::string& hi_s, const std::string& scenario_path,
                      const std::string& cap_s, const std::string& eps_s, NodeId survivor) {
    TimerConfigOptions opt;
    opt.responders = n;
    opt.mode = mode_s == "best" ? Mode::Best : Mode::Worst;
    opt.survivor = survivor;
    auto eps = parse_rat(eps_s);
    if (!eps || *eps <= 0) {
        std::cerr << "epsilon must be a positive rational\n";
        return kExitUsage;
    }
    opt.epsilon = *eps;
    if (!cap_s.empty()) {
        auto cap = parse_rat(cap_s);
        if (!cap || *cap <= 0) {
            std::cerr << "bad timer cap: " << cap_s << "\n";
            return kExitUsage;
        }
        opt.exp_cap = *cap;
    }
    if (!scenario_path.empty()) {
        auto sc = load_scenario(scenario_path);
        if (!sc) return kExitUsage;
        if (sc->responders != n && n != 0) {
            std::cerr << "scenario has " << sc->responders << " responders\n";
            return kExitUsage;
        }
        opt.responders = sc->responders;
        opt.exact = sc->delays;
    } else {
        auto lo = parse_rat(lo_s), hi = parse_rat(hi_s);
        if (!lo || !hi || *lo <= 0 || *lo > *hi) {
            std::cerr << "need 0 < delay-lo <= delay-hi\n";
            return kExitUsage;
        }
        opt.uniform = Interval{*lo, *hi};
    }

    TimerConfigResult res = configure_timers(opt);
    if (!res.generic.empty()) std::cout << "condition " << res.generic << "\n";
    for (const auto& c : res.conditions) std::cout << "require " << c.display_str() << "\n";
    if (!res.feasible) {
        std::cerr << "infeasible: " << res.detail << "\n";
        return kExitInfeasible;
    }
    for (const auto& [name, value] : res.witness)
        std::cout << "witness " << name << " = " << rat_str(value) << "\n";
    return 0;
}

// --- synth-response ---------------------------------------------------------

int cmd_synth_response(std::size_t n, int max_rounds, NodeId survivor, bool no_loss,
                       const std::string& eps_s, const std::string& out_path) {
    auto eps = parse_rat(eps_s);
    if (!eps || *eps <= 0) {
        std::cerr << "epsilon must be a positive rational\n";
        return kExitUsage;
    }
    ProtocolModel model = build_tsm(n);
    ResponseTimeOptions opt;
    opt.responders = n;
    opt.max_rounds = max_rounds;
    opt.survivor = survivor;
    opt.allow_loss = !no_loss;
    ResponseTimeResult res = synthesize_response_time(model, opt);
    if (!res.ok) {
        std::cerr << "infeasible: " << res.note << "\n";
        return kExitInfeasible;
    }

    // Solve the side constraints for concrete delays and timer values, so
    // the stored scenario simulates exactly as predicted.
    ConstraintSystem sys;
    sys.constraints = res.verification.side_constraints;
    Solution sol = solve_feasible(sys, *eps);
    if (sol.status != Solution::Status::Feasible) {
        std::cerr << "infeasible: " << sol.detail << "\n";
        return kExitInfeasible;
    }
    auto value_or = [&](const std::string& v, Rat fallback) {
        auto it = sol.assignment.find(v);
        return it == sol.assignment.end() ? std::move(fallback) : it->second;
    };

    Scenario sc;
    sc.responders = n;
    sc.mode = Mode::Best;
    sc.epsilon = *eps;
    sc.survivor = survivor;
    sc.max_rounds = res.rounds;
    sc.losses = res.losses;
    sc.claim_recovery = res.response_time;
    sc.system = std::move(sys);
    sc.sequence = res.verification.completed;

    DelayMatrix mat(n + 1);
    for (NodeId i = 0; i <= n; ++i)
        for (NodeId j = 0; j <= n; ++j)
            if (i != j) mat.set(i, j, value_or(delay_var(i, j), Rat(100)));
    sc.delays = std::move(mat);

    std::vector<Interval> exps;
    for (NodeId i = 1; i <= n; ++i)
        exps.push_back(Interval::point(value_or(exp_var(i), Rat(100))));
    sc.policy = TimerPolicy::uniform_fixed(std::move(exps), value_or(exp_var(0), Rat(1000000)));

    std::cerr << "rounds " << res.rounds << "\n";
    std::cerr << "recovery " << res.response_time.display_str() << "\n";
    return write_output(serialize_scenario(sc), out_path);
}

// --- simulate / verify -------------------------------------------------------

int cmd_simulate(const std::string& scenario_path, std::uint64_t seed, bool seed_set,
                 int max_rounds, bool rounds_set) {
    auto sc = load_scenario(scenario_path);
    if (!sc) return kExitUsage;
    SimConfig cfg{sc->delays, sc->policy, seed_set ? seed : sc->seed, sc->losses,
                  rounds_set ? max_rounds : sc->max_rounds};
    Metrics m = run(cfg);
    std::cout << metrics_str(m) << "\n";
    std::cout << log_str(m.log);
    return 0;
}

int cmd_verify(const std::string& scenario_path) {
    auto sc = load_scenario(scenario_path);
    if (!sc) return kExitUsage;
    auto bad = verify_scenario(*sc);
    if (bad.empty()) {
        std::cout << "scenario verifies\n";
        return 0;
    }
    for (const auto& b : bad) std::cerr << "check failed: " << b << "\n";
    return kExitVerify;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"suppression-scenario synthesis and simulation"};
    app.require_subcommand(1);

    // synth-topology
    std::size_t n = 3;
    std::string mode = "worst", timers = "wb-fixed", pin = "100", defdelay = "100";
    std::string eps = "1", expq = "1000000", out_path;
    NodeId survivor = 1;
    auto* st = app.add_subcommand("synth-topology", "solve for a delay matrix");
    st->add_option("--n", n, "responder count")->required();
    st->add_option("--mode", mode)->check(CLI::IsMember({"worst", "best"}));
    st->add_option("--timers", timers, "timer spec (wb-fixed, uniform:lo,hi, distance:c1[,c2], "
                                       "fixed:v1,..., interval:lo1,hi1;...)");
    st->add_option("--survivor", survivor);
    st->add_option("--pin-dq", pin, "requester leg delay");
    st->add_option("--default-delay", defdelay);
    st->add_option("--epsilon", eps);
    st->add_option("--exp-q", expq, "request timer duration");
    st->add_option("--out", out_path);

    // config-timers
    std::size_t ct_n = 2;
    std::string ct_mode = "worst", ct_lo, ct_hi, ct_scenario, ct_cap, ct_eps = "1";
    NodeId ct_survivor = 1;
    auto* ct = app.add_subcommand("config-timers", "solve for relative timer conditions");
    ct->add_option("--n", ct_n, "responder count");
    ct->add_option("--mode", ct_mode)->check(CLI::IsMember({"worst", "best"}));
    ct->add_option("--delay-lo", ct_lo, "delay interval lower bound");
    ct->add_option("--delay-hi", ct_hi, "delay interval upper bound");
    ct->add_option("--scenario", ct_scenario, "take exact delays from a scenario file");
    ct->add_option("--cap", ct_cap, "upper bound on every timer");
    ct->add_option("--epsilon", ct_eps);
    ct->add_option("--survivor", ct_survivor);

    // synth-response
    std::size_t sr_n = 1;
    int sr_rounds = 2;
    NodeId sr_survivor = 1;
    bool sr_no_loss = false;
    std::string sr_eps = "1", sr_out;
    auto* sr = app.add_subcommand("synth-response", "synthesize a longest-recovery scenario");
    sr->add_option("--n", sr_n, "responder count");
    sr->add_option("--max-rounds", sr_rounds);
    sr->add_option("--survivor", sr_survivor);
    sr->add_flag("--no-loss", sr_no_loss, "forbid selective losses (single round)");
    sr->add_option("--epsilon", sr_eps);
    sr->add_option("--out", sr_out);

    // simulate
    std::string sim_scenario;
    std::uint64_t sim_seed = 0;
    int sim_rounds = 1;
    auto* sim = app.add_subcommand("simulate", "run a stored scenario");
    sim->add_option("--scenario", sim_scenario)->required();
    auto* seed_opt = sim->add_option("--seed", sim_seed, "override the stored seed");
    auto* rounds_opt = sim->add_option("--max-rounds", sim_rounds, "override the stored bound");

    // verify
    std::string ver_scenario;
    auto* ver = app.add_subcommand("verify", "re-validate a stored scenario");
    ver->add_option("--scenario", ver_scenario)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    if (st->parsed())
        return cmd_synth_topology(n, mode, timers, survivor, pin, defdelay, eps, expq, out_path);
    if (ct->parsed())
        return cmd_config_timers(ct_n, ct_mode, ct_lo, ct_hi, ct_scenario, ct_cap, ct_eps,
                                 ct_survivor);
    if (sr->parsed())
        return cmd_synth_response(sr_n, sr_rounds, sr_survivor, sr_no_loss, sr_eps, sr_out);
    if (sim->parsed())
        return cmd_simulate(sim_scenario, sim_seed, seed_opt->count() > 0, sim_rounds,
                            rounds_opt->count() > 0);
    if (ver->parsed()) return cmd_verify(ver_scenario);
    return kExitUsage;
}
