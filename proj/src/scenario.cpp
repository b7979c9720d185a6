#include "tsm/scenario.hpp"

#include "tsm/sim.hpp"

#include <algorithm>
#include <sstream>

namespace tsm {

namespace {

const char* kHeader = "tsmkit-scenario v1";

std::string mode_label(Mode m) { return m == Mode::Worst ? "worst" : "best"; }
std::string solver_label(SolverStatus s) {
    return s == SolverStatus::Absolute ? "absolute" : "maximal";
}
std::string class_label(MessageClass c) {
    return c == MessageClass::Request ? "request" : "response";
}

std::string event_peer(const ChainEvent& e) {
    if (e.kind == StimulusKind::ReqRx || e.kind == StimulusKind::RespRx)
        return node_name(e.peer);
    return "-";
}

} // namespace

std::string serialize_scenario(const Scenario& s) {
    std::ostringstream os;
    os << kHeader << "\n";
    os << "responders " << s.responders << "\n";
    os << "mode " << mode_label(s.mode) << "\n";
    os << "solver " << solver_label(s.solver) << "\n";
    os << "epsilon " << rat_str(s.epsilon) << "\n";
    os << "survivor " << s.survivor << "\n";
    os << "max-rounds " << s.max_rounds << "\n";
    os << "seed " << s.seed << "\n";
    os << "policy " << policy_kind_label(s.policy.kind) << "\n";
    os << "policy-c1 " << rat_str(s.policy.c1) << "\n";
    os << "policy-c2 " << rat_str(s.policy.c2) << "\n";
    os << "policy-exp-q " << rat_str(s.policy.exp_q) << "\n";
    for (std::size_t i = 0; i < s.policy.node_intervals.size(); ++i) {
        os << "policy-interval " << (i + 1) << " " << rat_str(s.policy.node_intervals[i].lo)
           << " " << rat_str(s.policy.node_intervals[i].hi) << "\n";
    }
    if (s.claim_responses)
        os << "claim responses " << *s.claim_responses << "\n";
    if (s.claim_recovery)
        os << "claim recovery " << s.claim_recovery->str() << "\n";
    if (!s.claim_responses && !s.claim_recovery)
        os << "claim none\n";
    for (const auto& l : s.losses) {
        os << "loss " << l.round << " " << class_label(l.cls) << " " << node_name(l.receiver)
           << "\n";
    }
    os << "delays\n";
    for (NodeId i = 0; i < s.delays.nodes(); ++i) {
        os << node_name(i);
        for (NodeId j = 0; j < s.delays.nodes(); ++j) os << " " << rat_str(s.delays.at(i, j));
        os << "\n";
    }
    os << "end-delays\n";
    os << "constraints\n";
    os << s.system.serialize();
    os << "end-constraints\n";
    os << "sequence\n";
    for (const auto& e : s.sequence) {
        os << e.at.str() << "\t" << stimulus_label(e.kind) << "\t" << node_name(e.node) << "\t"
           << event_peer(e) << "\n";
    }
    os << "end-sequence\n";
    os << "end-scenario\n";
    return os.str();
}

ScenarioParse parse_scenario(const std::string& text) {
    ScenarioParse out;
    Scenario s;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& msg) {
        out.error = msg;
        out.line = lineno;
        out.scenario.reset();
        return out;
    };
    auto next = [&](std::string& into) {
        if (!std::getline(is, into)) return false;
        ++lineno;
        return true;
    };

    if (!next(line) || line != kHeader) return fail("missing scenario header");

    bool have_delays = false;
    bool ended = false;
    while (next(line)) {
        if (line.empty()) continue;
        if (line == "end-scenario") {
            ended = true;
            break;
        }
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        if (word == "responders") {
            if (!(ls >> s.responders)) return fail("malformed responders line");
        } else if (word == "mode") {
            std::string m;
            ls >> m;
            if (m == "worst")
                s.mode = Mode::Worst;
            else if (m == "best")
                s.mode = Mode::Best;
            else
                return fail("unknown mode: " + m);
        } else if (word == "solver") {
            std::string v;
            ls >> v;
            if (v == "absolute")
                s.solver = SolverStatus::Absolute;
            else if (v == "maximal")
                s.solver = SolverStatus::Maximal;
            else
                return fail("unknown solver status: " + v);
        } else if (word == "epsilon") {
            std::string v;
            ls >> v;
            auto r = parse_rat(v);
            if (!r) return fail("bad epsilon: " + v);
            s.epsilon = *r;
        } else if (word == "survivor") {
            if (!(ls >> s.survivor)) return fail("malformed survivor line");
        } else if (word == "max-rounds") {
            if (!(ls >> s.max_rounds)) return fail("malformed max-rounds line");
        } else if (word == "seed") {
            if (!(ls >> s.seed)) return fail("malformed seed line");
        } else if (word == "policy") {
            std::string v;
            ls >> v;
            auto k = parse_policy_kind(v);
            if (!k) return fail("unknown policy: " + v);
            s.policy.kind = *k;
        } else if (word == "policy-c1" || word == "policy-c2" || word == "policy-exp-q") {
            std::string v;
            ls >> v;
            auto r = parse_rat(v);
            if (!r) return fail("bad policy parameter: " + v);
            if (word == "policy-c1")
                s.policy.c1 = *r;
            else if (word == "policy-c2")
                s.policy.c2 = *r;
            else
                s.policy.exp_q = *r;
        } else if (word == "policy-interval") {
            std::size_t idx;
            std::string lo_s, hi_s;
            if (!(ls >> idx >> lo_s >> hi_s) || idx == 0)
                return fail("malformed policy-interval line");
            auto lo = parse_rat(lo_s), hi = parse_rat(hi_s);
            if (!lo || !hi || *lo > *hi) return fail("bad interval bounds");
            if (s.policy.node_intervals.size() < idx) s.policy.node_intervals.resize(idx);
            s.policy.node_intervals[idx - 1] = Interval{*lo, *hi};
        } else if (word == "claim") {
            std::string what;
            ls >> what;
            if (what == "responses") {
                int n;
                if (!(ls >> n)) return fail("malformed response claim");
                s.claim_responses = n;
            } else if (what == "recovery") {
                std::string rest;
                std::getline(ls, rest);
                if (!rest.empty() && rest.front() == ' ') rest.erase(rest.begin());
                auto t = SymbolicTime::parse(rest);
                if (!t) return fail("bad recovery expression: " + rest);
                s.claim_recovery = *t;
            } else if (what != "none") {
                return fail("unknown claim kind: " + what);
            }
        } else if (word == "loss") {
            int round;
            std::string cls, node;
            if (!(ls >> round >> cls >> node)) return fail("malformed loss line");
            MessageClass mc;
            if (cls == "request")
                mc = MessageClass::Request;
            else if (cls == "response")
                mc = MessageClass::Response;
            else
                return fail("unknown message class: " + cls);
            auto nid = parse_node(node);
            if (!nid) return fail("bad node: " + node);
            s.losses.insert(LossKey{round, mc, *nid});
        } else if (word == "delays") {
            const std::size_t n = s.responders + 1;
            DelayMatrix m(n);
            for (std::size_t i = 0; i < n; ++i) {
                if (!next(line)) return fail("truncated delay matrix");
                std::istringstream ms(line);
                std::string name;
                ms >> name;
                auto nid = parse_node(name);
                if (!nid || *nid != i) return fail("delay row out of order: " + line);
                for (std::size_t j = 0; j < n; ++j) {
                    std::string v;
                    if (!(ms >> v)) return fail("short delay row: " + line);
                    auto r = parse_rat(v);
                    if (!r) return fail("bad delay value: " + v);
                    m.set(i, j, *r);
                }
            }
            if (!next(line) || line != "end-delays") return fail("missing end-delays");
            s.delays = std::move(m);
            have_delays = true;
        } else if (word == "constraints") {
            std::string block;
            bool closed = false;
            while (next(line)) {
                if (line == "end-constraints") {
                    closed = true;
                    break;
                }
                block += line;
                block += "\n";
            }
            if (!closed) return fail("missing end-constraints");
            auto parsed = parse_constraint_system(block);
            if (!parsed.system)
                return fail("embedded constraint block: " + parsed.error);
            s.system = std::move(*parsed.system);
        } else if (word == "sequence") {
            bool closed = false;
            while (next(line)) {
                if (line == "end-sequence") {
                    closed = true;
                    break;
                }
                std::vector<std::string> cols;
                std::size_t start = 0;
                while (true) {
                    auto tab = line.find('\t', start);
                    if (tab == std::string::npos) {
                        cols.push_back(line.substr(start));
                        break;
                    }
                    cols.push_back(line.substr(start, tab - start));
                    start = tab + 1;
                }
                if (cols.size() != 4) return fail("sequence line needs 4 columns");
                ChainEvent e;
                auto t = SymbolicTime::parse(cols[0]);
                if (!t) return fail("bad event time: " + cols[0]);
                e.at = *t;
                auto k = parse_stimulus_label(cols[1]);
                if (!k) return fail("unknown event: " + cols[1]);
                e.kind = *k;
                auto nid = parse_node(cols[2]);
                if (!nid) return fail("bad node: " + cols[2]);
                e.node = *nid;
                if (cols[3] == "-") {
                    e.peer = e.node;
                } else {
                    auto pid = parse_node(cols[3]);
                    if (!pid) return fail("bad peer: " + cols[3]);
                    e.peer = *pid;
                }
                s.sequence.push_back(std::move(e));
            }
            if (!closed) return fail("missing end-sequence");
        } else {
            return fail("unrecognized directive: " + word);
        }
    }
    if (!ended) return fail("missing end-scenario");
    if (!have_delays) return fail("scenario has no delay matrix");
    out.scenario = std::move(s);
    return out;
}

// ============================================================================
// re-validation
// ============================================================================

std::vector<std::string> verify_scenario(const Scenario& s) {
    std::vector<std::string> bad;

    if (s.delays.nodes() != s.responders + 1) {
        bad.push_back("delay matrix size does not match the responder count");
        return bad;
    }
    for (const auto& v : validate(s.delays)) {
        bad.push_back("delay matrix: " + v.what + " at (" + node_name(v.from) + "," +
                      node_name(v.to) + ")");
    }
    if (!bad.empty()) return bad;

    // Assignment: stored delays plus the timer values this seed draws.
    std::vector<Rat> exp = policy_durations(s.policy, s.delays, s.seed, 1);
    Assignment a;
    for (NodeId i = 0; i < s.delays.nodes(); ++i)
        for (NodeId j = 0; j < s.delays.nodes(); ++j)
            if (i != j) a[delay_var(i, j)] = s.delays.at(i, j);
    for (std::size_t i = 0; i < exp.size(); ++i) a[exp_var(NodeId(i + 1))] = exp[i];
    a[exp_var(0)] = s.policy.exp_q;

    for (const auto& [name, value] : s.system.fixed) {
        auto it = a.find(name);
        if (it != a.end() && it->second != value)
            bad.push_back("fixed value for " + name + " disagrees with the stored delays");
        if (it == a.end()) a[name] = value;
    }
    for (std::size_t i = 0; i < s.system.constraints.size(); ++i) {
        auto ok = s.system.constraints[i].satisfied(a);
        if (!ok)
            bad.push_back("constraint " + std::to_string(i + 1) +
                          " references a value the scenario does not carry");
        else if (!*ok)
            bad.push_back("constraint " + std::to_string(i + 1) + " fails: " +
                          s.system.constraints[i].display_str());
    }

    SimConfig cfg{s.delays, s.policy, s.seed, s.losses, s.max_rounds};
    Metrics m = run(cfg);

    if (s.claim_responses && m.responses != *s.claim_responses) {
        bad.push_back("simulated " + std::to_string(m.responses) + " responses, claim says " +
                      std::to_string(*s.claim_responses));
    }
    if (s.claim_recovery) {
        auto want = s.claim_recovery->eval(a);
        if (!want)
            bad.push_back("recovery claim references a value the scenario does not carry");
        else if (!m.recovery_time)
            bad.push_back("simulation never recovered, claim expects " + rat_str(*want));
        else if (*m.recovery_time != *want)
            bad.push_back("simulated recovery at " + rat_str(*m.recovery_time) +
                          ", claim evaluates to " + rat_str(*want));
    }

    if (!s.sequence.empty()) {
        std::vector<std::tuple<Rat, StimulusKind, NodeId, NodeId>> want, got;
        bool evaluable = true;
        for (const auto& e : s.sequence) {
            auto t = e.at.eval(a);
            if (!t) {
                bad.push_back("sequence time " + e.at.display_str() +
                              " references a value the scenario does not carry");
                evaluable = false;
                break;
            }
            NodeId peer =
                (e.kind == StimulusKind::ReqRx || e.kind == StimulusKind::RespRx) ? e.peer
                                                                                  : e.node;
            want.emplace_back(*t, e.kind, e.node, peer);
        }
        if (evaluable) {
            for (const auto& e : m.log) {
                NodeId peer =
                    (e.kind == StimulusKind::ReqRx || e.kind == StimulusKind::RespRx) ? e.peer
                                                                                      : e.node;
                got.emplace_back(e.at, e.kind, e.node, peer);
            }
            std::sort(want.begin(), want.end());
            std::sort(got.begin(), got.end());
            if (want != got)
                bad.push_back("stored sequence disagrees with the simulated event log (" +
                              std::to_string(want.size()) + " predicted, " +
                              std::to_string(got.size()) + " simulated)");
        }
    }
    return bad;
}

} // namespace tsm
