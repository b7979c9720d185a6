#include "tsm/protocol.hpp"

#include <algorithm>
#include <cassert>
#include <tuple>

namespace tsm {

std::string node_state_str(NodeState s) {
    switch (s) {
        case NodeState::ReqIdle: return "req-idle";
        case NodeState::ReqWaiting: return "req-waiting";
        case NodeState::RespIdle: return "resp-idle";
        case NodeState::RespArmed: return "resp-armed";
    }
    return "?";
}

std::string stimulus_label(StimulusKind k) {
    switch (k) {
        case StimulusKind::Loss: return "loss";
        case StimulusKind::ReqTx: return "req_tx";
        case StimulusKind::ReqRx: return "req_rx";
        case StimulusKind::RespTx: return "resp_tx";
        case StimulusKind::RespRx: return "resp_rx";
        case StimulusKind::RespTimer: return "resp_timer";
        case StimulusKind::ReqTimer: return "req_timer";
    }
    return "?";
}

std::optional<StimulusKind> parse_stimulus_label(const std::string& s) {
    if (s == "loss") return StimulusKind::Loss;
    if (s == "req_tx") return StimulusKind::ReqTx;
    if (s == "req_rx") return StimulusKind::ReqRx;
    if (s == "resp_tx") return StimulusKind::RespTx;
    if (s == "resp_rx") return StimulusKind::RespRx;
    if (s == "resp_timer") return StimulusKind::RespTimer;
    if (s == "req_timer") return StimulusKind::ReqTimer;
    return std::nullopt;
}

const TransitionRule* ProtocolModel::rule(const std::string& name) const {
    for (const auto& r : rules)
        if (r.name == name) return &r;
    return nullptr;
}

const TransitionRule* ProtocolModel::rule_for_event(StimulusKind k) const {
    for (const auto& r : rules)
        if (r.event == k) return &r;
    return nullptr;
}

ProtocolModel build_tsm(std::size_t responders) {
    using NS = NodeState;
    using SK = StimulusKind;
    ProtocolModel m;
    m.responders = responders;
    m.rules = {
        {"loss", SK::Loss, {{NS::ReqIdle, NS::ReqWaiting, TimerAction::ArmRequest}}, SK::ReqTx, {}},
        {"tx_req", SK::ReqTx, {}, {}, MessageClass::Request},
        {"rcv_req", SK::ReqRx, {{NS::RespIdle, NS::RespArmed, TimerAction::ArmResponse}}, {}, {}},
        {"res_tmr", SK::RespTimer, {{NS::RespArmed, NS::RespIdle, TimerAction::Clear}}, SK::RespTx, {}},
        {"tx_res", SK::RespTx, {}, {}, MessageClass::Response},
        {"rcv_res", SK::RespRx,
         {{NS::ReqWaiting, NS::ReqIdle, TimerAction::Clear},
          {NS::RespArmed, NS::RespIdle, TimerAction::Clear}},
         {},
         {}},
        {"req_tmr", SK::ReqTimer, {{NS::ReqWaiting, NS::ReqWaiting, TimerAction::Rearm}}, SK::ReqTx, {}},
    };
    return m;
}

NodeState initial_node_state(NodeId id) {
    return id == 0 ? NodeState::ReqIdle : NodeState::RespIdle;
}

void GlobalState::normalize() {
    std::sort(arrivals.begin(), arrivals.end(), [](const Arrival& a, const Arrival& b) {
        return std::tie(a.at, a.receiver, a.cls, a.sender, a.round) <
               std::tie(b.at, b.receiver, b.cls, b.sender, b.round);
    });
}

bool GlobalState::fully_timed() const {
    for (const auto& a : arrivals)
        if (!a.at) return false;
    for (const auto& t : timers)
        if (t && !t->expiry) return false;
    return true;
}

GlobalState initial_state(const ProtocolModel& m) {
    GlobalState g;
    g.nodes.resize(m.nodes());
    g.timers.resize(m.nodes());
    for (NodeId i = 0; i < m.nodes(); ++i) g.nodes[i] = initial_node_state(i);
    return g;
}

namespace {

bool lost(const LossPattern& losses, int round, MessageClass cls, NodeId receiver) {
    return losses.count(LossKey{round, cls, receiver}) > 0;
}

// Applies one stimulus in place, chaining same-instant emissions. Returns an
// error string on a guard violation, in which case g/events are unspecified.
std::optional<std::string> apply_one(const ProtocolModel& m, const TimingEnv& env,
                                     const LossPattern& losses, GlobalState& g,
                                     std::vector<TimedEvent>& events, const Stimulus& s,
                                     std::optional<Rat> when, std::optional<int> round_hint) {
    const DelayMatrix& D = *env.delays;
    switch (s.kind) {
        case StimulusKind::Loss: {
            if (s.node != 0) return "loss occurs at the requester only";
            if (g.nodes[0] != NodeState::ReqIdle) return "loss: requester is not idle";
            if (g.rounds != 0) return "loss: exchange already in progress";
            Rat t = when.value_or(Rat(0));
            Rat dur = env.exp(0, 1);
            g.nodes[0] = NodeState::ReqWaiting;
            g.timers[0] = TimerInfo{t + dur, dur, 1};
            events.push_back({t, StimulusKind::Loss, 0, 0});
            return apply_one(m, env, losses, g, events, {StimulusKind::ReqTx, 0, 0}, t, std::nullopt);
        }
        case StimulusKind::ReqTx: {
            if (s.node != 0) return "requests are sent by the requester only";
            if (!when) return "req_tx: transmission time unknown";
            int round = g.rounds + 1;
            g.rounds = round;
            events.push_back({*when, StimulusKind::ReqTx, 0, 0});
            for (NodeId k = 1; k < m.nodes(); ++k) {
                if (lost(losses, round, MessageClass::Request, k)) continue;
                g.arrivals.push_back({MessageClass::Request, 0, k, *when + D.at(0, k), round});
            }
            g.normalize();
            return std::nullopt;
        }
        case StimulusKind::ReqRx: {
            auto it = std::find_if(g.arrivals.begin(), g.arrivals.end(), [&](const Arrival& a) {
                return a.cls == MessageClass::Request && a.receiver == s.node && a.sender == s.peer;
            });
            if (it == g.arrivals.end()) return "req_rx: no pending request for this node";
            if (!it->at) return "req_rx: arrival time unset";
            Rat t = *it->at;
            int round = it->round;
            g.arrivals.erase(it);
            events.push_back({t, StimulusKind::ReqRx, s.node, s.peer});
            if (g.nodes[s.node] == NodeState::RespIdle) {
                Rat dur = env.exp(s.node, round);
                g.nodes[s.node] = NodeState::RespArmed;
                g.timers[s.node] = TimerInfo{t + dur, dur, round};
            }
            return std::nullopt;
        }
        case StimulusKind::RespTimer: {
            if (s.node == 0 || g.nodes[s.node] != NodeState::RespArmed || !g.timers[s.node])
                return "resp_timer: no armed response timer at this node";
            if (!g.timers[s.node]->expiry) return "resp_timer: expiry unset";
            Rat t = *g.timers[s.node]->expiry;
            int round = g.timers[s.node]->round;
            g.timers[s.node].reset();
            g.nodes[s.node] = NodeState::RespIdle;
            events.push_back({t, StimulusKind::RespTimer, s.node, s.node});
            return apply_one(m, env, losses, g, events, {StimulusKind::RespTx, s.node, s.node}, t, round);
        }
        case StimulusKind::RespTx: {
            if (s.node == 0) return "responses are sent by responders only";
            if (!when) return "resp_tx: transmission time unknown";
            int round = round_hint.value_or(g.rounds);
            events.push_back({*when, StimulusKind::RespTx, s.node, s.node});
            for (NodeId k = 0; k < m.nodes(); ++k) {
                if (k == s.node) continue;
                if (lost(losses, round, MessageClass::Response, k)) continue;
                g.arrivals.push_back({MessageClass::Response, s.node, k, *when + D.at(s.node, k), round});
            }
            g.normalize();
            return std::nullopt;
        }
        case StimulusKind::RespRx: {
            auto it = std::find_if(g.arrivals.begin(), g.arrivals.end(), [&](const Arrival& a) {
                return a.cls == MessageClass::Response && a.receiver == s.node && a.sender == s.peer;
            });
            if (it == g.arrivals.end()) return "resp_rx: no pending response for this node";
            if (!it->at) return "resp_rx: arrival time unset";
            Rat t = *it->at;
            g.arrivals.erase(it);
            events.push_back({t, StimulusKind::RespRx, s.node, s.peer});
            if (s.node == 0 && g.nodes[0] == NodeState::ReqWaiting) {
                g.nodes[0] = NodeState::ReqIdle; // recovery
                g.timers[0].reset();
            } else if (s.node != 0 && g.nodes[s.node] == NodeState::RespArmed) {
                g.nodes[s.node] = NodeState::RespIdle; // suppression
                g.timers[s.node].reset();
            }
            return std::nullopt;
        }
        case StimulusKind::ReqTimer: {
            if (s.node != 0 || g.nodes[0] != NodeState::ReqWaiting || !g.timers[0])
                return "req_timer: no armed request timer";
            if (!g.timers[0]->expiry) return "req_timer: expiry unset";
            Rat t = *g.timers[0]->expiry;
            int next_round = g.rounds + 1;
            Rat dur = env.exp(0, next_round);
            g.timers[0] = TimerInfo{t + dur, dur, next_round};
            events.push_back({t, StimulusKind::ReqTimer, 0, 0});
            return apply_one(m, env, losses, g, events, {StimulusKind::ReqTx, 0, 0}, t, std::nullopt);
        }
    }
    return "unknown stimulus";
}

} // namespace

StepResult step(const ProtocolModel& m, const TimingEnv& env, const LossPattern& losses,
                const GlobalState& g, const Stimulus& s, std::optional<Rat> when) {
    StepResult r;
    r.state = g;
    r.error = apply_one(m, env, losses, r.state, r.events, s, when, std::nullopt);
    return r;
}

std::vector<Stimulus> enabled(const ProtocolModel& m, const GlobalState& g) {
    std::vector<Stimulus> out;
    bool pending = !g.arrivals.empty();
    for (const auto& t : g.timers) pending = pending || t.has_value();
    if (!pending) {
        if (g.nodes[0] == NodeState::ReqIdle && g.rounds == 0)
            out.push_back({StimulusKind::Loss, 0, 0});
        return out; // quiescent after recovery
    }

    std::optional<Rat> tmin;
    for (const auto& a : g.arrivals)
        if (a.at && (!tmin || *a.at < *tmin)) tmin = *a.at;
    for (const auto& t : g.timers)
        if (t && t->expiry && (!tmin || *t->expiry < *tmin)) tmin = *t->expiry;
    if (!tmin) return out;

    std::vector<Arrival> front;
    for (const auto& a : g.arrivals)
        if (a.at && *a.at == *tmin) front.push_back(a);
    if (!front.empty()) {
        std::sort(front.begin(), front.end(), [](const Arrival& a, const Arrival& b) {
            return std::tie(a.receiver, a.cls, a.sender) < std::tie(b.receiver, b.cls, b.sender);
        });
        for (const auto& a : front) {
            Stimulus s{a.cls == MessageClass::Request ? StimulusKind::ReqRx : StimulusKind::RespRx,
                       a.receiver, a.sender};
            if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
        }
        return out;
    }
    for (NodeId i = 0; i < g.timers.size(); ++i) {
        if (g.timers[i] && g.timers[i]->expiry && *g.timers[i]->expiry == *tmin)
            out.push_back({i == 0 ? StimulusKind::ReqTimer : StimulusKind::RespTimer, i, i});
    }
    return out;
}

namespace {

// Removes `expected` arrivals from `g` if all are present (times compared
// when both sides have them). Returns false and leaves g untouched otherwise.
bool take_arrivals(GlobalState& g, const std::vector<Arrival>& expected) {
    GlobalState backup = g;
    for (const auto& e : expected) {
        auto it = std::find_if(g.arrivals.begin(), g.arrivals.end(), [&](const Arrival& a) {
            bool key = a.cls == e.cls && a.sender == e.sender && a.receiver == e.receiver &&
                       a.round == e.round;
            if (!key) return false;
            if (a.at && e.at) return *a.at == *e.at;
            return true;
        });
        if (it == g.arrivals.end()) {
            g = backup;
            return false;
        }
        g.arrivals.erase(it);
    }
    return true;
}

// Emission time of sender's round-r response as witnessed by still-pending
// copies; nullopt when no copy survives, and inconsistent evidence rejects.
struct EmissionEvidence {
    bool consistent = true;
    std::optional<Rat> at;
};
EmissionEvidence response_emission_time(const GlobalState& g, const DelayMatrix& D, NodeId sender,
                                        int round) {
    EmissionEvidence ev;
    for (const auto& a : g.arrivals) {
        if (a.cls != MessageClass::Response || a.sender != sender || a.round != round) continue;
        if (!a.at) continue;
        Rat e = *a.at - D.at(sender, a.receiver);
        if (ev.at && *ev.at != e) {
            ev.consistent = false;
            return ev;
        }
        ev.at = e;
    }
    return ev;
}

} // namespace

std::vector<Predecessor> predecessors(const ProtocolModel& m, const TimingEnv& env,
                                      const LossPattern& losses, const GlobalState& g) {
    std::vector<Predecessor> out;
    const DelayMatrix& D = *env.delays;
    const std::size_t N = m.nodes();

    // rcv_req: an armed responder was idle one step ago; the request that
    // armed it is re-inserted at expiry - duration.
    for (NodeId i = 1; i < N; ++i) {
        if (g.nodes[i] != NodeState::RespArmed || !g.timers[i]) continue;
        const TimerInfo& t = *g.timers[i];
        Predecessor p;
        p.state = g;
        p.state.nodes[i] = NodeState::RespIdle;
        p.state.timers[i].reset();
        std::optional<Rat> at;
        if (t.expiry) at = *t.expiry - t.duration;
        p.state.arrivals.push_back({MessageClass::Request, 0, i, at, t.round});
        p.state.normalize();
        p.rule = "rcv_req";
        p.event = {StimulusKind::ReqRx, i, 0};
        p.at = at;
        out.push_back(std::move(p));
    }

    // res_tmr: an idle responder may just have fired. All surviving copies of
    // that emission must still be pending for g to be the immediate successor.
    for (NodeId j = 1; j < N; ++j) {
        if (g.nodes[j] != NodeState::RespIdle || g.timers[j]) continue;
        for (int r = 1; r <= g.rounds; ++r) {
            auto ev = response_emission_time(g, D, j, r);
            if (!ev.consistent) continue;
            std::vector<Arrival> expected;
            for (NodeId k = 0; k < N; ++k) {
                if (k == j || lost(losses, r, MessageClass::Response, k)) continue;
                std::optional<Rat> at;
                if (ev.at) at = *ev.at + D.at(j, k);
                expected.push_back({MessageClass::Response, j, k, at, r});
            }
            Predecessor p;
            p.state = g;
            if (!take_arrivals(p.state, expected)) continue;
            p.state.nodes[j] = NodeState::RespArmed;
            p.state.timers[j] = TimerInfo{ev.at, env.exp(j, r), r};
            p.state.normalize();
            p.rule = "res_tmr";
            p.event = {StimulusKind::RespTimer, j, j};
            p.at = ev.at;
            out.push_back(std::move(p));
        }
    }

    // rcv_res at a responder (suppression): the consumed copy is re-inserted;
    // the cancelled timer's expiry is unknowable from here.
    for (NodeId i = 1; i < N; ++i) {
        if (g.nodes[i] != NodeState::RespIdle || g.timers[i]) continue;
        for (NodeId j = 1; j < N; ++j) {
            if (j == i || g.nodes[j] != NodeState::RespIdle) continue;
            for (int r = 1; r <= g.rounds; ++r) {
                if (lost(losses, r, MessageClass::Response, i)) continue;
                auto ev = response_emission_time(g, D, j, r);
                if (!ev.consistent) continue;
                std::optional<Rat> at;
                if (ev.at) at = *ev.at + D.at(j, i);
                for (int rt = 1; rt <= g.rounds; ++rt) {
                    Predecessor p;
                    p.state = g;
                    p.state.nodes[i] = NodeState::RespArmed;
                    p.state.timers[i] = TimerInfo{std::nullopt, env.exp(i, rt), rt};
                    p.state.arrivals.push_back({MessageClass::Response, j, i, at, r});
                    p.state.normalize();
                    p.rule = "rcv_res";
                    p.event = {StimulusKind::RespRx, i, j};
                    p.at = at;
                    out.push_back(std::move(p));
                }
            }
        }
    }

    // rcv_res at the requester (recovery): symmetric, the cleared request
    // timer's expiry is unknowable.
    if (g.nodes[0] == NodeState::ReqIdle && g.rounds >= 1 && !g.timers[0]) {
        for (NodeId j = 1; j < N; ++j) {
            if (g.nodes[j] != NodeState::RespIdle) continue;
            for (int r = 1; r <= g.rounds; ++r) {
                if (lost(losses, r, MessageClass::Response, NodeId{0})) continue;
                auto ev = response_emission_time(g, D, j, r);
                if (!ev.consistent) continue;
                std::optional<Rat> at;
                if (ev.at) at = *ev.at + D.at(j, 0);
                Predecessor p;
                p.state = g;
                p.state.nodes[0] = NodeState::ReqWaiting;
                p.state.timers[0] = TimerInfo{std::nullopt, env.exp(0, g.rounds), g.rounds};
                p.state.arrivals.push_back({MessageClass::Response, j, 0, at, r});
                p.state.normalize();
                p.rule = "rcv_res";
                p.event = {StimulusKind::RespRx, 0, j};
                p.at = at;
                out.push_back(std::move(p));
            }
        }
    }

    // no-effect consumptions: a message arrived somewhere it changed nothing.
    for (NodeId k = 0; k < N; ++k) {
        for (int r = 1; r <= g.rounds; ++r) {
            if (k != 0 && g.nodes[k] == NodeState::RespArmed &&
                !lost(losses, r, MessageClass::Request, k)) {
                Predecessor p;
                p.state = g;
                p.state.arrivals.push_back({MessageClass::Request, 0, k, std::nullopt, r});
                p.state.normalize();
                p.rule = "rcv_req";
                p.event = {StimulusKind::ReqRx, k, 0};
                out.push_back(std::move(p));
            }
            bool resp_noop = (k == 0 && g.nodes[0] == NodeState::ReqIdle) ||
                             (k != 0 && g.nodes[k] == NodeState::RespIdle);
            if (!resp_noop || lost(losses, r, MessageClass::Response, k)) continue;
            for (NodeId j = 1; j < N; ++j) {
                if (j == k || g.nodes[j] != NodeState::RespIdle) continue;
                auto ev = response_emission_time(g, D, j, r);
                if (!ev.consistent) continue;
                std::optional<Rat> at;
                if (ev.at) at = *ev.at + D.at(j, k);
                Predecessor p;
                p.state = g;
                p.state.arrivals.push_back({MessageClass::Response, j, k, at, r});
                p.state.normalize();
                p.rule = "rcv_res";
                p.event = {StimulusKind::RespRx, k, j};
                p.at = at;
                out.push_back(std::move(p));
            }
        }
    }

    // loss / req_tmr: the two ways a waiting requester got here. The round
    // counter picks between them; the full fan-out of the implied request
    // transmission must still be pending.
    if (g.nodes[0] == NodeState::ReqWaiting && g.timers[0] && g.timers[0]->round == g.rounds &&
        g.timers[0]->expiry) {
        Rat t_tx = *g.timers[0]->expiry - g.timers[0]->duration;
        std::vector<Arrival> expected;
        for (NodeId k = 1; k < N; ++k) {
            if (lost(losses, g.rounds, MessageClass::Request, k)) continue;
            expected.push_back({MessageClass::Request, 0, k, t_tx + D.at(0, k), g.rounds});
        }
        if (g.rounds == 1) {
            GlobalState p = g;
            if (take_arrivals(p, expected)) {
                GlobalState init = initial_state(m);
                // only valid if nothing else is outstanding
                p.nodes[0] = NodeState::ReqIdle;
                p.timers[0].reset();
                p.rounds = 0;
                if (p == init)
                    out.push_back({init, "loss", {StimulusKind::Loss, 0, 0}, t_tx});
            }
        } else if (g.rounds >= 2) {
            GlobalState p = g;
            if (take_arrivals(p, expected)) {
                p.rounds = g.rounds - 1;
                p.timers[0] = TimerInfo{t_tx, env.exp(0, g.rounds - 1), g.rounds - 1};
                p.normalize();
                out.push_back({std::move(p), "req_tmr", {StimulusKind::ReqTimer, 0, 0}, t_tx});
            }
        }
    }

    return out;
}

} // namespace tsm
