#include "tsm/synth.hpp"

#include <algorithm>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>

namespace tsm {

// ============================================================================
// transition classification
// ============================================================================

namespace {

bool is_initial_state(NodeState s) {
    return s == NodeState::ReqIdle || s == NodeState::RespIdle;
}

} // namespace

TransitionClassification classify_transitions(const ProtocolModel& m, const TargetEvent& target) {
    TransitionClassification out;

    // Rules that emit the target message class count as producers; for
    // non-message targets the rules triggered by the event itself do.
    std::vector<const TransitionRule*> producers;
    for (const auto& r : m.rules) {
        if (r.emits && *r.emits == target.kind) producers.push_back(&r);
    }
    if (producers.empty()) {
        for (const auto& r : m.rules) {
            if (r.event == target.kind) producers.push_back(&r);
        }
    }

    // Guard states: what a producer requires to fire.
    std::vector<NodeState> guards;
    for (const auto* r : producers) {
        for (const auto& ch : r->changes) {
            if (std::find(guards.begin(), guards.end(), ch.from) == guards.end())
                guards.push_back(ch.from);
        }
    }

    std::vector<std::string> creators;
    std::vector<std::string> removers;
    for (NodeState g : guards) {
        if (is_initial_state(g)) continue;
        for (const auto& r : m.rules) {
            bool is_producer = false;
            for (const auto* p : producers)
                if (p->name == r.name) is_producer = true;
            for (const auto& ch : r.changes) {
                if (ch.to == g && ch.from != g && !is_producer) {
                    if (std::find(creators.begin(), creators.end(), r.name) == creators.end())
                        creators.push_back(r.name);
                }
                if (ch.from == g && ch.to != g && !is_producer) {
                    if (std::find(removers.begin(), removers.end(), r.name) == removers.end())
                        removers.push_back(r.name);
                }
            }
        }
    }

    if (target.objective == Objective::Maximize) {
        for (const auto* p : producers) out.wanted.push_back(p->name);
        for (const auto& c : creators) out.wanted.push_back(c);
        out.unwanted = removers;
    } else {
        out.wanted = removers;
        for (const auto* p : producers) out.unwanted.push_back(p->name);
    }

    // Condition times for a representative responder: run the creator's
    // chain backward one round and take the final event's time.
    for (NodeState g : guards) {
        if (is_initial_state(g)) continue;
        for (const auto& c : creators) {
            const TransitionRule* rule = m.rule(c);
            if (!rule) continue;
            for (const auto& ch : rule->changes) {
                if (ch.to != g) continue;
                WantedCondition wc;
                wc.state = g;
                wc.created_by = c;
                NodeId rep = (g == NodeState::ReqWaiting) ? NodeId(0) : NodeId(1);
                auto chains = backward_search(m, Stimulus{rule->event, rep, 0}, 1);
                if (!chains.empty() && !chains.front().events.empty())
                    wc.at = chains.front().events.back().at;
                out.conditions.push_back(wc);
            }
        }
    }
    return out;
}

// ============================================================================
// backward search
// ============================================================================

namespace {

// Backward step: given an event, its immediate implications. Deltas are the
// time from the predecessor event to this one.
struct BackStep {
    StimulusKind kind;
    NodeId node;
    NodeId peer;
    SymbolicTime delta;
    bool terminal = false; // predecessor chain ends (initial loss)
};

void walk_back(const ChainEvent& ev, std::vector<ChainEvent> suffix, int req_seen, int max_rounds,
               std::vector<std::vector<ChainEvent>>& out) {
    suffix.insert(suffix.begin(), ev);

    switch (ev.kind) {
    case StimulusKind::Loss:
        out.push_back(std::move(suffix));
        return;
    case StimulusKind::RespRx: {
        ChainEvent p{StimulusKind::RespTx, ev.peer, ev.peer, {}, ev.round, false};
        walk_back(p, std::move(suffix), req_seen, max_rounds, out);
        return;
    }
    case StimulusKind::RespTx: {
        ChainEvent p{StimulusKind::RespTimer, ev.node, ev.node, {}, ev.round, false};
        walk_back(p, std::move(suffix), req_seen, max_rounds, out);
        return;
    }
    case StimulusKind::RespTimer: {
        ChainEvent p{StimulusKind::ReqRx, ev.node, 0, {}, ev.round, false};
        walk_back(p, std::move(suffix), req_seen, max_rounds, out);
        return;
    }
    case StimulusKind::ReqRx: {
        ChainEvent p{StimulusKind::ReqTx, 0, 0, {}, ev.round, false};
        walk_back(p, std::move(suffix), req_seen, max_rounds, out);
        return;
    }
    case StimulusKind::ReqTx: {
        if (req_seen + 1 > max_rounds) return;
        // Branch: the transmission stems from the initial loss or from a
        // request-timer expiry one round earlier.
        if (ev.round == 1) {
            ChainEvent loss{StimulusKind::Loss, 0, 0, {}, 1, false};
            walk_back(loss, suffix, req_seen + 1, max_rounds, out);
        }
        if (ev.round > 1) {
            ChainEvent tmr{StimulusKind::ReqTimer, 0, 0, {}, ev.round, false};
            walk_back(tmr, std::move(suffix), req_seen + 1, max_rounds, out);
        }
        return;
    }
    case StimulusKind::ReqTimer: {
        ChainEvent p{StimulusKind::ReqTx, 0, 0, {}, ev.round - 1, false};
        walk_back(p, std::move(suffix), req_seen, max_rounds, out);
        return;
    }
    }
}

// Assign rounds backward (the target's round is unknown until the chain is
// complete) and symbolic times forward.
Chain finish_chain(std::vector<ChainEvent> evs) {
    int rounds = 0;
    for (const auto& e : evs)
        if (e.kind == StimulusKind::ReqTx) ++rounds;

    int round = 0;
    SymbolicTime t;
    for (auto& e : evs) {
        switch (e.kind) {
        case StimulusKind::Loss:
            t = SymbolicTime{};
            round = 0;
            break;
        case StimulusKind::ReqTimer:
            t += SymbolicTime::var(exp_var(0));
            break;
        case StimulusKind::ReqTx:
            ++round;
            break;
        case StimulusKind::ReqRx:
            t += SymbolicTime::var(delay_var(0, e.node));
            break;
        case StimulusKind::RespTimer:
            t += SymbolicTime::var(exp_var(e.node));
            break;
        case StimulusKind::RespTx:
            break;
        case StimulusKind::RespRx:
            t += SymbolicTime::var(delay_var(e.peer, e.node));
            break;
        }
        e.at = t;
        e.round = round == 0 ? 1 : round;
    }
    return Chain{std::move(evs), rounds};
}

} // namespace

std::string chain_str(const Chain& c) {
    std::ostringstream os;
    for (std::size_t i = 0; i < c.events.size(); ++i) {
        const auto& e = c.events[i];
        if (i) os << "; ";
        os << stimulus_label(e.kind) << "@" << node_name(e.node);
        if (e.kind == StimulusKind::ReqRx || e.kind == StimulusKind::RespRx)
            os << "<-" << node_name(e.peer);
        os << " t=" << e.at.str();
    }
    return os.str();
}

std::vector<Chain> backward_search(const ProtocolModel&, const Stimulus& from, int max_rounds) {
    std::vector<std::vector<ChainEvent>> raw;
    // Seed rounds backward: the target may sit in any round; walk_back
    // explores each choice via the ReqTx branch, so seed with every
    // admissible round index.
    for (int r = 1; r <= max_rounds; ++r) {
        ChainEvent tgt{from.kind, from.node, from.peer, {}, r, false};
        std::vector<std::vector<ChainEvent>> got;
        walk_back(tgt, {}, 0, max_rounds, got);
        for (auto& g : got) {
            // Keep only chains whose request count matches the seeded round;
            // other seeds produce the same chains again. A bare loss target
            // carries no request transmission at all.
            int reqs = 0;
            for (const auto& e : g)
                if (e.kind == StimulusKind::ReqTx) ++reqs;
            if (reqs == r || (reqs == 0 && r == 1)) raw.push_back(std::move(g));
        }
    }

    std::vector<Chain> chains;
    for (auto& evs : raw) chains.push_back(finish_chain(std::move(evs)));
    std::sort(chains.begin(), chains.end(), [](const Chain& a, const Chain& b) {
        if (a.rounds != b.rounds) return a.rounds < b.rounds;
        if (a.events.size() != b.events.size()) return a.events.size() < b.events.size();
        return chain_str(a) < chain_str(b);
    });
    chains.erase(std::unique(chains.begin(), chains.end(),
                             [](const Chain& a, const Chain& b) {
                                 return chain_str(a) == chain_str(b);
                             }),
                 chains.end());
    return chains;
}

std::vector<Chain> backward_search_state(const ProtocolModel& m, NodeId node, NodeState state,
                                         int max_rounds) {
    switch (state) {
    case NodeState::RespArmed:
        return backward_search(m, Stimulus{StimulusKind::ReqRx, node, 0}, max_rounds);
    case NodeState::ReqWaiting:
        return backward_search(m, Stimulus{StimulusKind::ReqTx, 0, 0}, max_rounds);
    default:
        return {};
    }
}

// ============================================================================
// forward verification
// ============================================================================

namespace {

struct SPend {
    MessageClass cls;
    NodeId sender;
    NodeId receiver;
    int round;
    SymbolicTime at;
};

struct STimer {
    int round;
    SymbolicTime armed;
    SymbolicTime expiry;
};

struct SState {
    std::vector<NodeState> nodes;
    std::vector<SPend> pending;
    std::vector<std::optional<STimer>> timers;
    int rounds = 0;
};

struct Shadow {
    SymbolicTime at;     // suppression arrival
    SymbolicTime expiry; // cancelled expiry
};

SState initial_sstate(std::size_t responders) {
    SState s;
    s.nodes.assign(responders + 1, NodeState::RespIdle);
    s.nodes[0] = NodeState::ReqIdle;
    s.timers.assign(responders + 1, std::nullopt);
    return s;
}

bool lost(const LossPattern& losses, int round, MessageClass cls, NodeId receiver) {
    return losses.count(LossKey{round, cls, receiver}) > 0;
}

// Applies one stimulus to the structural state, chaining the same-instant
// emission the rule table mandates. Returns false if the stimulus is not
// applicable. Applied events append to `out`; suppressions to `shadows`.
bool apply_sym(SState& st, const LossPattern& losses, StimulusKind kind, NodeId node, NodeId peer,
               bool fill, std::vector<ChainEvent>& out, std::vector<Shadow>& shadows) {
    const std::size_t n = st.nodes.size() - 1;

    auto fan_request = [&](const SymbolicTime& t, int round) {
        for (NodeId k = 1; k <= n; ++k) {
            if (lost(losses, round, MessageClass::Request, k)) continue;
            SymbolicTime at = t;
            at += SymbolicTime::var(delay_var(0, k));
            st.pending.push_back({MessageClass::Request, 0, k, round, at});
        }
    };

    switch (kind) {
    case StimulusKind::Loss: {
        if (st.rounds != 0 || st.nodes[0] != NodeState::ReqIdle) return false;
        SymbolicTime t0;
        st.nodes[0] = NodeState::ReqWaiting;
        SymbolicTime exp = t0;
        exp += SymbolicTime::var(exp_var(0));
        st.timers[0] = STimer{1, t0, exp};
        st.rounds = 1;
        out.push_back({StimulusKind::Loss, 0, 0, t0, 1, fill});
        fan_request(t0, 1);
        out.push_back({StimulusKind::ReqTx, 0, 0, t0, 1, fill});
        return true;
    }
    case StimulusKind::ReqTimer: {
        if (st.nodes[0] != NodeState::ReqWaiting || !st.timers[0]) return false;
        SymbolicTime t = st.timers[0]->expiry;
        int round = st.rounds + 1;
        SymbolicTime exp = t;
        exp += SymbolicTime::var(exp_var(0));
        st.timers[0] = STimer{round, t, exp};
        st.rounds = round;
        out.push_back({StimulusKind::ReqTimer, 0, 0, t, round, fill});
        fan_request(t, round);
        out.push_back({StimulusKind::ReqTx, 0, 0, t, round, fill});
        return true;
    }
    case StimulusKind::ReqRx: {
        auto it = st.pending.end();
        for (auto p = st.pending.begin(); p != st.pending.end(); ++p) {
            if (p->cls != MessageClass::Request || p->receiver != node) continue;
            if (it == st.pending.end() || p->round < it->round) it = p;
        }
        if (it == st.pending.end()) return false;
        SymbolicTime t = it->at;
        int round = it->round;
        st.pending.erase(it);
        if (st.nodes[node] == NodeState::RespIdle) {
            SymbolicTime exp = t;
            exp += SymbolicTime::var(exp_var(node));
            st.nodes[node] = NodeState::RespArmed;
            st.timers[node] = STimer{round, t, exp};
        }
        out.push_back({StimulusKind::ReqRx, node, 0, t, round, fill});
        return true;
    }
    case StimulusKind::RespTimer: {
        if (node == 0 || st.nodes[node] != NodeState::RespArmed || !st.timers[node]) return false;
        SymbolicTime t = st.timers[node]->expiry;
        int round = st.timers[node]->round;
        st.nodes[node] = NodeState::RespIdle;
        st.timers[node].reset();
        out.push_back({StimulusKind::RespTimer, node, node, t, round, fill});
        for (NodeId k = 0; k <= n; ++k) {
            if (k == node) continue;
            if (lost(losses, round, MessageClass::Response, k)) continue;
            SymbolicTime at = t;
            at += SymbolicTime::var(delay_var(node, k));
            st.pending.push_back({MessageClass::Response, node, k, round, at});
        }
        out.push_back({StimulusKind::RespTx, node, node, t, round, fill});
        return true;
    }
    case StimulusKind::RespRx: {
        auto it = st.pending.end();
        for (auto p = st.pending.begin(); p != st.pending.end(); ++p) {
            if (p->cls != MessageClass::Response || p->receiver != node) continue;
            if (peer != node && p->sender != peer) continue;
            if (it == st.pending.end() || p->round < it->round) it = p;
        }
        if (it == st.pending.end()) return false;
        SymbolicTime t = it->at;
        NodeId sender = it->sender;
        int round = it->round;
        st.pending.erase(it);
        if (node == 0 && st.nodes[0] == NodeState::ReqWaiting) {
            st.nodes[0] = NodeState::ReqIdle;
            st.timers[0].reset();
        } else if (node != 0 && st.nodes[node] == NodeState::RespArmed) {
            shadows.push_back({t, st.timers[node]->expiry});
            st.nodes[node] = NodeState::RespIdle;
            st.timers[node].reset();
        }
        out.push_back({StimulusKind::RespRx, node, sender, t, round, fill});
        return true;
    }
    default:
        return false;
    }
}

bool any_responder_armed(const SState& st) {
    for (std::size_t k = 1; k < st.nodes.size(); ++k)
        if (st.nodes[k] == NodeState::RespArmed) return true;
    return false;
}

// Retransmission fires only once every in-flight message is consumed and
// every armed response timer has resolved; those always precede the next
// request round when it is long enough to matter.
bool req_timer_ready(const SState& st, int max_rounds) {
    if (st.nodes[0] != NodeState::ReqWaiting || !st.timers[0]) return false;
    if (st.rounds + 1 > max_rounds) return false;
    return st.pending.empty() && !any_responder_armed(st);
}

struct FillChoice {
    StimulusKind kind;
    NodeId node;
    NodeId peer;
};

std::vector<FillChoice> fill_choices(const SState& st) {
    std::vector<FillChoice> out;
    std::vector<FillChoice> rx;
    for (const auto& p : st.pending) {
        StimulusKind k =
            p.cls == MessageClass::Request ? StimulusKind::ReqRx : StimulusKind::RespRx;
        rx.push_back({k, p.receiver, p.sender});
    }
    std::sort(rx.begin(), rx.end(), [](const FillChoice& a, const FillChoice& b) {
        if (a.node != b.node) return a.node < b.node;
        if (a.kind != b.kind) return a.kind < b.kind;
        return a.peer < b.peer;
    });
    rx.erase(std::unique(rx.begin(), rx.end(),
                         [](const FillChoice& a, const FillChoice& b) {
                             return a.kind == b.kind && a.node == b.node && a.peer == b.peer;
                         }),
             rx.end());
    out = rx;
    for (std::size_t k = 1; k < st.nodes.size(); ++k)
        if (st.nodes[k] == NodeState::RespArmed) out.push_back({StimulusKind::RespTimer, k, k});
    return out;
}

struct ReplayOut {
    bool done = false;
    std::vector<ChainEvent> completed;
    std::vector<Shadow> shadows;
    std::string reason;
};

bool spine_matches(const ChainEvent& spine, const ChainEvent& applied) {
    if (spine.kind != applied.kind || spine.node != applied.node) return false;
    if (spine.kind == StimulusKind::RespRx && spine.peer != applied.peer) return false;
    return true;
}

void replay_dfs(const SState& st, std::size_t pos, const std::vector<ChainEvent>& spine,
                const LossPattern& losses, int max_rounds, int budget,
                std::vector<ChainEvent> done, std::vector<Shadow> shadows, ReplayOut& out) {
    if (out.done) return;

    if (pos == spine.size()) {
        // Drain the remaining receptions; a still-armed responder afterwards
        // would answer outside the predicted sequence.
        SState cur = st;
        auto rest = done;
        auto sh = shadows;
        bool progress = true;
        while (progress && !cur.pending.empty()) {
            progress = false;
            auto choices = fill_choices(cur);
            for (const auto& c : choices) {
                if (c.kind == StimulusKind::RespTimer) continue;
                if (apply_sym(cur, losses, c.kind, c.node, c.peer, true, rest, sh)) {
                    progress = true;
                    break;
                }
            }
        }
        if (any_responder_armed(cur)) {
            if (out.reason.empty())
                out.reason = "a responder timer stays armed past the final event";
            return;
        }
        out.done = true;
        out.completed = std::move(rest);
        out.shadows = std::move(sh);
        return;
    }

    const ChainEvent& want = spine[pos];

    // Try the spine event itself.
    {
        SState next = st;
        std::vector<ChainEvent> applied;
        auto sh = shadows;
        bool ok = false;
        if (want.kind == StimulusKind::ReqTimer) {
            ok = req_timer_ready(next, max_rounds) &&
                 apply_sym(next, losses, want.kind, want.node, want.peer, false, applied, sh);
            if (!ok && out.reason.empty() && next.nodes[0] == NodeState::ReqIdle)
                out.reason = "request retransmission blocked: the requester already recovered";
        } else {
            ok = apply_sym(next, losses, want.kind, want.node, want.peer, false, applied, sh);
        }
        if (ok) {
            auto d2 = done;
            for (auto& e : applied) d2.push_back(e);
            // Advance past spine entries satisfied by the chained emissions.
            std::size_t p2 = pos + 1;
            for (std::size_t a = 1; a < applied.size() && p2 < spine.size(); ++a) {
                if (spine_matches(spine[p2], applied[a])) ++p2;
            }
            replay_dfs(next, p2, spine, losses, max_rounds, budget, std::move(d2), sh, out);
            if (out.done) return;
        }
    }

    // Fills. Request retransmissions are never filled: extra rounds would
    // emit transmissions the spine does not carry.
    if (budget <= 0) {
        if (out.reason.empty())
            out.reason = "fill budget exhausted before " + std::string(stimulus_label(want.kind)) +
                         "@" + node_name(want.node) + " became applicable";
        return;
    }
    auto choices = fill_choices(st);
    if (choices.empty()) {
        if (out.reason.empty())
            out.reason = std::string(stimulus_label(want.kind)) + "@" + node_name(want.node) +
                         " is unreachable: nothing pending and no timer armed";
        return;
    }
    for (const auto& c : choices) {
        SState next = st;
        std::vector<ChainEvent> applied;
        auto sh = shadows;
        if (!apply_sym(next, losses, c.kind, c.node, c.peer, true, applied, sh)) continue;
        auto d2 = done;
        for (auto& e : applied) d2.push_back(e);
        replay_dfs(next, pos, spine, losses, max_rounds, budget - 1, std::move(d2), sh, out);
        if (out.done) return;
    }
}

bool tautology(const LinearConstraint& c) {
    SymbolicTime gap = c.gap();
    bool any_pos = false;
    for (const auto& [v, coeff] : gap.terms) {
        (void)v;
        if (coeff < 0) return false;
        if (coeff > 0) any_pos = true;
    }
    if (gap.constant < 0) return false;
    if (gap.constant > 0) return true;
    return any_pos; // all times are strictly positive
}

} // namespace

VerifyResult forward_verify(const ProtocolModel& m, const Chain& chain, const LossPattern& losses,
                            int max_rounds) {
    VerifyResult res;
    if (chain.events.empty()) {
        res.reason = "empty chain";
        return res;
    }

    std::size_t responders = m.responders;
    for (const auto& e : chain.events) {
        responders = std::max<std::size_t>(responders, e.node);
        responders = std::max<std::size_t>(responders, e.peer);
    }

    ReplayOut rep;
    int budget = int(chain.events.size()) + 2 * max_rounds * int(responders + 1);
    replay_dfs(initial_sstate(responders), 0, chain.events, losses, max_rounds, budget, {}, {},
               rep);
    if (!rep.done) {
        res.reason = rep.reason.empty() ? "no completion found" : rep.reason;
        return res;
    }
    res.accepted = true;
    res.completed = rep.completed;

    // Side constraints. Same-node events keep their replay order; every
    // event before a retransmission precedes its expiry; each suppression
    // lands before the fire it cancelled.
    std::vector<LinearConstraint> cons;
    std::set<std::string> seen;
    auto push = [&](SymbolicTime lhs, SymbolicTime rhs) {
        if (lhs.str() == rhs.str()) return;
        LinearConstraint c{std::move(lhs), std::move(rhs), true};
        if (tautology(c)) return;
        if (seen.insert(c.str()).second) cons.push_back(std::move(c));
    };

    std::map<NodeId, std::vector<const ChainEvent*>> per_node;
    for (const auto& e : rep.completed) per_node[e.node].push_back(&e);
    for (auto& [node, evs] : per_node) {
        (void)node;
        for (std::size_t i = 0; i + 1 < evs.size(); ++i)
            push(evs[i]->at, evs[i + 1]->at);
    }
    for (std::size_t i = 0; i < rep.completed.size(); ++i) {
        if (rep.completed[i].kind != StimulusKind::ReqTimer) continue;
        for (std::size_t j = 0; j < i; ++j)
            push(rep.completed[j].at, rep.completed[i].at);
    }
    for (const auto& sh : rep.shadows) push(sh.at, sh.expiry);

    res.side_constraints = std::move(cons);
    return res;
}

// ============================================================================
// inequality formulation
// ============================================================================

std::vector<ConstraintGroup> formulate_overhead_constraints(std::size_t responders, Mode mode,
                                                            NodeId survivor) {
    if (responders < 1) throw std::invalid_argument("at least one responder required");
    std::vector<ConstraintGroup> out;

    auto dq = [](NodeId k) { return SymbolicTime::var(delay_var(0, k)); };
    auto dd = [](NodeId a, NodeId b) { return SymbolicTime::var(delay_var(a, b)); };
    auto ex = [](NodeId k) { return SymbolicTime::var(exp_var(k)); };

    if (mode == Mode::Worst) {
        for (NodeId i = 1; i <= responders; ++i) {
            for (NodeId j = 1; j <= responders; ++j) {
                if (i == j) continue;
                ConstraintGroup g{i, j, {}};
                // i answers before j's response reaches it.
                SymbolicTime lhs1 = dq(i);
                lhs1 += ex(i);
                SymbolicTime rhs1 = dq(j);
                rhs1 += ex(j);
                rhs1 += dd(j, i);
                g.alternatives.push_back({LinearConstraint{lhs1, rhs1, true}});
                // j's response passes i before i hears the request.
                SymbolicTime lhs2 = dq(j);
                lhs2 += ex(j);
                lhs2 += dd(j, i);
                g.alternatives.push_back({LinearConstraint{lhs2, dq(i), true}});
                out.push_back(std::move(g));
            }
        }
        return out;
    }

    if (survivor < 1 || survivor > responders)
        throw std::invalid_argument("survivor out of range");
    for (NodeId i = 1; i <= responders; ++i) {
        if (i == survivor) continue;
        ConstraintGroup g{i, survivor, {}};
        SymbolicTime supp = dq(survivor);
        supp += ex(survivor);
        supp += dd(survivor, i);
        SymbolicTime fire = dq(i);
        fire += ex(i);
        // i arms before the suppression lands, and it lands before i fires.
        g.alternatives.push_back(
            {LinearConstraint{dq(i), supp, true}, LinearConstraint{supp, fire, true}});
        out.push_back(std::move(g));
    }
    return out;
}

// ============================================================================
// response-time synthesis
// ============================================================================

namespace {

// Affine evaluation over interval hints; vars without a hint poison the
// result (returned nullopt) so the pruning stays conservative.
std::optional<Interval> eval_over(const SymbolicTime& t,
                                  const std::map<std::string, Interval>& hints) {
    Interval acc{t.constant, t.constant};
    for (const auto& [v, coeff] : t.terms) {
        auto it = hints.find(v);
        if (it == hints.end()) return std::nullopt;
        Interval scaled = scale(it->second, coeff);
        acc = add(acc, scaled);
    }
    return acc;
}

bool hints_admit(const std::vector<LinearConstraint>& cons,
                 const std::map<std::string, Interval>& hints) {
    if (hints.empty()) return true;
    for (const auto& c : cons) {
        auto l = eval_over(c.lhs, hints);
        auto r = eval_over(c.rhs, hints);
        if (!l || !r) continue;
        OrderSet os = compare_intervals(*l, *r);
        if (!os.lt && !(c.strict == false && os.eq)) return false;
    }
    return true;
}

} // namespace

ResponseTimeResult synthesize_response_time(const ProtocolModel& m,
                                            const ResponseTimeOptions& opt) {
    ResponseTimeResult res;
    if (opt.survivor < 1 || opt.survivor > opt.responders) {
        res.note = "survivor out of range";
        return res;
    }
    int bound = opt.allow_loss ? opt.max_rounds : 1;
    auto chains =
        backward_search(m, Stimulus{StimulusKind::RespRx, 0, opt.survivor}, bound);

    for (auto it = chains.rbegin(); it != chains.rend(); ++it) {
        const Chain& chain = *it;
        // The chain's earlier rounds reached the survivor and it answered;
        // those answers must have been dropped at the requester alone.
        LossPattern losses;
        for (int r = 1; r < chain.rounds; ++r)
            losses.insert(LossKey{r, MessageClass::Response, 0});

        ProtocolModel sized = build_tsm(opt.responders);
        VerifyResult v = forward_verify(sized, chain, losses, std::max(bound, chain.rounds));
        if (!v.accepted) continue;
        if (!hints_admit(v.side_constraints, opt.value_hints)) continue;

        res.ok = true;
        res.spine = chain;
        res.verification = std::move(v);
        res.response_time = chain.events.back().at;
        res.losses = std::move(losses);
        res.rounds = chain.rounds;
        return res;
    }
    res.note = "no chain verifies within the round bound";
    return res;
}

// ============================================================================
// interval branching
// ============================================================================

std::vector<Branch> expand_branches(const std::vector<PendingItem>& pending, bool backward) {
    std::vector<Branch> out;
    for (std::size_t w = 0; w < pending.size(); ++w) {
        Branch b;
        b.winner = w;
        bool possible = true;
        for (std::size_t o = 0; o < pending.size(); ++o) {
            if (o == w) continue;
            OrderSet os = compare_intervals(pending[w].value, pending[o].value);
            if (!os.lt && !os.eq) {
                possible = false;
                break;
            }
            if (os.eq && !os.lt) {
                b.tied.push_back(o);
                b.conditions.push_back(pending[w].label + " = " + pending[o].label);
                continue;
            }
            b.conditions.push_back(pending[w].label + " < " + pending[o].label);
        }
        if (!possible) continue;
        for (std::size_t o = 0; o < pending.size(); ++o) {
            if (o == w) continue;
            if (std::find(b.tied.begin(), b.tied.end(), o) != b.tied.end()) continue;
            PendingItem rem = pending[o];
            rem.value = backward ? add(rem.value, pending[w].value)
                                 : elapse(rem.value, pending[w].value);
            b.remaining.push_back(std::move(rem));
        }
        out.push_back(std::move(b));
    }
    return out;
}

Interval backward_start_window(const Interval& exp) { return Interval{Rat(0), exp.hi}; }

} // namespace tsm
