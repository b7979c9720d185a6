#pragma once

// Executable model of one loss-recovery exchange under timer suppression.
// The requester (node 0) multicasts a request after detecting a loss and
// re-sends it on request-timer expiry; every responder arms a randomized
// response timer when the request arrives, answers on expiry, and cancels
// its timer when it hears someone else's response first.
//
// Global state is the cross product of per-node states plus in-flight
// messages and running timers. Times are absolute; a state carries no clock
// of its own. Arrival and expiry times are optional because an inverse
// transition cannot always reconstruct them: when every copy of an emission
// was selectively lost, the firing instant leaves no trace in the successor,
// and the predecessor is reported with those times unset rather than
// fabricated. States produced by forward stepping are always fully timed.

#include "tsm/rational.hpp"
#include "tsm/topology.hpp"

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace tsm {

enum class NodeState {
    ReqIdle,    // requester, nothing outstanding
    ReqWaiting, // requester with request timer running
    RespIdle,   // potential responder
    RespArmed,  // responder with response timer running
};
std::string node_state_str(NodeState s);

enum class StimulusKind {
    Loss,      // loss detected at the requester
    ReqTx,     // request multicast leaves the requester
    ReqRx,     // request arrives at one responder
    RespTx,    // response multicast leaves a responder
    RespRx,    // response arrives at one node
    RespTimer, // response timer expiry
    ReqTimer,  // request timer expiry
};
std::string stimulus_label(StimulusKind k); // "loss", "req_tx", ...
std::optional<StimulusKind> parse_stimulus_label(const std::string& s);

enum class MessageClass { Request, Response };

struct Stimulus {
    StimulusKind kind;
    NodeId node; // where it occurs
    NodeId peer; // sender, for receptions; == node otherwise
    bool operator==(const Stimulus&) const = default;
};

enum class TimerAction { None, ArmRequest, ArmResponse, Rearm, Clear };

struct StateChange {
    NodeState from;
    NodeState to;
    TimerAction timer;
};

struct TransitionRule {
    std::string name; // loss, tx_req, rcv_req, res_tmr, tx_res, rcv_res, req_tmr
    StimulusKind event;
    std::vector<StateChange> changes;        // applied where the start state matches
    std::optional<StimulusKind> emits;       // chained emission at the same instant
    std::optional<MessageClass> multicasts;  // tx rules: fan a message out to the group
};

struct ProtocolModel {
    std::size_t responders = 0;
    std::vector<TransitionRule> rules;

    std::size_t nodes() const { return responders + 1; }
    const TransitionRule* rule(const std::string& name) const;
    const TransitionRule* rule_for_event(StimulusKind k) const;
};

ProtocolModel build_tsm(std::size_t responders);

NodeState initial_node_state(NodeId id);

// --- global state ---------------------------------------------------------

struct Arrival {
    MessageClass cls;
    NodeId sender;
    NodeId receiver;
    std::optional<Rat> at; // absolute arrival time
    int round;             // request round current when the message was emitted
    bool operator==(const Arrival&) const = default;
};

struct TimerInfo {
    std::optional<Rat> expiry; // absolute
    Rat duration;              // expiry minus arming time
    int round;                 // request round current when armed
    bool operator==(const TimerInfo&) const = default;
};

struct GlobalState {
    std::vector<NodeState> nodes;
    std::vector<Arrival> arrivals;                // canonical order, see normalize()
    std::vector<std::optional<TimerInfo>> timers; // per node
    int rounds = 0;                               // request transmissions so far

    void normalize();
    bool fully_timed() const;
    bool operator==(const GlobalState&) const = default;
};

GlobalState initial_state(const ProtocolModel& m);

// Selective losses: drop the copy of the given class addressed to `receiver`
// in the given request round. A response's round is the round of the timer
// that fired it.
struct LossKey {
    int round;
    MessageClass cls;
    NodeId receiver;
    auto operator<=>(const LossKey&) const = default;
};
using LossPattern = std::set<LossKey>;

// Delay matrix plus timer durations. exp(0, r) is the request timer duration
// for round r; exp(i, r) the response timer duration drawn at node i for a
// round-r request. Must be pure: repeated queries return the same value.
struct TimingEnv {
    const DelayMatrix* delays = nullptr;
    std::function<Rat(NodeId, int)> exp;
};

struct TimedEvent {
    Rat at;
    StimulusKind kind;
    NodeId node;
    NodeId peer;
    bool operator==(const TimedEvent&) const = default;
};

struct StepResult {
    GlobalState state;
    std::vector<TimedEvent> events; // applied stimulus plus chained emissions
    std::optional<std::string> error;
};

// Applies one stimulus to a fully timed state. Event times are read off the
// state (arrival times, timer expiries); `when` is consulted only for Loss
// (defaults to 0) and for directly injected ReqTx/RespTx. Chained emissions
// (e.g. the request transmission right after a loss) happen within the same
// step at the same instant.
StepResult step(const ProtocolModel& m, const TimingEnv& env, const LossPattern& losses,
                const GlobalState& g, const Stimulus& s,
                std::optional<Rat> when = std::nullopt);

// Stimuli that can occur next: the initial loss on a fresh state, otherwise
// the receptions at the earliest pending time, or the timer expiries there
// when no reception shares it (receptions win ties, then request before
// response class, then ascending node id).
std::vector<Stimulus> enabled(const ProtocolModel& m, const GlobalState& g);

struct Predecessor {
    GlobalState state;
    std::string rule;
    Stimulus event;
    std::optional<Rat> at; // event time, when the successor pins it
};

// Inverse transitions: (state, rule) pairs whose step() yields g, covering
// both state-changing transitions and no-effect message consumptions (the
// latter enumerated per plausible emission round). Times are reconstructed
// from surviving evidence (timer expiries, still-pending message copies) and
// left unset where the successor does not determine them.
std::vector<Predecessor> predecessors(const ProtocolModel& m, const TimingEnv& env,
                                      const LossPattern& losses, const GlobalState& g);

} // namespace tsm
