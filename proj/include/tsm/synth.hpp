#pragma once

// Scenario synthesis around a target event. The search runs backward from
// the target through the implication rules (a reception implies an earlier
// transmission; an expiry implies the timer was armed one duration earlier;
// a state implies its creating transition) until it reaches the initial
// loss, then a forward replay completes the skeleton with the events the
// implications skipped and derives the inequalities that make the completed
// schedule real.

#include "tsm/interval.hpp"
#include "tsm/protocol.hpp"
#include "tsm/symbolic.hpp"

#include <map>
#include <string>
#include <vector>

namespace tsm {

enum class Mode { Worst, Best };
enum class Objective { Maximize, Minimize };

struct TargetEvent {
    StimulusKind kind;
    Objective objective = Objective::Maximize;
};

struct WantedCondition {
    NodeState state;
    std::string created_by;  // rule name
    SymbolicTime at;         // creation time for a representative responder
};

// Rules whose firing the scenario needs (wanted) versus rules that nullify
// the target's enabling condition (unwanted), from a scan of the rule table.
struct TransitionClassification {
    std::vector<std::string> wanted;
    std::vector<std::string> unwanted;
    std::vector<WantedCondition> conditions;
};

TransitionClassification classify_transitions(const ProtocolModel& m, const TargetEvent& target);

// One event on an implication chain. Times are anchored at the initial
// request transmission (= 0) and assume round-invariant timer durations.
struct ChainEvent {
    StimulusKind kind;
    NodeId node;
    NodeId peer; // sender for receptions, else == node
    SymbolicTime at;
    int round = 1;     // request round in effect
    bool fill = false; // inserted by the forward completion

    bool operator==(const ChainEvent&) const = default;
};

struct Chain {
    std::vector<ChainEvent> events; // forward order, the initial loss first
    int rounds = 1;                 // request transmissions on the chain
};

std::string chain_str(const Chain& c);

// All implication chains from the given event back to the initial loss,
// branching where a request transmission may stem from either the loss or a
// request-timer expiry. Chains needing more than max_rounds requests are cut.
// Deterministic order: fewest rounds first, then lexicographic.
std::vector<Chain> backward_search(const ProtocolModel& m, const Stimulus& from, int max_rounds);

// Chains ending at the transition that creates the given node state
// (RespArmed or ReqWaiting; other states have no timer to justify).
std::vector<Chain> backward_search_state(const ProtocolModel& m, NodeId node, NodeState state,
                                         int max_rounds);

struct VerifyResult {
    bool accepted = false;
    std::string reason;                // rejection cause
    std::vector<ChainEvent> completed; // spine plus fills, replay order
    std::vector<LinearConstraint> side_constraints;
};

// Replays a chain forward, inserting the events the implications skipped:
// in-flight messages must be received (or be in the loss pattern) and armed
// response timers must resolve before a request retransmission fires. The
// fill budget is chain length + 2 * max_rounds. On acceptance the returned
// constraints order same-node events, keep every pre-retransmission event
// ahead of the retransmission, and record each suppression as arriving
// before the cancelled timer would have fired.
VerifyResult forward_verify(const ProtocolModel& m, const Chain& chain, const LossPattern& losses,
                            int max_rounds);

// Per-pair inequality alternatives for one round without losses. Worst mode:
// responder i stays unsuppressed against j by answering first or by j's
// response passing before i arms. Best mode: every other responder arms
// before the surviving responder's answer lands and is suppressed by it.
struct ConstraintGroup {
    NodeId i;
    NodeId j;
    std::vector<std::vector<LinearConstraint>> alternatives; // disjunction of conjunctions
};

std::vector<ConstraintGroup> formulate_overhead_constraints(std::size_t responders, Mode mode,
                                                            NodeId survivor = 1);

struct ResponseTimeOptions {
    std::size_t responders = 1;
    int max_rounds = 2;
    NodeId survivor = 1;    // the responder whose answer finally recovers
    bool allow_loss = true; // false restricts the search to one round
    // Optional value ranges; chains whose side constraints admit no strict
    // order under these ranges are pruned (interval branching).
    std::map<std::string, Interval> value_hints;
};

struct ResponseTimeResult {
    bool ok = false;
    std::string note;
    Chain spine;
    VerifyResult verification; // completed sequence + side constraints
    SymbolicTime response_time;
    LossPattern losses;
    int rounds = 0;
};

// Longest-recovery scenario: enumerates chains for the requester's final
// response reception by round count, pairs each multi-round chain with the
// selective losses it implies (the survivor's earlier answers dropped at the
// requester only), and keeps the deepest chain that verifies forward.
ResponseTimeResult synthesize_response_time(const ProtocolModel& m,
                                            const ResponseTimeOptions& opt);

// --- interval branching ----------------------------------------------------

// A quantity that can resolve next: a running timer or an in-flight message.
struct PendingItem {
    std::string label;
    Interval value; // remaining time (forward) / time distance (backward)
};

struct Branch {
    std::size_t winner;                   // index of the item resolving first
    std::vector<std::size_t> tied;        // items resolving at the same instant
    std::vector<std::string> conditions;  // e.g. "Exp_i < d_i_j"
    std::vector<PendingItem> remaining;   // the others, decremented/incremented
};

// Successor (forward) or predecessor (backward) branches of a state with
// several pending quantities. A branch exists iff compare_intervals admits
// its order pattern; ties fold into the winner's branch.
std::vector<Branch> expand_branches(const std::vector<PendingItem>& pending, bool backward);

// Backward searches meet the start of a timer whose elapsed share is
// unknown: a duration Exp with x time already spent behaves as [0, hi(Exp)].
Interval backward_start_window(const Interval& exp);

} // namespace tsm
