#pragma once

// Exact-rational linear feasibility. Strict inequalities become closed ones
// through a configurable margin, single-variable rows fold into variable
// bounds, and the rest goes through a phase-one simplex with Bland's rule,
// so no floating point enters any decision.

#include "tsm/interval.hpp"
#include "tsm/symbolic.hpp"
#include "tsm/synth.hpp"
#include "tsm/topology.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tsm {

struct VarDecl {
    std::string name;
    Rat lo = Rat(0);
    bool strict_lo = true; // lo itself excluded (delays and timers are positive)
    std::optional<Rat> hi; // inclusive cap

    bool operator==(const VarDecl&) const = default;
};

struct ConstraintSystem {
    std::vector<VarDecl> vars;
    std::map<std::string, Rat> fixed;
    std::vector<LinearConstraint> constraints;

    VarDecl* find_var(const std::string& name);
    const VarDecl* find_var(const std::string& name) const;
    VarDecl& declare(const std::string& name); // idempotent, default bounds

    std::string serialize() const;

    bool operator==(const ConstraintSystem&) const = default;
};

struct SystemParse {
    std::optional<ConstraintSystem> system;
    std::string error;
    int line = 0; // 1-based, 0 when not line-specific
};

// Inverse of ConstraintSystem::serialize, byte-exact on round-trip.
SystemParse parse_constraint_system(const std::string& text);

struct Solution {
    enum class Status { Feasible, Infeasible };
    Status status = Status::Infeasible;
    Assignment assignment; // every declared and fixed variable
    std::string detail;    // human-readable infeasibility cause
};

// Any point satisfying all constraints and bounds, with strict inequalities
// enforced by at least `epsilon`. Variables appearing only in constraints
// are auto-declared with default bounds.
Solution solve_feasible(const ConstraintSystem& sys, const Rat& epsilon);

struct SubsetResult {
    std::vector<std::size_t> kept; // ascending constraint indices
    std::vector<std::size_t> dropped;
    Solution solution; // for the kept subset
};

// Largest feasible subset of the constraints (bounds always hold). Ties
// resolve to the subset keeping the lowest indices.
SubsetResult max_feasible_subset(const ConstraintSystem& sys, const Rat& epsilon);

struct LinkSubstitution {
    std::optional<ConstraintSystem> system;
    std::string error;
};

// Rewrites every end-to-end delay variable as the sum of the link variables
// on its declared path. Fixed delay entries stay numeric. A delay variable
// without a declared path is an error naming the pair.
LinkSubstitution substitute_link_delays(const ConstraintSystem& sys, const LinkTopology& topo);

// --- delay synthesis ---------------------------------------------------------

struct TimerSpec {
    enum class Kind { Scalars, Intervals, Distance };
    Kind kind = Kind::Intervals;
    std::vector<Rat> scalars;        // per responder, index 0 = responder 1
    std::vector<Interval> intervals; // per responder
    Rat c1 = 1;                      // Distance: lower factor on the distance estimate
    Rat c2 = 0;                      // Distance: window width factor
};

struct TopologySynthOptions {
    std::size_t responders = 3;
    Mode mode = Mode::Worst;
    TimerSpec timers;
    Rat pin_requester_delay = 100; // d(Q,i) and d(i,Q) unless solved
    Rat default_delay = 100;       // responder pairs the mode leaves free
    Rat epsilon = 1;
    NodeId survivor = 1; // best mode only
};

struct TopologySynthResult {
    enum class Status { Absolute, Maximal, Infeasible };
    Status status = Status::Infeasible;
    DelayMatrix matrix; // valid unless Infeasible
    ConstraintSystem system;
    Solution solution;
    std::vector<std::size_t> dropped; // constraints dropped in Maximal mode
    std::string note;
};

// Builds a delay matrix under which the chosen mode's inequalities hold for
// every timer draw. Worst mode orders responders by their timer windows and
// separates each ordered pair by the largest possible expiry gap; best mode
// solves for request and survivor-to-peer delays so the survivor's answer
// suppresses everyone. When the full system is infeasible the largest
// feasible subset is solved instead and the result is marked Maximal.
TopologySynthResult synthesize_topology(const TopologySynthOptions& opt);

// --- timer synthesis ---------------------------------------------------------

struct TimerConfigOptions {
    std::size_t responders = 2;
    Mode mode = Mode::Worst;
    std::optional<Interval> uniform;  // one bound for every ordered pair
    std::optional<DelayMatrix> exact; // alternative: exact per-pair delays
    std::optional<Rat> exp_cap;       // inclusive cap on every timer value
    Rat epsilon = 1;
    NodeId survivor = 1; // best mode only
};

struct TimerConfigResult {
    bool feasible = false;
    std::vector<LinearConstraint> conditions; // over Exp_1..Exp_n
    std::string generic; // pattern over Exp_i/Exp_j when delays are uniform
    Assignment witness;  // a satisfying timer vector when feasible
    std::string detail;  // binding conflict when infeasible
    ConstraintSystem system;
};

// Relative timer conditions for the chosen mode over the given delays,
// folded conservatively over delay uncertainty, plus a witness assignment.
TimerConfigResult configure_timers(const TimerConfigOptions& opt);

} // namespace tsm
