#pragma once

// Discrete-event execution of the suppression exchange over a concrete delay
// matrix. The event loop drives the protocol model's step()/enabled() pair,
// so simulated traces and searched traces share one transition semantics.
//
// Randomized timer draws are reproducible and query-order independent: the
// draw for (node, round) is the first output of a std::mt19937_64 seeded via
// std::seed_seq{seed, node, round}, mapped into the interval [lo, hi] as
// lo + (hi-lo) * r / 2^64 in exact rational arithmetic.

#include "tsm/interval.hpp"
#include "tsm/protocol.hpp"
#include "tsm/topology.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace tsm {

struct TimerPolicy {
    enum class Kind {
        DeterministicDistance, // Exp_i = c1 * E_i, E_i = (d_i_Q + d_Q_i)/2
        UniformFixed,          // Exp_i drawn from a fixed per-node interval
        UniformDistance,       // Exp_i drawn from [c1*E_i, (c1+c2)*E_i]
        AdaptiveSimplified,    // distance interval, lower edge scaled by heard duplicates
    };
    Kind kind = Kind::DeterministicDistance;
    Rat c1 = Rat(1);
    Rat c2 = Rat(0);
    std::vector<Interval> node_intervals; // UniformFixed: index 0 is responder 1
    Rat exp_q = Rat(1000000);             // request timer duration, every round

    static TimerPolicy deterministic_distance(Rat c1, Rat exp_q);
    static TimerPolicy uniform_fixed(std::vector<Interval> per_node, Rat exp_q);
    // convenience for one designated source responder with its own interval
    static TimerPolicy uniform_fixed_roles(std::size_t responders, NodeId source,
                                           Interval source_iv, Interval other_iv, Rat exp_q);
    static TimerPolicy uniform_distance(Rat c1, Rat c2, Rat exp_q);

    bool operator==(const TimerPolicy&) const = default;
};

std::string policy_kind_label(TimerPolicy::Kind k);
std::optional<TimerPolicy::Kind> parse_policy_kind(const std::string& s);

struct SimConfig {
    DelayMatrix delays;
    TimerPolicy policy;
    std::uint64_t seed = 0;
    LossPattern losses;
    int max_rounds = 1;
};

struct Metrics {
    int responses = 0;             // response transmissions
    bool recovered = false;
    std::optional<Rat> recovery_time; // first response arriving at the requester
    int rounds_used = 0;           // request transmissions
    std::vector<TimedEvent> log;
};

// Runs one loss exchange to quiescence. The request timer stops re-firing
// once max_rounds requests have been sent; a response still in flight after
// that can still recover the requester.
Metrics run(const SimConfig& cfg);

// Closed-form response count for one round without losses: responders are
// processed in ascending firing time V_i = d_Q_i + exp_i, and responder i is
// suppressed exactly when some already-fired j's response lands in i's armed
// window [d_Q_i, V_i] (both ends closed, matching the reception-first tie
// break). Independent of the event loop.
int oracle_max_responses(const DelayMatrix& d, const std::vector<Rat>& exp);

// The timer durations a policy yields for one round, resolved against a
// delay matrix (used to cross-check runs and to evaluate symbolic times).
std::vector<Rat> policy_durations(const TimerPolicy& p, const DelayMatrix& d,
                                  std::uint64_t seed, int round);

struct SweepSpec {
    std::vector<std::pair<std::string, DelayMatrix>> topologies;
    std::vector<std::pair<std::string, TimerPolicy>> policies;
    int repetitions = 1;
    std::uint64_t seed = 0;
    LossPattern losses;
    int max_rounds = 1;
};

struct SweepRow {
    std::string topology;
    std::string policy;
    int repetitions = 0;
    int min_responses = 0;
    int max_responses = 0;
    Rat mean_responses;
    int recovered_runs = 0;
    std::optional<Rat> mean_recovery; // over recovered runs
};

std::vector<SweepRow> sweep(const SweepSpec& spec);

std::string metrics_str(const Metrics& m);
std::string log_str(const std::vector<TimedEvent>& log); // time\tevent\tnode\tpeer
std::string sweep_table(const std::vector<SweepRow>& rows);

} // namespace tsm
