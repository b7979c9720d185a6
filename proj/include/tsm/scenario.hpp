#pragma once

// Scenario files: a synthesized exchange packaged as structured text that a
// later run can re-validate end to end. Everything is exact rationals; the
// serializer is canonical, so parse-then-serialize reproduces its input byte
// for byte.

#include "tsm/protocol.hpp"
#include "tsm/sim.hpp"
#include "tsm/solve.hpp"
#include "tsm/synth.hpp"
#include "tsm/topology.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tsm {

enum class SolverStatus { Absolute, Maximal };

struct Scenario {
    std::size_t responders = 0;
    Mode mode = Mode::Worst;
    SolverStatus solver = SolverStatus::Absolute;
    Rat epsilon = 1;
    NodeId survivor = 1;
    int max_rounds = 1;
    std::uint64_t seed = 0;
    TimerPolicy policy;

    // What the scenario promises: a response count, a symbolic recovery
    // time, or nothing (plain simulation input).
    std::optional<int> claim_responses;
    std::optional<SymbolicTime> claim_recovery;

    LossPattern losses;
    DelayMatrix delays;
    ConstraintSystem system;          // the inequalities the delays satisfy
    std::vector<ChainEvent> sequence; // witnessing event sequence, may be empty

    bool operator==(const Scenario&) const = default;
};

std::string serialize_scenario(const Scenario& s);

struct ScenarioParse {
    std::optional<Scenario> scenario;
    std::string error;
    int line = 0; // 1-based
};

ScenarioParse parse_scenario(const std::string& text);

// Re-validates a scenario from scratch: the delay matrix is well formed and
// sized, the embedded constraints hold under the stored delays and the timer
// values the seed yields, the stored sequence replays (event set and times),
// and a fresh simulation reproduces the claim. Returns one message per
// failed check; empty means the scenario verifies.
std::vector<std::string> verify_scenario(const Scenario& s);

} // namespace tsm
