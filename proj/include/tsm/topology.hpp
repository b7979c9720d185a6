#pragma once

// Point-to-point delay model. The group is one requester (node 0, printed
// "Q") plus n responders (nodes 1..n). Per-VLAN unicast delays are flattened
// into a full matrix; a link-level topology can be folded into the same
// matrix by summing path links.

#include "tsm/interval.hpp"
#include "tsm/rational.hpp"

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace tsm {

using NodeId = std::size_t; // 0 is the requester

std::string node_name(NodeId id);              // "Q", "1", "2", ...
std::optional<NodeId> parse_node(const std::string& s);

class DelayMatrix {
public:
    DelayMatrix() = default;
    explicit DelayMatrix(std::size_t node_count)
        : n_(node_count), d_(node_count * node_count, Rat(0)) {}

    std::size_t nodes() const { return n_; }
    std::size_t responders() const { return n_ == 0 ? 0 : n_ - 1; }

    const Rat& at(NodeId from, NodeId to) const { return d_[from * n_ + to]; }
    void set(NodeId from, NodeId to, Rat v) { d_[from * n_ + to] = std::move(v); }

    bool operator==(const DelayMatrix&) const = default;

private:
    std::size_t n_ = 0;
    std::vector<Rat> d_;
};

struct MatrixViolation {
    NodeId from;
    NodeId to;
    std::string what; // e.g. "diagonal entry must be zero"
};

// Checks: zero diagonal, strictly positive off-diagonal entries.
std::vector<MatrixViolation> validate(const DelayMatrix& d);

struct LinkTopology {
    std::map<std::string, Rat> links;                                // id -> delay
    std::map<std::pair<NodeId, NodeId>, std::vector<std::string>> paths;
    std::size_t node_count = 0;
};

struct PathError {
    NodeId from;
    NodeId to;
    std::string what;
};

// Folds link paths into end-to-end delays. Every ordered pair of distinct
// nodes must have a path whose links all exist; the first missing pair or
// unknown link id is reported instead of a matrix.
struct EndToEndResult {
    std::optional<DelayMatrix> matrix;
    std::optional<PathError> error;
};
EndToEndResult end_to_end(const LinkTopology& topo);

} // namespace tsm
