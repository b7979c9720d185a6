#include "tsm/topology.hpp"

namespace tsm {

std::string node_name(NodeId id) {
    return id == 0 ? "Q" : std::to_string(id);
}

std::optional<NodeId> parse_node(const std::string& s) {
    if (s == "Q" || s == "q" || s == "0") return NodeId{0};
    if (s.empty()) return std::nullopt;
    NodeId v = 0;
    for (char c : s) {
        if (c < '0' || c > '9') return std::nullopt;
        v = v * 10 + static_cast<NodeId>(c - '0');
        if (v > 100000) return std::nullopt;
    }
    return v;
}

std::vector<MatrixViolation> validate(const DelayMatrix& d) {
    std::vector<MatrixViolation> out;
    for (NodeId i = 0; i < d.nodes(); ++i) {
        for (NodeId j = 0; j < d.nodes(); ++j) {
            if (i == j) {
                if (d.at(i, j) != 0)
                    out.push_back({i, j, "diagonal entry must be zero"});
            } else if (d.at(i, j) <= 0) {
                out.push_back({i, j, "off-diagonal delay must be strictly positive"});
            }
        }
    }
    return out;
}

EndToEndResult end_to_end(const LinkTopology& topo) {
    EndToEndResult res;
    DelayMatrix m(topo.node_count);
    for (NodeId i = 0; i < topo.node_count; ++i) {
        for (NodeId j = 0; j < topo.node_count; ++j) {
            if (i == j) continue;
            auto it = topo.paths.find({i, j});
            if (it == topo.paths.end() || it->second.empty()) {
                res.error = PathError{i, j, "no path between " + node_name(i) + " and " + node_name(j)};
                return res;
            }
            Rat sum(0);
            for (const auto& link : it->second) {
                auto lk = topo.links.find(link);
                if (lk == topo.links.end()) {
                    res.error = PathError{i, j, "unknown link '" + link + "' on path " +
                                                    node_name(i) + "->" + node_name(j)};
                    return res;
                }
                sum += lk->second;
            }
            m.set(i, j, sum);
        }
    }
    res.matrix = std::move(m);
    return res;
}

} // namespace tsm
