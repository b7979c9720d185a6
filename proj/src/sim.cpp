#include "tsm/sim.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <sstream>

namespace tsm {

TimerPolicy TimerPolicy::deterministic_distance(Rat c1, Rat exp_q) {
    TimerPolicy p;
    p.kind = Kind::DeterministicDistance;
    p.c1 = std::move(c1);
    p.exp_q = std::move(exp_q);
    return p;
}

TimerPolicy TimerPolicy::uniform_fixed(std::vector<Interval> per_node, Rat exp_q) {
    TimerPolicy p;
    p.kind = Kind::UniformFixed;
    p.node_intervals = std::move(per_node);
    p.exp_q = std::move(exp_q);
    return p;
}

TimerPolicy TimerPolicy::uniform_fixed_roles(std::size_t responders, NodeId source,
                                             Interval source_iv, Interval other_iv, Rat exp_q) {
    std::vector<Interval> ivs;
    for (NodeId i = 1; i <= responders; ++i) ivs.push_back(i == source ? source_iv : other_iv);
    return uniform_fixed(std::move(ivs), std::move(exp_q));
}

TimerPolicy TimerPolicy::uniform_distance(Rat c1, Rat c2, Rat exp_q) {
    TimerPolicy p;
    p.kind = Kind::UniformDistance;
    p.c1 = std::move(c1);
    p.c2 = std::move(c2);
    p.exp_q = std::move(exp_q);
    return p;
}

std::string policy_kind_label(TimerPolicy::Kind k) {
    switch (k) {
        case TimerPolicy::Kind::DeterministicDistance: return "deterministic-distance";
        case TimerPolicy::Kind::UniformFixed: return "uniform-fixed";
        case TimerPolicy::Kind::UniformDistance: return "uniform-distance";
        case TimerPolicy::Kind::AdaptiveSimplified: return "adaptive-simplified";
    }
    return "?";
}

std::optional<TimerPolicy::Kind> parse_policy_kind(const std::string& s) {
    if (s == "deterministic-distance") return TimerPolicy::Kind::DeterministicDistance;
    if (s == "uniform-fixed") return TimerPolicy::Kind::UniformFixed;
    if (s == "uniform-distance") return TimerPolicy::Kind::UniformDistance;
    if (s == "adaptive-simplified") return TimerPolicy::Kind::AdaptiveSimplified;
    return std::nullopt;
}

namespace {

Rat round_trip_half(const DelayMatrix& d, NodeId i) {
    return (d.at(i, 0) + d.at(0, i)) / 2;
}

// First mt19937_64 output for (seed, node, round), mapped into [lo, hi].
// seed_seq entries are 32-bit, so the seed is split into both halves.
Rat uniform_draw(std::uint64_t seed, NodeId node, int round, const Interval& iv) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(node), static_cast<std::uint32_t>(round)};
    std::mt19937_64 rng(seq);
    std::uint64_t r = rng();
    Rat frac = Rat(BigInt(r), BigInt(1) << 64);
    return iv.lo + (iv.hi - iv.lo) * frac;
}

} // namespace

std::vector<Rat> policy_durations(const TimerPolicy& p, const DelayMatrix& d, std::uint64_t seed,
                                  int round) {
    std::vector<Rat> out;
    for (NodeId i = 1; i < d.nodes(); ++i) {
        switch (p.kind) {
            case TimerPolicy::Kind::DeterministicDistance:
                out.push_back(p.c1 * round_trip_half(d, i));
                break;
            case TimerPolicy::Kind::UniformFixed: {
                const Interval& iv = p.node_intervals.at(i - 1);
                out.push_back(iv.is_point() ? iv.lo : uniform_draw(seed, i, round, iv));
                break;
            }
            case TimerPolicy::Kind::UniformDistance:
            case TimerPolicy::Kind::AdaptiveSimplified: {
                Rat e = round_trip_half(d, i);
                Interval iv{p.c1 * e, (p.c1 + p.c2) * e};
                out.push_back(iv.is_point() ? iv.lo : uniform_draw(seed, i, round, iv));
                break;
            }
        }
    }
    return out;
}

Metrics run(const SimConfig& cfg) {
    ProtocolModel model = build_tsm(cfg.delays.responders());
    Metrics metrics;

    // Duplicates heard per node, for the adaptive policy's per-round lower
    // edge: a node that heard k responses in earlier rounds draws its next
    // timer from an interval whose lower edge is scaled by (1 + k).
    std::map<NodeId, int> heard;
    std::map<std::pair<NodeId, int>, Rat> draw_cache;

    TimingEnv env;
    env.delays = &cfg.delays;
    env.exp = [&](NodeId node, int round) -> Rat {
        if (node == 0) return cfg.policy.exp_q;
        auto key = std::make_pair(node, round);
        auto it = draw_cache.find(key);
        if (it != draw_cache.end()) return it->second;
        Rat v;
        if (cfg.policy.kind == TimerPolicy::Kind::AdaptiveSimplified) {
            Rat e = round_trip_half(cfg.delays, node);
            Rat scale = Rat(1 + heard[node]);
            Interval iv{cfg.policy.c1 * e * scale, (cfg.policy.c1 + cfg.policy.c2) * e};
            if (iv.hi < iv.lo) iv.hi = iv.lo;
            v = iv.is_point() ? iv.lo : uniform_draw(cfg.seed, node, round, iv);
        } else {
            v = policy_durations(cfg.policy, cfg.delays, cfg.seed, round).at(node - 1);
        }
        draw_cache.emplace(key, v);
        return v;
    };

    GlobalState g = initial_state(model);
    StepResult first = step(model, env, cfg.losses, g, {StimulusKind::Loss, 0, 0});
    if (first.error) return metrics;
    g = std::move(first.state);
    metrics.log = std::move(first.events);

    while (true) {
        std::vector<Stimulus> front = enabled(model, g);
        if (front.empty()) break;
        const Stimulus& s = front.front();
        if (s.kind == StimulusKind::ReqTimer && g.rounds >= cfg.max_rounds) {
            // round budget exhausted: the request timer is retired silently
            g.timers[0].reset();
            continue;
        }
        StepResult r = step(model, env, cfg.losses, g, s);
        if (r.error) break; // unreachable on consistent states
        g = std::move(r.state);
        for (const auto& e : r.events) {
            if (e.kind == StimulusKind::RespRx) ++heard[e.node];
            if (e.kind == StimulusKind::RespTx) ++metrics.responses;
            if (e.kind == StimulusKind::RespRx && e.node == 0 && !metrics.recovery_time)
                metrics.recovery_time = e.at;
            metrics.log.push_back(e);
        }
    }
    metrics.rounds_used = g.rounds;
    metrics.recovered = metrics.recovery_time.has_value();
    return metrics;
}

int oracle_max_responses(const DelayMatrix& d, const std::vector<Rat>& exp) {
    struct Cand {
        NodeId node;
        Rat fire; // d_Q_i + exp_i
    };
    std::vector<Cand> cands;
    for (NodeId i = 1; i < d.nodes(); ++i) cands.push_back({i, d.at(0, i) + exp.at(i - 1)});
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        return std::tie(a.fire, a.node) < std::tie(b.fire, b.node);
    });
    std::vector<Cand> fired;
    for (const auto& c : cands) {
        Rat armed_at = d.at(0, c.node);
        bool suppressed = false;
        for (const auto& f : fired) {
            Rat lands = f.fire + d.at(f.node, c.node);
            if (armed_at <= lands && lands <= c.fire) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) fired.push_back(c);
    }
    return static_cast<int>(fired.size());
}

std::vector<SweepRow> sweep(const SweepSpec& spec) {
    std::vector<SweepRow> rows;
    for (std::size_t ti = 0; ti < spec.topologies.size(); ++ti) {
        for (std::size_t pi = 0; pi < spec.policies.size(); ++pi) {
            SweepRow row;
            row.topology = spec.topologies[ti].first;
            row.policy = spec.policies[pi].first;
            row.repetitions = spec.repetitions;
            Rat total_resp(0), total_rec(0);
            for (int rep = 0; rep < spec.repetitions; ++rep) {
                SimConfig cfg;
                cfg.delays = spec.topologies[ti].second;
                cfg.policy = spec.policies[pi].second;
                cfg.losses = spec.losses;
                cfg.max_rounds = spec.max_rounds;
                cfg.seed = spec.seed * 1000003ULL + ti * 10007ULL + pi * 101ULL +
                           static_cast<std::uint64_t>(rep);
                Metrics m = run(cfg);
                if (rep == 0 || m.responses < row.min_responses) row.min_responses = m.responses;
                if (rep == 0 || m.responses > row.max_responses) row.max_responses = m.responses;
                total_resp += m.responses;
                if (m.recovered) {
                    ++row.recovered_runs;
                    total_rec += *m.recovery_time;
                }
            }
            if (spec.repetitions > 0) row.mean_responses = total_resp / spec.repetitions;
            if (row.recovered_runs > 0) row.mean_recovery = total_rec / row.recovered_runs;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::string metrics_str(const Metrics& m) {
    std::ostringstream os;
    os << "responses\t" << m.responses << "\n";
    os << "recovered\t" << (m.recovered ? "yes" : "no") << "\n";
    os << "recovery\t" << (m.recovery_time ? rat_str(*m.recovery_time) : "-") << "\n";
    os << "rounds\t" << m.rounds_used << "\n";
    return os.str();
}

std::string log_str(const std::vector<TimedEvent>& log) {
    std::ostringstream os;
    for (const auto& e : log) {
        os << rat_str(e.at) << '\t' << stimulus_label(e.kind) << '\t' << node_name(e.node) << '\t';
        bool reception = e.kind == StimulusKind::ReqRx || e.kind == StimulusKind::RespRx;
        os << (reception ? node_name(e.peer) : "-") << '\n';
    }
    return os.str();
}

std::string sweep_table(const std::vector<SweepRow>& rows) {
    std::ostringstream os;
    os << "topology\tpolicy\treps\tmin_resp\tmax_resp\tmean_resp\trecovered\tmean_recovery\n";
    for (const auto& r : rows) {
        os << r.topology << '\t' << r.policy << '\t' << r.repetitions << '\t' << r.min_responses
           << '\t' << r.max_responses << '\t' << rat_str(r.mean_responses) << '\t'
           << r.recovered_runs << '\t' << (r.mean_recovery ? rat_str(*r.mean_recovery) : "-")
           << '\n';
    }
    return os.str();
}

} // namespace tsm
