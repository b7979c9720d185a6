#include "tsm/solve.hpp"

#include <algorithm>
#include <cstdint>
#include <set>
#include <sstream>

namespace tsm {

// ============================================================================
// constraint system container and serialization
// ============================================================================

VarDecl* ConstraintSystem::find_var(const std::string& name) {
    for (auto& v : vars)
        if (v.name == name) return &v;
    return nullptr;
}

const VarDecl* ConstraintSystem::find_var(const std::string& name) const {
    for (const auto& v : vars)
        if (v.name == name) return &v;
    return nullptr;
}

VarDecl& ConstraintSystem::declare(const std::string& name) {
    if (auto* v = find_var(name)) return *v;
    vars.push_back(VarDecl{name, Rat(0), true, std::nullopt});
    return vars.back();
}

std::string ConstraintSystem::serialize() const {
    std::ostringstream os;
    os << "constraint-system v1\n";
    for (const auto& v : vars) {
        os << "var " << v.name << " lo " << rat_str(v.lo) << " "
           << (v.strict_lo ? "strict" : "closed") << " hi "
           << (v.hi ? rat_str(*v.hi) : std::string("none")) << "\n";
    }
    for (const auto& [name, value] : fixed) os << "fix " << name << " = " << rat_str(value) << "\n";
    os << "subject-to\n";
    for (const auto& c : constraints) os << c.str() << "\n";
    os << "end\n";
    return os.str();
}

SystemParse parse_constraint_system(const std::string& text) {
    SystemParse out;
    ConstraintSystem sys;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& msg) {
        out.error = msg;
        out.line = lineno;
        return out;
    };

    if (!std::getline(is, line)) return fail("empty input");
    ++lineno;
    if (line != "constraint-system v1") return fail("unrecognized header: " + line);

    bool in_constraints = false;
    bool ended = false;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (ended) return fail("content after end");
        if (!in_constraints) {
            std::istringstream ls(line);
            std::string word;
            ls >> word;
            if (word == "var") {
                VarDecl v;
                std::string kw_lo, lo_s, mode, kw_hi, hi_s;
                if (!(ls >> v.name >> kw_lo >> lo_s >> mode >> kw_hi >> hi_s) || kw_lo != "lo" ||
                    kw_hi != "hi")
                    return fail("malformed var line");
                auto lo = parse_rat(lo_s);
                if (!lo) return fail("bad lower bound: " + lo_s);
                v.lo = *lo;
                if (mode == "strict")
                    v.strict_lo = true;
                else if (mode == "closed")
                    v.strict_lo = false;
                else
                    return fail("bad bound mode: " + mode);
                if (hi_s != "none") {
                    auto hi = parse_rat(hi_s);
                    if (!hi) return fail("bad upper bound: " + hi_s);
                    v.hi = *hi;
                }
                if (sys.find_var(v.name)) return fail("duplicate variable: " + v.name);
                sys.vars.push_back(std::move(v));
            } else if (word == "fix") {
                std::string name, eq, val_s;
                if (!(ls >> name >> eq >> val_s) || eq != "=") return fail("malformed fix line");
                auto val = parse_rat(val_s);
                if (!val) return fail("bad fixed value: " + val_s);
                sys.fixed[name] = *val;
            } else if (word == "subject-to") {
                in_constraints = true;
            } else {
                return fail("unrecognized directive: " + word);
            }
        } else if (line == "end") {
            ended = true;
        } else {
            auto c = LinearConstraint::parse(line);
            if (!c) return fail("malformed constraint: " + line);
            sys.constraints.push_back(std::move(*c));
        }
    }
    if (!ended) return fail("missing end");
    out.system = std::move(sys);
    out.error.clear();
    out.line = 0;
    return out;
}

// ============================================================================
// feasibility
// ============================================================================

namespace {

// One normalized row: sum(coeff * var) <= rhs, strictness already absorbed.
struct Row {
    std::map<std::string, Rat> coeff;
    Rat rhs;
    std::size_t source; // constraint index, for diagnostics
};

struct Bound {
    Rat value;
    // -1 marks the declaration, otherwise the 0-based constraint index.
    long long source = -1;
};

std::string bound_src(const Bound& b) {
    if (b.source < 0) return "declaration";
    return "constraint " + std::to_string(b.source + 1);
}

} // namespace

Solution solve_feasible(const ConstraintSystem& sys, const Rat& epsilon) {
    Solution sol;

    // Effective variable list: declarations first, then any name appearing
    // in a constraint, in first-appearance order. Fixed names never vary.
    std::vector<VarDecl> vars = sys.vars;
    auto known = [&](const std::string& n) {
        if (sys.fixed.count(n)) return true;
        for (const auto& v : vars)
            if (v.name == n) return true;
        return false;
    };
    for (const auto& c : sys.constraints) {
        for (const auto& part : {c.lhs, c.rhs})
            for (const auto& [n, q] : part.terms) {
                (void)q;
                if (!known(n)) vars.push_back(VarDecl{n, Rat(0), true, std::nullopt});
            }
    }

    for (const auto& [name, value] : sys.fixed) {
        if (const VarDecl* d = sys.find_var(name)) {
            bool below = d->strict_lo ? (value <= d->lo) : (value < d->lo);
            if (below || (d->hi && value > *d->hi)) {
                sol.detail = "fixed value for " + name + " violates its declared bounds";
                return sol;
            }
        }
    }
    std::erase_if(vars, [&](const VarDecl& v) { return sys.fixed.count(v.name) > 0; });

    // Normalize: lhs < rhs  =>  lhs - rhs <= -epsilon (or <= 0 when closed),
    // with fixed variables folded into the right-hand side.
    std::vector<Row> rows;
    for (std::size_t i = 0; i < sys.constraints.size(); ++i) {
        const auto& c = sys.constraints[i];
        Row r;
        r.source = i;
        r.rhs = c.rhs.constant - c.lhs.constant - (c.strict ? epsilon : Rat(0));
        auto add_terms = [&](const SymbolicTime& t, int sign) {
            for (const auto& [n, q] : t.terms) {
                auto it = sys.fixed.find(n);
                if (it != sys.fixed.end()) {
                    r.rhs -= sign * q * it->second;
                } else {
                    r.coeff[n] += sign * q;
                    if (r.coeff[n] == 0) r.coeff.erase(n);
                }
            }
        };
        add_terms(c.lhs, 1);
        add_terms(c.rhs, -1);
        rows.push_back(std::move(r));
    }

    // Presolve: constant rows decide themselves, single-variable rows become
    // bounds. Remaining rows go to the simplex.
    std::map<std::string, Bound> lo, hi;
    for (const auto& v : vars) {
        lo[v.name] = Bound{v.strict_lo ? v.lo + epsilon : v.lo, -1};
        if (v.hi) hi[v.name] = Bound{*v.hi, -1};
    }
    std::vector<Row> dense;
    for (auto& r : rows) {
        if (r.coeff.empty()) {
            if (r.rhs < 0) {
                sol.detail = "constraint " + std::to_string(r.source + 1) +
                             " fails on the fixed values alone";
                return sol;
            }
            continue;
        }
        if (r.coeff.size() == 1) {
            const auto& [name, q] = *r.coeff.begin();
            Rat b = r.rhs / q;
            if (q > 0) {
                auto it = hi.find(name);
                if (it == hi.end() || b < it->second.value)
                    hi[name] = Bound{b, (long long)r.source};
            } else {
                auto it = lo.find(name);
                if (it == lo.end() || b > it->second.value)
                    lo[name] = Bound{b, (long long)r.source};
            }
            continue;
        }
        dense.push_back(std::move(r));
    }
    for (const auto& [name, l] : lo) {
        auto it = hi.find(name);
        if (it != hi.end() && l.value > it->second.value) {
            sol.detail = name + ": lower bound " + rat_str(l.value) + " (" + bound_src(l) +
                         ") exceeds upper bound " + rat_str(it->second.value) + " (" +
                         bound_src(it->second) + ")";
            return sol;
        }
    }

    // Shift x = lo + y with y >= 0; upper bounds become extra rows.
    std::vector<std::string> order;
    for (const auto& v : vars) order.push_back(v.name);
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < order.size(); ++i) col[order[i]] = i;
    const std::size_t n = order.size();

    std::vector<std::vector<Rat>> A;
    std::vector<Rat> b;
    for (const auto& r : dense) {
        std::vector<Rat> row(n, Rat(0));
        Rat rhs = r.rhs;
        for (const auto& [name, q] : r.coeff) {
            row[col[name]] = q;
            rhs -= q * lo[name].value;
        }
        A.push_back(std::move(row));
        b.push_back(std::move(rhs));
    }
    for (const auto& [name, h] : hi) {
        if (!col.count(name)) continue;
        std::vector<Rat> row(n, Rat(0));
        row[col[name]] = 1;
        A.push_back(std::move(row));
        b.push_back(h.value - lo[name].value);
    }

    // Phase-one simplex, dense tableau, Bland's rule.
    const std::size_t m = A.size();
    std::vector<std::size_t> art_of(m, SIZE_MAX);
    std::size_t n_art = 0;
    for (std::size_t i = 0; i < m; ++i)
        if (b[i] < 0) art_of[i] = n_art++;
    const std::size_t cols = n + m + n_art; // structural, slack, artificial
    std::vector<std::vector<Rat>> T(m, std::vector<Rat>(cols + 1, Rat(0)));
    std::vector<std::size_t> basis(m);
    for (std::size_t i = 0; i < m; ++i) {
        bool neg = b[i] < 0;
        for (std::size_t j = 0; j < n; ++j) T[i][j] = neg ? -A[i][j] : A[i][j];
        T[i][n + i] = neg ? Rat(-1) : Rat(1);
        T[i][cols] = neg ? -b[i] : b[i];
        if (neg) {
            T[i][n + m + art_of[i]] = 1;
            basis[i] = n + m + art_of[i];
        } else {
            basis[i] = n + i;
        }
    }
    std::vector<Rat> obj(cols + 1, Rat(0));
    for (std::size_t i = 0; i < m; ++i) {
        if (art_of[i] == SIZE_MAX) continue;
        for (std::size_t j = 0; j <= cols; ++j) obj[j] += T[i][j];
    }
    for (std::size_t a = 0; a < n_art; ++a) obj[n + m + a] = 0;

    while (true) {
        std::size_t enter = SIZE_MAX;
        for (std::size_t j = 0; j < n + m; ++j) {
            if (obj[j] > 0) {
                enter = j;
                break;
            }
        }
        if (enter == SIZE_MAX) break;
        std::size_t leave = SIZE_MAX;
        Rat best;
        for (std::size_t i = 0; i < m; ++i) {
            if (T[i][enter] <= 0) continue;
            Rat ratio = T[i][cols] / T[i][enter];
            if (leave == SIZE_MAX || ratio < best ||
                (ratio == best && basis[i] < basis[leave])) {
                best = ratio;
                leave = i;
            }
        }
        if (leave == SIZE_MAX) break; // cannot happen: the objective is bounded
        Rat pivot = T[leave][enter];
        for (std::size_t j = 0; j <= cols; ++j) T[leave][j] /= pivot;
        for (std::size_t i = 0; i < m; ++i) {
            if (i == leave || T[i][enter] == 0) continue;
            Rat f = T[i][enter];
            for (std::size_t j = 0; j <= cols; ++j) T[i][j] -= f * T[leave][j];
        }
        if (obj[enter] != 0) {
            Rat f = obj[enter];
            for (std::size_t j = 0; j <= cols; ++j) obj[j] -= f * T[leave][j];
        }
        basis[leave] = enter;
    }
    if (obj[cols] != 0) {
        sol.detail = "no assignment satisfies every constraint simultaneously";
        return sol;
    }

    std::vector<Rat> y(n, Rat(0));
    for (std::size_t i = 0; i < m; ++i)
        if (basis[i] < n) y[basis[i]] = T[i][cols];

    sol.status = Solution::Status::Feasible;
    for (std::size_t j = 0; j < n; ++j) sol.assignment[order[j]] = lo[order[j]].value + y[j];
    for (const auto& [name, value] : sys.fixed) sol.assignment[name] = value;
    return sol;
}

// ============================================================================
// maximal feasible subsets
// ============================================================================

namespace {

bool subset_feasible(const ConstraintSystem& base, const std::vector<std::size_t>& kept,
                     const Rat& epsilon, Solution& out) {
    ConstraintSystem sub;
    sub.vars = base.vars;
    sub.fixed = base.fixed;
    for (auto i : kept) sub.constraints.push_back(base.constraints[i]);
    out = solve_feasible(sub, epsilon);
    return out.status == Solution::Status::Feasible;
}

void subset_dfs(const ConstraintSystem& base, const Rat& epsilon, std::size_t idx,
                std::vector<std::size_t>& kept, std::vector<std::size_t>& best) {
    const std::size_t m = base.constraints.size();
    if (kept.size() + (m - idx) <= best.size()) return; // cannot beat the incumbent
    if (idx == m) {
        if (kept.size() > best.size()) best = kept;
        return;
    }
    kept.push_back(idx);
    Solution probe;
    if (subset_feasible(base, kept, epsilon, probe))
        subset_dfs(base, epsilon, idx + 1, kept, best);
    kept.pop_back();
    subset_dfs(base, epsilon, idx + 1, kept, best);
}

} // namespace

SubsetResult max_feasible_subset(const ConstraintSystem& sys, const Rat& epsilon) {
    SubsetResult res;
    std::vector<std::size_t> kept, best;
    subset_dfs(sys, epsilon, 0, kept, best);
    res.kept = best;
    for (std::size_t i = 0; i < sys.constraints.size(); ++i)
        if (std::find(best.begin(), best.end(), i) == best.end()) res.dropped.push_back(i);
    subset_feasible(sys, res.kept, epsilon, res.solution);
    return res;
}

// ============================================================================
// link-level substitution
// ============================================================================

LinkSubstitution substitute_link_delays(const ConstraintSystem& sys, const LinkTopology& topo) {
    LinkSubstitution out;
    ConstraintSystem next;
    next.fixed = sys.fixed;

    std::vector<std::string> link_order;
    auto expand = [&](const SymbolicTime& t, SymbolicTime& into) -> std::string {
        into.constant += t.constant;
        for (const auto& [name, q] : t.terms) {
            auto pair = parse_delay_var(name);
            if (!pair || sys.fixed.count(name)) {
                into.add_term(name, q);
                continue;
            }
            auto path = topo.paths.find(*pair);
            if (path == topo.paths.end())
                return "no path declared for delay " + name;
            for (const auto& link : path->second) {
                if (!topo.links.count(link)) return "unknown link " + link + " on path for " + name;
                std::string lv = link_var(link);
                into.add_term(lv, q);
                if (std::find(link_order.begin(), link_order.end(), lv) == link_order.end())
                    link_order.push_back(lv);
            }
        }
        return {};
    };

    for (const auto& c : sys.constraints) {
        LinearConstraint nc;
        nc.strict = c.strict;
        if (auto err = expand(c.lhs, nc.lhs); !err.empty()) {
            out.error = err;
            return out;
        }
        if (auto err = expand(c.rhs, nc.rhs); !err.empty()) {
            out.error = err;
            return out;
        }
        next.constraints.push_back(std::move(nc));
    }
    for (const auto& v : sys.vars) {
        if (parse_delay_var(v.name) && !sys.fixed.count(v.name)) continue;
        next.vars.push_back(v);
    }
    for (const auto& lv : link_order) next.declare(lv);
    out.system = std::move(next);
    return out;
}

// ============================================================================
// topology synthesis
// ============================================================================

namespace {

// Timer window of responder i as affine expressions of the delay variables;
// constants when the timer spec pins them.
struct TimerWindow {
    SymbolicTime lo;
    SymbolicTime hi;
};

std::string timer_spec_error(const TimerSpec& t, std::size_t n) {
    switch (t.kind) {
    case TimerSpec::Kind::Scalars:
        if (t.scalars.size() != n) return "need one timer value per responder";
        break;
    case TimerSpec::Kind::Intervals:
        if (t.intervals.size() != n) return "need one timer interval per responder";
        for (const auto& iv : t.intervals)
            if (iv.lo > iv.hi) return "timer interval with lo > hi";
        break;
    case TimerSpec::Kind::Distance:
        if (t.c1 <= 0 || t.c2 < 0) return "distance factors must satisfy c1 > 0, c2 >= 0";
        break;
    }
    return {};
}

} // namespace

TopologySynthResult synthesize_topology(const TopologySynthOptions& opt) {
    TopologySynthResult res;
    const std::size_t n = opt.responders;
    if (n < 2) {
        res.note = "needs at least two responders";
        return res;
    }
    if (auto err = timer_spec_error(opt.timers, n); !err.empty()) {
        res.note = err;
        return res;
    }

    const Rat pin = opt.pin_requester_delay;
    ConstraintSystem& sys = res.system;

    if (opt.mode == Mode::Worst) {
        // Requester legs pinned, so every timer window is a constant
        // interval even for distance-derived timers.
        std::vector<Interval> win(n + 1, Interval::point(0));
        for (NodeId i = 1; i <= n; ++i) {
            switch (opt.timers.kind) {
            case TimerSpec::Kind::Scalars:
                win[i] = Interval::point(opt.timers.scalars[i - 1]);
                break;
            case TimerSpec::Kind::Intervals:
                win[i] = opt.timers.intervals[i - 1];
                break;
            case TimerSpec::Kind::Distance:
                win[i] = Interval{opt.timers.c1 * pin, (opt.timers.c1 + opt.timers.c2) * pin};
                break;
            }
        }

        // Early-window responders first; a pair's delay must outlast the
        // largest expiry gap the windows allow.
        std::vector<NodeId> order;
        for (NodeId i = 1; i <= n; ++i) order.push_back(i);
        std::sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
            Rat sa = win[a].lo + win[a].hi, sb = win[b].lo + win[b].hi;
            if (sa != sb) return sa < sb;
            if (win[a].lo != win[b].lo) return win[a].lo < win[b].lo;
            return a < b;
        });

        for (std::size_t ai = 0; ai < order.size(); ++ai) {
            for (std::size_t bi = ai + 1; bi < order.size(); ++bi) {
                NodeId a = order[ai], b = order[bi];
                Rat gap = win[b].hi - win[a].lo;
                sys.declare(delay_var(a, b));
                LinearConstraint c{SymbolicTime(gap), SymbolicTime::var(delay_var(a, b)),
                                   true};
                sys.constraints.push_back(std::move(c));
            }
        }

        res.solution = solve_feasible(sys, opt.epsilon);
        if (res.solution.status != Solution::Status::Feasible) {
            res.note = res.solution.detail;
            return res;
        }

        DelayMatrix mat(n + 1);
        for (NodeId i = 1; i <= n; ++i) {
            mat.set(0, i, pin);
            mat.set(i, 0, pin);
        }
        for (std::size_t ai = 0; ai < order.size(); ++ai) {
            for (std::size_t bi = ai + 1; bi < order.size(); ++bi) {
                NodeId a = order[ai], b = order[bi];
                Rat v = res.solution.assignment.at(delay_var(a, b));
                mat.set(a, b, v);
                mat.set(b, a, v); // window ordering keeps the mirror pair safe
            }
        }
        res.matrix = std::move(mat);
        res.status = TopologySynthResult::Status::Absolute;
        return res;
    }

    // Best mode: the survivor's answer must reach every peer inside the
    // peer's arming window, whatever the timers draw.
    const NodeId s = opt.survivor;
    if (s < 1 || s > n) {
        res.note = "survivor out of range";
        return res;
    }

    sys.fixed[delay_var(0, s)] = pin;
    for (NodeId i = 1; i <= n; ++i) sys.fixed[delay_var(i, 0)] = pin;

    auto window_of = [&](NodeId i) {
        TimerWindow w;
        switch (opt.timers.kind) {
        case TimerSpec::Kind::Scalars:
            w.lo = SymbolicTime(opt.timers.scalars[i - 1]);
            w.hi = w.lo;
            break;
        case TimerSpec::Kind::Intervals:
            w.lo = SymbolicTime(opt.timers.intervals[i - 1].lo);
            w.hi = SymbolicTime(opt.timers.intervals[i - 1].hi);
            break;
        case TimerSpec::Kind::Distance: {
            // Distance estimate (d(i,Q) + d(Q,i)) / 2 with the return leg
            // pinned; the request leg may stay a variable.
            SymbolicTime est(pin / 2);
            if (i == s)
                est.constant += pin / 2;
            else
                est.add_term(delay_var(0, i), Rat(1, 2));
            w.lo = est.scaled(opt.timers.c1);
            w.hi = est.scaled(opt.timers.c1 + opt.timers.c2);
            break;
        }
        }
        return w;
    };

    TimerWindow ws = window_of(s);
    for (NodeId i = 1; i <= n; ++i) {
        if (i == s) continue;
        sys.declare(delay_var(0, i));
        sys.declare(delay_var(s, i));
        TimerWindow wi = window_of(i);

        // Request arrives before the earliest possible suppression.
        SymbolicTime supp_lo(pin);
        supp_lo += ws.lo;
        supp_lo += SymbolicTime::var(delay_var(s, i));
        sys.constraints.push_back(
            LinearConstraint{SymbolicTime::var(delay_var(0, i)), supp_lo, true});

        // Latest possible suppression beats the earliest possible fire.
        SymbolicTime supp_hi(pin);
        supp_hi += ws.hi;
        supp_hi += SymbolicTime::var(delay_var(s, i));
        SymbolicTime fire_lo = SymbolicTime::var(delay_var(0, i));
        fire_lo += wi.lo;
        sys.constraints.push_back(LinearConstraint{supp_hi, fire_lo, true});
    }

    res.solution = solve_feasible(sys, opt.epsilon);
    std::vector<std::size_t> kept_all;
    if (res.solution.status == Solution::Status::Feasible) {
        res.status = TopologySynthResult::Status::Absolute;
    } else {
        SubsetResult sub = max_feasible_subset(sys, opt.epsilon);
        res.solution = sub.solution;
        res.dropped = sub.dropped;
        res.status = TopologySynthResult::Status::Maximal;
        res.note = "full system infeasible; kept " + std::to_string(sub.kept.size()) + " of " +
                   std::to_string(sys.constraints.size()) + " constraints";
        if (res.solution.status != Solution::Status::Feasible) {
            res.status = TopologySynthResult::Status::Infeasible;
            res.note = res.solution.detail;
            return res;
        }
    }

    DelayMatrix mat(n + 1);
    auto value_or = [&](const std::string& v, const Rat& fallback) {
        auto it = res.solution.assignment.find(v);
        return it == res.solution.assignment.end() ? fallback : it->second;
    };
    for (NodeId i = 1; i <= n; ++i) {
        mat.set(i, 0, pin);
        mat.set(0, i, value_or(delay_var(0, i), pin));
    }
    for (NodeId i = 1; i <= n; ++i) {
        for (NodeId j = 1; j <= n; ++j) {
            if (i == j) continue;
            if (i == s)
                mat.set(i, j, value_or(delay_var(s, j), opt.default_delay));
            else if (j == s)
                mat.set(i, j, value_or(delay_var(s, i), opt.default_delay));
            else
                mat.set(i, j, opt.default_delay);
        }
    }
    res.matrix = std::move(mat);
    return res;
}

// ============================================================================
// timer synthesis
// ============================================================================

TimerConfigResult configure_timers(const TimerConfigOptions& opt) {
    TimerConfigResult res;
    const std::size_t n = opt.responders;
    if (n < 1) {
        res.detail = "needs at least one responder";
        return res;
    }
    if (!opt.uniform && !opt.exact) {
        res.detail = "needs delay bounds or an exact delay matrix";
        return res;
    }
    if (opt.exact && opt.exact->nodes() != n + 1) {
        res.detail = "delay matrix size does not match the responder count";
        return res;
    }
    if (opt.uniform && opt.uniform->lo > opt.uniform->hi) {
        res.detail = "delay interval with lo > hi";
        return res;
    }

    // Conservative per-pair bound on d(Q,j) - d(Q,i) + d(j,i): exact when the
    // matrix is given, the interval's worst fold otherwise.
    auto lo_gap = [&](NodeId i, NodeId j) {
        if (opt.exact) return opt.exact->at(0, j) - opt.exact->at(0, i) + opt.exact->at(j, i);
        return opt.uniform->lo - opt.uniform->hi + opt.uniform->lo;
    };
    auto hi_gap = [&](NodeId i, NodeId j) {
        if (opt.exact) return opt.exact->at(0, j) - opt.exact->at(0, i) + opt.exact->at(j, i);
        return opt.uniform->hi - opt.uniform->lo + opt.uniform->hi;
    };

    ConstraintSystem& sys = res.system;
    for (NodeId i = 1; i <= n; ++i) {
        auto& v = sys.declare(exp_var(i));
        v.hi = opt.exp_cap;
    }

    if (opt.mode == Mode::Worst) {
        // Every responder must answer before any earlier answer reaches it.
        // With exact delays both directions of a pair can hold at once; with
        // interval delays only an ordered chain survives the fold.
        auto emit = [&](NodeId i, NodeId j) {
            SymbolicTime rhs = SymbolicTime::var(exp_var(j));
            rhs.constant += lo_gap(i, j);
            sys.constraints.push_back(
                LinearConstraint{SymbolicTime::var(exp_var(i)), rhs, true});
        };
        for (NodeId i = 1; i <= n; ++i)
            for (NodeId j = 1; j <= n; ++j) {
                if (i == j) continue;
                if (opt.exact || i < j) emit(i, j);
            }
        if (opt.uniform && n >= 2) {
            SymbolicTime rhs = SymbolicTime::var("Exp_j");
            rhs.constant += lo_gap(1, 2);
            res.generic = LinearConstraint{SymbolicTime::var("Exp_i"), rhs, true}.display_str();
        }
    } else {
        const NodeId s = opt.survivor;
        if (s < 1 || s > n) {
            res.detail = "survivor out of range";
            return res;
        }
        for (NodeId i = 1; i <= n; ++i) {
            if (i == s) continue;
            // The survivor's answer, however late, lands before i fires.
            SymbolicTime lhs = SymbolicTime::var(exp_var(s));
            lhs.constant += hi_gap(i, s);
            sys.constraints.push_back(
                LinearConstraint{lhs, SymbolicTime::var(exp_var(i)), true});
            // And i must already be armed when it lands: a pure lower bound
            // on the survivor's timer.
            Rat need = opt.exact
                           ? opt.exact->at(0, i) - opt.exact->at(0, s) - opt.exact->at(s, i)
                           : opt.uniform->hi - opt.uniform->lo - opt.uniform->lo;
            if (need > 0) {
                sys.constraints.push_back(LinearConstraint{
                    SymbolicTime(need), SymbolicTime::var(exp_var(s)), true});
            }
        }
        if (opt.uniform && n >= 2) {
            SymbolicTime lhs = SymbolicTime::var("Exp_j");
            lhs.constant += hi_gap(1, 2);
            res.generic =
                LinearConstraint{lhs, SymbolicTime::var("Exp_i"), true}.display_str();
        }
    }

    res.conditions = sys.constraints;
    Solution sol = solve_feasible(sys, opt.epsilon);
    if (sol.status == Solution::Status::Feasible) {
        res.feasible = true;
        res.witness = sol.assignment;
    } else {
        res.detail = sol.detail;
    }
    return res;
}

} // namespace tsm
