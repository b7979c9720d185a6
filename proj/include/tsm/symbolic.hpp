#pragma once

// Affine expressions over named rational variables, and strict / non-strict
// linear inequalities between them. Event times in synthesized scenarios are
// SymbolicTime values over delay variables (d_Q_1, d_1_2, ...) and timer
// durations (Exp_Q, Exp_1, ...).

#include "tsm/rational.hpp"
#include "tsm/topology.hpp"

#include <map>
#include <optional>
#include <string>

namespace tsm {

using Assignment = std::map<std::string, Rat>;

std::string delay_var(NodeId from, NodeId to); // "d_Q_1", "d_2_1", ...
std::string exp_var(NodeId node);              // "Exp_Q", "Exp_1", ...
std::string link_var(const std::string& id);   // "L_a", ...

// Splits a delay variable name back into its endpoints.
std::optional<std::pair<NodeId, NodeId>> parse_delay_var(const std::string& name);

struct SymbolicTime {
    Rat constant;
    std::map<std::string, Rat> terms; // coefficient per variable, never zero

    SymbolicTime() : constant(0) {}
    explicit SymbolicTime(Rat c) : constant(std::move(c)) {}
    static SymbolicTime var(const std::string& name, Rat coeff = Rat(1));

    SymbolicTime& operator+=(const SymbolicTime& o);
    SymbolicTime& operator-=(const SymbolicTime& o);
    SymbolicTime& add_term(const std::string& name, const Rat& coeff);
    friend SymbolicTime operator+(SymbolicTime a, const SymbolicTime& b) { return a += b; }
    friend SymbolicTime operator-(SymbolicTime a, const SymbolicTime& b) { return a -= b; }
    SymbolicTime scaled(const Rat& k) const;

    bool is_constant() const { return terms.empty(); }
    bool operator==(const SymbolicTime&) const = default;

    // nullopt when a variable has no value in the assignment
    std::optional<Rat> eval(const Assignment& a) const;

    // Machine form: "<rat>*<var> + ... + <rat>", zero -> "0".
    std::string str() const;
    // Reader form: unit coefficients elided, negative terms joined with " - ".
    std::string display_str() const;

    static std::optional<SymbolicTime> parse(const std::string& text);
};

struct LinearConstraint {
    SymbolicTime lhs;
    SymbolicTime rhs;
    bool strict = true; // true: lhs < rhs, false: lhs <= rhs

    bool operator==(const LinearConstraint&) const = default;

    // rhs - lhs, the quantity required to be positive (or nonnegative)
    SymbolicTime gap() const { return rhs - lhs; }

    std::optional<bool> satisfied(const Assignment& a) const;

    std::string str() const;          // "1*d_Q_1 + 1*Exp_1 < 1*d_Q_2"
    std::string display_str() const;  // "d_Q_1 + Exp_1 < d_Q_2"
    static std::optional<LinearConstraint> parse(const std::string& line);
};

} // namespace tsm
