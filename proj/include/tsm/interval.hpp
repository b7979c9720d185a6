#pragma once

// Closed rational intervals and the three-way possible-order test used by
// the branching search: a relation r is admitted iff some pair of witnesses
// x in a, y in b satisfies x r y.

#include "tsm/rational.hpp"

#include <string>

namespace tsm {

struct Interval {
    Rat lo;
    Rat hi; // invariant: lo <= hi

    static Interval point(const Rat& v) { return {v, v}; }
    bool is_point() const { return lo == hi; }
    bool operator==(const Interval&) const = default;
};

// Set of admitted order relations, at least one bit always set.
struct OrderSet {
    bool lt = false;
    bool eq = false;
    bool gt = false;
    bool operator==(const OrderSet&) const = default;
};

// lt iff a.lo < b.hi; gt iff a.hi > b.lo; eq iff the intervals overlap.
OrderSet compare_intervals(const Interval& a, const Interval& b);

Interval add(const Interval& a, const Interval& b);
Interval sub(const Interval& a, const Interval& b);
Interval scale(const Interval& a, const Rat& k); // k may be negative
// Elapse by w and clamp at zero: remaining time after w has passed.
Interval elapse(const Interval& a, const Interval& w);

std::string interval_str(const Interval& a);
std::string order_set_str(const OrderSet& s);

} // namespace tsm
