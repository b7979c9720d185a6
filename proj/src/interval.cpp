#include "tsm/interval.hpp"

#include <sstream>
#include <stdexcept>

namespace tsm {

std::optional<Rat> parse_rat(const std::string& text) {
    if (text.empty()) return std::nullopt;
    std::size_t i = 0;
    if (text[0] == '-') i = 1;
    if (i >= text.size()) return std::nullopt;
    bool seen_slash = false;
    bool digits_before = false;
    bool digits_after = false;
    for (; i < text.size(); ++i) {
        char c = text[i];
        if (c == '/') {
            if (seen_slash || !digits_before) return std::nullopt;
            seen_slash = true;
        } else if (c >= '0' && c <= '9') {
            (seen_slash ? digits_after : digits_before) = true;
        } else {
            return std::nullopt;
        }
    }
    if (!digits_before || (seen_slash && !digits_after)) return std::nullopt;
    try {
        return Rat(text); // normalizes; throws on zero denominator
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

OrderSet compare_intervals(const Interval& a, const Interval& b) {
    OrderSet s;
    s.lt = a.lo < b.hi;
    s.gt = a.hi > b.lo;
    s.eq = a.lo <= b.hi && b.lo <= a.hi;
    return s;
}

Interval add(const Interval& a, const Interval& b) {
    return {a.lo + b.lo, a.hi + b.hi};
}

Interval sub(const Interval& a, const Interval& b) {
    return {a.lo - b.hi, a.hi - b.lo};
}

Interval scale(const Interval& a, const Rat& k) {
    if (k < 0) return {a.hi * k, a.lo * k};
    return {a.lo * k, a.hi * k};
}

Interval elapse(const Interval& a, const Interval& w) {
    Interval d = sub(a, w);
    if (d.hi < 0) d.hi = 0;
    if (d.lo < 0) d.lo = 0;
    return d;
}

std::string interval_str(const Interval& a) {
    std::ostringstream os;
    os << '[' << rat_str(a.lo) << ',' << rat_str(a.hi) << ']';
    return os.str();
}

std::string order_set_str(const OrderSet& s) {
    std::string out = "{";
    if (s.lt) out += "<";
    if (s.eq) out += (out.size() > 1 ? ",=" : "=");
    if (s.gt) out += (out.size() > 1 ? ",>" : ">");
    out += "}";
    return out;
}

} // namespace tsm
