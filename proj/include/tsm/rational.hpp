#pragma once

// Exact rational time/coefficient type. All synthesis and solving arithmetic
// runs on Rat; binary floating point never enters the constraint path.

#include <boost/multiprecision/cpp_int.hpp>

#include <optional>
#include <string>

namespace tsm {

using Rat = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

// Canonical form: "p" when the denominator is 1, otherwise "p/q" with q > 0.
inline std::string rat_str(const Rat& r) {
    return r.str();
}

// Accepts "p" or "p/q" with optional leading '-'. Rejects anything else,
// including q == 0. Whitespace is not trimmed here; callers tokenize first.
std::optional<Rat> parse_rat(const std::string& text);

} // namespace tsm
