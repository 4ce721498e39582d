#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <optional>
#include <string>

namespace angerona {

using Rat = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

// Parses "p/q", an integer, or a decimal literal ("0.25" -> 1/4). Returns
// nullopt on malformed input or q == 0.
std::optional<Rat> parse_rational(const std::string& text);

// Canonical form: integer if the denominator is 1, else "p/q".
std::string rat_to_string(const Rat& r);

// Decimal string if the denominator is of the form 2^a*5^b (exact), else "p/q".
std::string rat_to_decimal_string(const Rat& r);

double rat_to_double(const Rat& r);

}  // namespace angerona
