#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include <boost/rational.hpp>
#include <boost/safe_numerics/safe_integer.hpp>

namespace plmi {

// Overflow in any intermediate throws instead of wrapping.
using SafeInt = boost::safe_numerics::safe<std::int64_t>;
using Rational = boost::rational<SafeInt>;

/// Parses "p", "p/q", or a finite decimal such as "-7.29" or "1.5e-3".
Rational parse_rational(std::string_view text);

/// "p/q" in lowest terms, or "p" for integers.
std::string to_string(const Rational& value);

double to_double(const Rational& value);

/// Exact rational of the shortest decimal that round-trips to `value`.
Rational rational_from_double(double value);

std::size_t hash_value(const Rational& value);

/// Comparing a rational against a plain integer literal recurses under C++20
/// rewritten comparisons; use these instead.
inline bool is_zero(const Rational& v) { return v.numerator() == 0; }
inline int sign(const Rational& v) { return v.numerator() > 0 ? 1 : (v.numerator() < 0 ? -1 : 0); }

bool operator==(const Rational&, int) = delete;
bool operator==(int, const Rational&) = delete;

inline Rational make_rational(std::int64_t num, std::int64_t den = 1) {
  return Rational(SafeInt(num), SafeInt(den));
}

}  // namespace plmi
