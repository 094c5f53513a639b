#include "plmi/rational.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <system_error>

#include "plmi/errors.hpp"

namespace plmi {
namespace {

std::int64_t parse_int(std::string_view text, std::string_view whole) {
  std::int64_t out = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec == std::errc::result_out_of_range) {
    throw CapExceeded("rational literal '" + std::string(whole) + "' exceeds 64-bit range");
  }
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError("invalid rational literal '" + std::string(whole) + "'");
  }
  return out;
}

Rational pow10(int exponent) {
  Rational out = make_rational(1);
  const Rational ten = make_rational(10);
  for (int i = 0; i < std::abs(exponent); ++i) {
    out = exponent > 0 ? out * ten : out / ten;
  }
  return out;
}

Rational parse_decimal(std::string_view text, std::string_view whole) {
  int exponent = 0;
  if (auto e = text.find_first_of("eE"); e != std::string_view::npos) {
    exponent = static_cast<int>(parse_int(text.substr(e + 1), whole));
    text = text.substr(0, e);
  }
  bool negative = false;
  if (!text.empty() && (text.front() == '-' || text.front() == '+')) {
    negative = text.front() == '-';
    text.remove_prefix(1);
  }
  std::string digits;
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    digits = std::string(text.substr(0, dot)) + std::string(text.substr(dot + 1));
    exponent -= static_cast<int>(text.size() - dot - 1);
  } else {
    digits = std::string(text);
  }
  if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos) {
    throw ParseError("invalid rational literal '" + std::string(whole) + "'");
  }
  // Strip zeros so that long literals like "0.10000" stay in range.
  auto first = digits.find_first_not_of('0');
  digits = first == std::string::npos ? "0" : digits.substr(first);
  while (digits.size() > 1 && digits.back() == '0') {
    digits.pop_back();
    ++exponent;
  }
  Rational value = make_rational(parse_int(digits, whole)) * pow10(exponent);
  return negative ? -value : value;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  if (text.empty()) throw ParseError("empty rational literal");
  try {
    if (auto slash = text.find('/'); slash != std::string_view::npos) {
      const std::int64_t num = parse_int(text.substr(0, slash), text);
      const std::int64_t den = parse_int(text.substr(slash + 1), text);
      if (den == 0) throw ParseError("zero denominator in '" + std::string(text) + "'");
      return make_rational(num, den);
    }
    return parse_decimal(text, text);
  } catch (const std::system_error&) {
    throw CapExceeded("rational literal '" + std::string(text) + "' exceeds 64-bit range");
  }
}

std::string to_string(const Rational& value) {
  const std::int64_t num = value.numerator();
  const std::int64_t den = value.denominator();
  if (den == 1) return std::to_string(num);
  return std::to_string(num) + "/" + std::to_string(den);
}

double to_double(const Rational& value) {
  // long double holds any int64 exactly, so only the quotient is rounded.
  return static_cast<double>(static_cast<long double>(static_cast<std::int64_t>(value.numerator())) /
                             static_cast<long double>(static_cast<std::int64_t>(value.denominator())));
}

Rational rational_from_double(double value) {
  if (!std::isfinite(value)) throw ParseError("non-finite value cannot be made rational");
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return parse_rational(std::string_view(buf, static_cast<std::size_t>(ptr - buf)));
}

std::size_t hash_value(const Rational& value) {
  // splitmix64 finalizer; platform independent so canonical orders agree.
  auto mix = [](std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  const auto num = static_cast<std::uint64_t>(static_cast<std::int64_t>(value.numerator()));
  const auto den = static_cast<std::uint64_t>(static_cast<std::int64_t>(value.denominator()));
  return static_cast<std::size_t>(mix(num ^ mix(den)));
}

}  // namespace plmi
