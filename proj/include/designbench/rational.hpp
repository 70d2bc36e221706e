#pragma once

#include <boost/rational.hpp>

#include <charconv>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace designbench {

// Exact rational arithmetic for population weights. Doubles cannot represent
// proportions like 1/3 exactly, so normalization checks use rationals.
using Rational = boost::rational<std::int64_t>;

// Parses "3/8" or "1". Rejects everything else.
inline Rational parse_rational(std::string_view text) {
  const auto parse_int = [&](std::string_view part) -> std::int64_t {
    std::int64_t value = 0;
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
    if (ec != std::errc{} || ptr != part.data() + part.size()) {
      throw std::invalid_argument("invalid rational literal '" + std::string(text) + "'");
    }
    return value;
  };
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) {
    return Rational(parse_int(text));
  }
  const std::int64_t numerator = parse_int(text.substr(0, slash));
  const std::int64_t denominator = parse_int(text.substr(slash + 1));
  if (denominator == 0) {
    throw std::invalid_argument("invalid rational literal '" + std::string(text) +
                                "': zero denominator");
  }
  return Rational(numerator, denominator);
}

inline std::string format_rational(const Rational& value) {
  if (value.denominator() == 1) {
    return std::to_string(value.numerator());
  }
  return std::to_string(value.numerator()) + "/" + std::to_string(value.denominator());
}

inline double to_double(const Rational& value) {
  return boost::rational_cast<double>(value);
}

}  // namespace designbench
