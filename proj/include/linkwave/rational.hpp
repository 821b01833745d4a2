#pragma once

#include <cstdint>
#include <string>

namespace linkwave {

// Exact rational on int64. Network geometry (dt, L, k, w) is validated with
// these so the wave-offset integrality check has no floating-point slack:
// 0.3 / (30 * 0.005) must come out as exactly 2, and 0.3 / (30 * 0.004) as
// exactly 5/2.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;  // invariant: den > 0, gcd(|num|, den) == 1

  Rational() = default;
  Rational(std::int64_t n, std::int64_t d);

  static Rational integer(std::int64_t n) { return Rational(n, 1); }

  // Interprets a double as a decimal literal with at most `max_places`
  // fractional digits (config files are written in decimal). Throws
  // ConfigError if the value is not representable that way.
  static Rational from_decimal(double value, int max_places = 9);

  Rational operator*(const Rational& o) const;
  Rational operator/(const Rational& o) const;
  Rational operator+(const Rational& o) const;
  Rational operator-(const Rational& o) const;
  bool operator==(const Rational& o) const { return num == o.num && den == o.den; }

  bool is_integer() const { return den == 1; }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const;
};

}  // namespace linkwave
