#include "linkwave/rational.hpp"

#include <cmath>
#include <numeric>

#include "linkwave/common.hpp"

namespace linkwave {

Rational::Rational(std::int64_t n, std::int64_t d) {
  if (d == 0) throw ConfigError("rational with zero denominator");
  if (d < 0) {
    n = -n;
    d = -d;
  }
  const std::int64_t g = std::gcd(n < 0 ? -n : n, d);
  num = (g == 0) ? 0 : n / g;
  den = (g == 0) ? 1 : d / g;
}

Rational Rational::from_decimal(double value, int max_places) {
  if (!std::isfinite(value)) throw ConfigError("non-finite numeric value");
  std::int64_t scale = 1;
  for (int p = 0; p <= max_places; ++p) {
    const double scaled = value * static_cast<double>(scale);
    if (std::fabs(scaled) < 9.0e15) {
      const auto n = static_cast<std::int64_t>(std::llround(scaled));
      const double back = static_cast<double>(n) / static_cast<double>(scale);
      if (std::fabs(value - back) <= 1e-12 * std::max(1.0, std::fabs(value))) {
        return Rational(n, scale);
      }
    }
    scale *= 10;
  }
  throw ConfigError("value " + fmt9(value) + " is not a decimal with at most " +
                    std::to_string(max_places) + " fractional digits");
}

Rational Rational::operator*(const Rational& o) const {
  // cross-reduce before multiplying to keep magnitudes small
  const std::int64_t g1 = std::gcd(num < 0 ? -num : num, o.den);
  const std::int64_t g2 = std::gcd(o.num < 0 ? -o.num : o.num, den);
  return Rational((num / g1) * (o.num / g2), (den / g2) * (o.den / g1));
}

Rational Rational::operator/(const Rational& o) const {
  if (o.num == 0) throw ConfigError("rational division by zero");
  return *this * Rational(o.den, o.num);
}

Rational Rational::operator+(const Rational& o) const {
  const std::int64_t g = std::gcd(den, o.den);
  return Rational(num * (o.den / g) + o.num * (den / g), (den / g) * o.den);
}

Rational Rational::operator-(const Rational& o) const {
  return *this + Rational(-o.num, o.den);
}

std::string Rational::str() const {
  if (den == 1) return std::to_string(num);
  return std::to_string(num) + "/" + std::to_string(den);
}

std::string fnv1a64_hex(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

}  // namespace linkwave
