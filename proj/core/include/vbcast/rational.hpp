#pragma once

#include <compare>
#include <cstdint>
#include <numeric>
#include <string>

#include "vbcast/errors.hpp"

namespace vbcast {

/// Exact fraction over 64 bit integers, always stored reduced with a
/// positive denominator. Arithmetic goes through 128 bit intermediates and
/// throws numeric_error if a reduced result no longer fits, rather than
/// silently wrapping.
struct Rational {
  long long num = 0;
  long long den = 1;

  Rational() = default;

  Rational(long long n, long long d = 1) {
    if (d == 0) throw argument_error("Rational: zero denominator");
    if (d < 0) {
      n = -n;
      d = -d;
    }
    const long long g = std::gcd(n < 0 ? -n : n, d);
    num = (g != 0) ? n / g : 0;
    den = (g != 0) ? d / g : 1;
  }

  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }

  friend Rational operator*(const Rational& a, const Rational& b) {
    return from_wide(static_cast<__int128>(a.num) * b.num,
                     static_cast<__int128>(a.den) * b.den);
  }

  friend Rational operator+(const Rational& a, const Rational& b) {
    return from_wide(static_cast<__int128>(a.num) * b.den + static_cast<__int128>(b.num) * a.den,
                     static_cast<__int128>(a.den) * b.den);
  }

  friend Rational operator-(const Rational& a, const Rational& b) {
    return a + Rational(-b.num, b.den);
  }

  friend Rational operator/(const Rational& a, const Rational& b) {
    if (b.num == 0) throw argument_error("Rational: division by zero");
    return from_wide(static_cast<__int128>(a.num) * b.den,
                     static_cast<__int128>(a.den) * b.num);
  }

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num == b.num && a.den == b.den;
  }

  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    const __int128 lhs = static_cast<__int128>(a.num) * b.den;
    const __int128 rhs = static_cast<__int128>(b.num) * a.den;
    if (lhs < rhs) return std::strong_ordering::less;
    if (lhs > rhs) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }

  std::string to_string() const {
    return std::to_string(num) + (den == 1 ? std::string() : "/" + std::to_string(den));
  }

 private:
  static Rational from_wide(__int128 n, __int128 d) {
    if (d == 0) throw argument_error("Rational: zero denominator");
    if (d < 0) {
      n = -n;
      d = -d;
    }
    const __int128 an = n < 0 ? -n : n;
    __int128 g = gcd_wide(an, d);
    if (g == 0) g = 1;
    n /= g;
    d /= g;
    constexpr __int128 lo = -static_cast<__int128>(0x7FFFFFFFFFFFFFFFLL) - 1;
    constexpr __int128 hi = static_cast<__int128>(0x7FFFFFFFFFFFFFFFLL);
    if (n < lo || n > hi || d > hi) {
      throw numeric_error("Rational: result does not fit in 64 bits");
    }
    Rational r;
    r.num = static_cast<long long>(n);
    r.den = static_cast<long long>(d);
    return r;
  }

  static __int128 gcd_wide(__int128 a, __int128 b) {
    while (b != 0) {
      const __int128 t = a % b;
      a = b;
      b = t;
    }
    return a;
  }
};

}  // namespace vbcast
