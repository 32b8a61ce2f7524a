#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include "spreadcert/errors.hpp"

namespace spreadcert {

/// Real scalar stored as mantissa * 2^exp2 with |mantissa| in [0.5, 1).
///
/// Elementary-symmetric values of fourth powers span hundreds of orders of
/// magnitude, far past double range, while the evaluation recurrences need
/// exact additive structure (logs of sums do not compose). Addition aligns
/// binary exponents, so multiplying inputs by powers of two shifts exponents
/// without touching a single mantissa bit.
struct ScaledValue {
  double mantissa = 0.0;
  std::int64_t exp2 = 0;

  ScaledValue() = default;
  ScaledValue(double m, std::int64_t e) : mantissa(m), exp2(e) { normalize(); }

  static ScaledValue from_double(double v) { return ScaledValue(v, 0); }

  bool is_zero() const { return mantissa == 0.0; }
  bool is_negative() const { return mantissa < 0.0; }

  void normalize() {
    if (mantissa == 0.0) {
      exp2 = 0;
      return;
    }
    int e = 0;
    mantissa = std::frexp(mantissa, &e);
    exp2 += e;
  }

  /// Nearest double; saturates to +/-inf or 0 outside double range.
  double to_double() const {
    if (mantissa == 0.0) return 0.0;
    if (exp2 > 1100) return mantissa > 0 ? std::numeric_limits<double>::infinity()
                                         : -std::numeric_limits<double>::infinity();
    if (exp2 < -1140) return 0.0;
    return std::ldexp(mantissa, static_cast<int>(exp2));
  }

  /// log2 of the absolute value; -inf for zero.
  double log2_abs() const {
    if (mantissa == 0.0) return -std::numeric_limits<double>::infinity();
    return static_cast<double>(exp2) + std::log2(std::fabs(mantissa));
  }

  ScaledValue operator-() const {
    ScaledValue r = *this;
    r.mantissa = -r.mantissa;
    return r;
  }

  ScaledValue& operator+=(const ScaledValue& o) {
    if (o.mantissa == 0.0) return *this;
    if (mantissa == 0.0) {
      *this = o;
      return *this;
    }
    std::int64_t shift = o.exp2 - exp2;
    if (shift > 1074) {
      *this = o;
    } else if (shift >= -1074) {
      mantissa += std::ldexp(o.mantissa, static_cast<int>(shift));
      normalize();
    }
    return *this;
  }

  ScaledValue& operator-=(const ScaledValue& o) { return *this += (-o); }

  ScaledValue& operator*=(const ScaledValue& o) {
    mantissa *= o.mantissa;
    exp2 += o.exp2;
    normalize();
    return *this;
  }

  ScaledValue& operator*=(double v) { return *this *= from_double(v); }

  friend ScaledValue operator+(ScaledValue a, const ScaledValue& b) { return a += b; }
  friend ScaledValue operator-(ScaledValue a, const ScaledValue& b) { return a -= b; }
  friend ScaledValue operator*(ScaledValue a, const ScaledValue& b) { return a *= b; }
  friend ScaledValue operator*(ScaledValue a, double b) { return a *= b; }
  friend ScaledValue operator*(double a, ScaledValue b) { return b *= a; }

  friend ScaledValue operator/(const ScaledValue& a, const ScaledValue& b) {
    if (b.mantissa == 0.0) throw DomainError("ScaledValue: division by zero");
    return ScaledValue(a.mantissa / b.mantissa, a.exp2 - b.exp2);
  }

  friend bool operator<(const ScaledValue& a, const ScaledValue& b) {
    return (a - b).mantissa < 0.0;
  }
  friend bool operator>(const ScaledValue& a, const ScaledValue& b) { return b < a; }
  friend bool operator<=(const ScaledValue& a, const ScaledValue& b) { return !(b < a); }
  friend bool operator>=(const ScaledValue& a, const ScaledValue& b) { return !(a < b); }

  ScaledValue pow_int(std::int64_t k) const {
    if (k < 0) throw DomainError("ScaledValue::pow_int: negative exponent");
    ScaledValue result = from_double(1.0);
    ScaledValue base = *this;
    while (k > 0) {
      if (k & 1) result *= base;
      base *= base;
      k >>= 1;
    }
    return result;
  }

  /// k-th root of a nonnegative value.
  ScaledValue root(int k) const {
    if (k <= 0) throw DomainError("ScaledValue::root: order must be positive");
    if (mantissa < 0.0) throw DomainError("ScaledValue::root: negative value");
    if (mantissa == 0.0) return ScaledValue();
    std::int64_t r = exp2 % k;
    if (r < 0) r += k;
    double m = std::ldexp(mantissa, static_cast<int>(r));
    return ScaledValue(std::pow(m, 1.0 / k), (exp2 - r) / k);
  }

  /// |a - b| / max(|a|, |b|); 0 when both are zero.
  static double relative_gap(const ScaledValue& a, const ScaledValue& b) {
    ScaledValue diff = a - b;
    double am = std::fabs(a.mantissa), bm = std::fabs(b.mantissa);
    ScaledValue mag = (ScaledValue(am, a.exp2) < ScaledValue(bm, b.exp2))
                          ? ScaledValue(bm, b.exp2)
                          : ScaledValue(am, a.exp2);
    if (mag.is_zero()) return 0.0;
    return (ScaledValue(std::fabs(diff.mantissa), diff.exp2) / mag).to_double();
  }
};

}  // namespace spreadcert
