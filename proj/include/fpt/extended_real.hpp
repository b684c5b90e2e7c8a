#pragma once

#include <cmath>
#include <compare>
#include <limits>
#include <numbers>

#include "fpt/errors.hpp"

namespace fpt {

/// Real number held as `mantissa * exp(log_scale)`.
///
/// Used wherever scale/speed densities or moment integrals may leave the
/// double range (steep Ornstein-Uhlenbeck integrands reach e^200 and beyond
/// for higher moments). The mantissa is kept in [0.5, 1) in magnitude.
class ExtendedReal {
 public:
  constexpr ExtendedReal() = default;

  ExtendedReal(double mantissa, double log_scale) : mantissa_(mantissa), log_scale_(log_scale) {
    normalize();
  }

  static ExtendedReal from_double(double value) { return {value, 0.0}; }

  /// exp(log_value), without ever forming the exponential.
  static ExtendedReal from_log(double log_value) {
    if (log_value == -std::numeric_limits<double>::infinity()) return {};
    return {1.0, log_value};
  }

  double mantissa() const { return mantissa_; }
  double log_scale() const { return log_scale_; }
  bool is_zero() const { return mantissa_ == 0.0; }
  int sign() const { return (mantissa_ > 0.0) - (mantissa_ < 0.0); }

  /// Natural log of |value|; -inf for zero.
  double log_abs() const {
    if (is_zero()) return -std::numeric_limits<double>::infinity();
    return std::log(std::fabs(mantissa_)) + log_scale_;
  }

  /// Plain double. Throws OverflowError rather than returning infinity.
  double to_double() const {
    if (is_zero()) return 0.0;
    if (log_abs() > kLogMax) throw OverflowError("extended value exceeds the double range");
    return mantissa_ * std::exp(log_scale_);
  }

  /// Plain double, saturating to +-inf. For reporting only.
  double to_double_unchecked() const noexcept {
    if (is_zero()) return 0.0;
    return mantissa_ * std::exp(log_scale_);
  }

  ExtendedReal operator-() const {
    ExtendedReal r = *this;
    r.mantissa_ = -r.mantissa_;
    return r;
  }

  ExtendedReal& operator+=(const ExtendedReal& rhs) {
    if (rhs.is_zero()) return *this;
    if (is_zero()) return *this = rhs;
    const double top = std::fmax(log_scale_, rhs.log_scale_);
    mantissa_ = mantissa_ * std::exp(log_scale_ - top) + rhs.mantissa_ * std::exp(rhs.log_scale_ - top);
    log_scale_ = top;
    normalize();
    return *this;
  }
  ExtendedReal& operator-=(const ExtendedReal& rhs) { return *this += -rhs; }

  ExtendedReal& operator*=(const ExtendedReal& rhs) {
    mantissa_ *= rhs.mantissa_;
    log_scale_ += rhs.log_scale_;
    normalize();
    return *this;
  }
  ExtendedReal& operator*=(double rhs) {
    mantissa_ *= rhs;
    normalize();
    return *this;
  }
  ExtendedReal& operator/=(const ExtendedReal& rhs) {
    if (rhs.is_zero()) throw DomainError("division of extended value by zero");
    mantissa_ /= rhs.mantissa_;
    log_scale_ -= rhs.log_scale_;
    normalize();
    return *this;
  }

  friend ExtendedReal operator+(ExtendedReal a, const ExtendedReal& b) { return a += b; }
  friend ExtendedReal operator-(ExtendedReal a, const ExtendedReal& b) { return a -= b; }
  friend ExtendedReal operator*(ExtendedReal a, const ExtendedReal& b) { return a *= b; }
  friend ExtendedReal operator*(ExtendedReal a, double b) { return a *= b; }
  friend ExtendedReal operator*(double a, ExtendedReal b) { return b *= a; }
  friend ExtendedReal operator/(ExtendedReal a, const ExtendedReal& b) { return a /= b; }

  friend std::partial_ordering operator<=>(const ExtendedReal& a, const ExtendedReal& b) {
    const ExtendedReal d = a - b;
    return d.mantissa_ <=> 0.0;
  }
  friend bool operator==(const ExtendedReal& a, const ExtendedReal& b) {
    return (a <=> b) == std::partial_ordering::equivalent;
  }

 private:
  static constexpr double kLogMax = 709.782712893384;  // log(DBL_MAX)

  void normalize() {
    if (mantissa_ == 0.0 || !std::isfinite(mantissa_)) {
      if (mantissa_ == 0.0) log_scale_ = 0.0;
      return;
    }
    int exponent = 0;
    mantissa_ = std::frexp(mantissa_, &exponent);
    log_scale_ += exponent * std::numbers::ln2;
  }

  double mantissa_ = 0.0;
  double log_scale_ = 0.0;
};

/// |a-b| / max(|a|,|b|); zero when both vanish.
inline double relative_difference(const ExtendedReal& a, const ExtendedReal& b) {
  if (a.is_zero() && b.is_zero()) return 0.0;
  const double top = std::fmax(a.log_abs(), b.log_abs());
  const ExtendedReal diff = a - b;
  if (diff.is_zero()) return 0.0;
  return std::exp(diff.log_abs() - top);
}

}  // namespace fpt
