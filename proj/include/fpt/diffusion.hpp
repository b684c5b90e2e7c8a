#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "fpt/extended_real.hpp"

namespace fpt {

/// Behaviour of the lower end r1 of the state interval.
enum class BoundaryClass {
  reflecting,             ///< regular boundary with a reflecting condition
  entrance,
  natural_nonattracting,  ///< requires a finite speed measure K(r1, y]
  natural_attracting,
  exit,
};

std::string_view to_string(BoundaryClass c);

/// One-dimensional time-homogeneous diffusion on (lower_bound, upper_bound).
///
/// `log_scale` is the exponent of the scale density,
/// log h(x) = -2 * integral^x A1(z)/A2(z) dz, with an antiderivative anchor
/// fixed by whoever builds the DiffusionSpec. Only products and ratios of h and k are
/// anchor-free; the refractoriness moments are not, so the anchor is part of
/// the model definition.
struct DiffusionSpec {
  std::string name = "custom";
  std::function<double(double)> drift;     ///< A1(x)
  std::function<double(double)> variance;  ///< A2(x), positive inside the interval
  std::function<double(double)> log_scale;
  double lower_bound = -std::numeric_limits<double>::infinity();
  double upper_bound = std::numeric_limits<double>::infinity();
  BoundaryClass lower_class = BoundaryClass::reflecting;

  /// Power s with k(x) ~ (x - r1)^s as x -> r1, when the speed density is not
  /// smooth there. Negative values mark an integrable singularity.
  std::optional<double> lower_speed_exponent;

  /// Optional log_scale and variance as functions of u = x - lower_bound.
  /// Used next to a singular lower end, where x itself rounds to r1.
  std::function<double(double)> log_scale_offset;
  std::function<double(double)> variance_offset;

  /// Natural lower boundaries at -inf: integrals start here instead. The
  /// caller certifies K(r1, truncation] < tail_tolerance * K(r1, S].
  std::optional<double> truncation;
  double tail_tolerance = 0.0;

  /// Finite lower end actually used by the quadrature.
  double effective_lower() const;
};

/// Validates structural invariants. Throws ParameterError.
void validate(const DiffusionSpec& spec);

/// Threshold S with absorbing coefficient alpha and reflecting coefficient beta.
struct ElasticThreshold {
  double level = 0.0;
  double alpha = 1.0;
  double beta = 0.0;

  /// alpha = 1 - p, beta = p, so beta/alpha = p / (1 - p).
  static ElasticThreshold from_reflection_probability(double level, double p_reflect);

  double reflection_probability() const { return beta / (alpha + beta); }
  double ratio() const { return beta / alpha; }
};

/// Throws ParameterError unless alpha > 0, beta >= 0 and S lies inside the interval.
void validate(const DiffusionSpec& spec, const ElasticThreshold& threshold);

/// h(x).
ExtendedReal scale_density(const DiffusionSpec& spec, double x);

/// log k(x) = log 2 - log A2(x) - log h(x).
double log_speed_density(const DiffusionSpec& spec, double x);

/// k(x) = 2 / (A2(x) h(x)). Throws SingularityError at a divergent lower end.
ExtendedReal speed_density(const DiffusionSpec& spec, double x);

/// K(a, b] = integral_a^b k, to relative accuracy `tol`.
ExtendedReal speed_measure_extended(const DiffusionSpec& spec, double a, double b, double tol = 1e-9);
double speed_measure(const DiffusionSpec& spec, double a, double b, double tol = 1e-9);

/// The declared class of the lower boundary.
BoundaryClass classify_lower_boundary(const DiffusionSpec& spec);

/// Throws InvalidBoundaryError when the moment recursions do not apply.
void require_supported_boundary(const DiffusionSpec& spec);

}  // namespace fpt
