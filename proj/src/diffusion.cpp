#include "fpt/diffusion.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "fpt/quadrature.hpp"

namespace fpt {

std::string_view to_string(BoundaryClass c) {
  switch (c) {
    case BoundaryClass::reflecting:
      return "reflecting";
    case BoundaryClass::entrance:
      return "entrance";
    case BoundaryClass::natural_nonattracting:
      return "natural-nonattracting";
    case BoundaryClass::natural_attracting:
      return "natural-attracting";
    case BoundaryClass::exit:
      return "exit";
  }
  return "unknown";
}

double DiffusionSpec::effective_lower() const {
  if (std::isfinite(lower_bound)) return lower_bound;
  if (!truncation) throw ParameterError("infinite lower bound requires a truncation point");
  return *truncation;
}

void validate(const DiffusionSpec& spec) {
  if (!spec.drift || !spec.variance || !spec.log_scale)
    throw ParameterError("diffusion '" + spec.name + "' is missing drift, variance or scale exponent");
  if (static_cast<bool>(spec.log_scale_offset) != static_cast<bool>(spec.variance_offset))
    throw ParameterError("diffusion '" + spec.name + "' needs both offset forms or neither");
  if (!(spec.lower_bound < spec.upper_bound))
    throw ParameterError("diffusion '" + spec.name + "' has an empty state interval");
  if (spec.lower_speed_exponent && *spec.lower_speed_exponent <= -1.0)
    throw NonIntegrableError("speed density singularity at the lower bound is not integrable");
  if (!std::isfinite(spec.lower_bound)) {
    if (spec.lower_class != BoundaryClass::natural_nonattracting)
      throw ParameterError("an infinite lower bound must be declared natural-nonattracting");
    if (!spec.truncation || !std::isfinite(*spec.truncation))
      throw ParameterError("an infinite lower bound requires a finite truncation point");
    if (!(spec.tail_tolerance > 0.0 && spec.tail_tolerance < 1.0))
      throw ParameterError("truncation requires a tail tolerance in (0, 1)");
  }
}

ElasticThreshold ElasticThreshold::from_reflection_probability(double level, double p_reflect) {
  if (!(p_reflect >= 0.0 && p_reflect < 1.0))
    throw ParameterError("reflection probability must lie in [0, 1)");
  return {level, 1.0 - p_reflect, p_reflect};
}

void validate(const DiffusionSpec& spec, const ElasticThreshold& threshold) {
  if (!(threshold.alpha > 0.0)) throw ParameterError("elastic threshold needs alpha > 0");
  if (!(threshold.beta >= 0.0)) throw ParameterError("elastic threshold needs beta >= 0");
  if (!(threshold.level > spec.effective_lower() && threshold.level < spec.upper_bound))
    throw ParameterError("threshold must lie strictly inside the state interval");
}

namespace {

void check_domain(const DiffusionSpec& spec, double x) {
  if (!(x >= spec.lower_bound && x <= spec.upper_bound) || std::isnan(x)) {
    std::ostringstream msg;
    msg << "x = " << x << " outside the state interval of '" << spec.name << "'";
    throw DomainError(msg.str());
  }
}

}  // namespace

ExtendedReal scale_density(const DiffusionSpec& spec, double x) {
  check_domain(spec, x);
  const double e = spec.log_scale(x);
  if (std::isnan(e)) throw DomainError("scale exponent undefined at x");
  if (e == std::numeric_limits<double>::infinity())
    throw SingularityError("scale density diverges at x");
  return ExtendedReal::from_log(e);
}

double log_speed_density(const DiffusionSpec& spec, double x) {
  return std::numbers::ln2 - std::log(spec.variance(x)) - spec.log_scale(x);
}

ExtendedReal speed_density(const DiffusionSpec& spec, double x) {
  check_domain(spec, x);
  if (x == spec.lower_bound && spec.lower_speed_exponent && *spec.lower_speed_exponent < 0.0)
    throw SingularityError("speed density diverges at the lower boundary");
  const double e = log_speed_density(spec, x);
  if (std::isnan(e)) throw DomainError("speed density undefined at x");
  if (e == std::numeric_limits<double>::infinity())
    throw SingularityError("speed density diverges at x");
  return ExtendedReal::from_log(e);
}

ExtendedReal speed_measure_extended(const DiffusionSpec& spec, double a, double b, double tol) {
  const double lo = spec.effective_lower();
  if (!(a >= lo && b <= spec.upper_bound && a <= b))
    throw DomainError("speed measure interval outside the state interval");
  if (a == b) return {};
  std::optional<double> singular;
  if (a == spec.lower_bound && spec.lower_speed_exponent) singular = *spec.lower_speed_exponent;
  if (singular && spec.log_scale_offset && spec.variance_offset) {
    const auto log_k = [&spec](double u) {
      return std::numbers::ln2 - std::log(spec.variance_offset(u)) - spec.log_scale_offset(u);
    };
    return integrate_log(log_k, 0.0, b - a, singular, tol);
  }
  return integrate_log([&spec](double x) { return log_speed_density(spec, x); }, a, b, singular, tol);
}

double speed_measure(const DiffusionSpec& spec, double a, double b, double tol) {
  return speed_measure_extended(spec, a, b, tol).to_double();
}

BoundaryClass classify_lower_boundary(const DiffusionSpec& spec) { return spec.lower_class; }

void require_supported_boundary(const DiffusionSpec& spec) {
  switch (spec.lower_class) {
    case BoundaryClass::reflecting:
    case BoundaryClass::entrance:
      return;
    case BoundaryClass::natural_nonattracting:
      if (!std::isfinite(spec.lower_bound) && !spec.truncation)
        throw InvalidBoundaryError("natural lower boundary needs a truncation point");
      return;
    case BoundaryClass::natural_attracting:
    case BoundaryClass::exit:
      throw InvalidBoundaryError("moment recursions need a reflecting, entrance or natural "
                                 "non-attracting lower boundary, got " +
                                 std::string(to_string(spec.lower_class)));
  }
}

}  // namespace fpt
