#include "fpt/deadtime.hpp"

#include <cmath>
#include <limits>

#include <boost/math/special_functions/gamma.hpp>

#include "fpt/errors.hpp"

namespace fpt {

void validate(const CounterParams& p) {
  if (!(p.lambda > 0.0) || !std::isfinite(p.lambda)) throw ParameterError("counter: lambda must be positive");
  if (!(p.T > 0.0) || !std::isfinite(p.T)) throw ParameterError("counter: T must be positive");
  if (!(p.tau >= 0.0)) throw ParameterError("counter: tau must be non-negative");
}

int heaviside(double x) { return x > 0.0 ? 1 : 0; }

double poisson_pmf(double lambda, double T, int n) {
  if (n < 0) throw DomainError("poisson_pmf: n must be non-negative");
  const double m = lambda * T;
  if (m == 0.0) return n == 0 ? 1.0 : 0.0;
  // m^n e^{-m} / n!
  return boost::math::gamma_p_derivative(n + 1.0, m);
}

double poisson_upper_tail(int n, double m) {
  if (n <= 0) return 1.0;
  if (m <= 0.0) return 0.0;
  return boost::math::gamma_p(n, m);
}

double output_pmf(const CounterParams& p, int n) {
  validate(p);
  if (n < 1) throw DomainError("output_pmf: n must be at least 1");
  const double open_n = p.T - (n - 1) * p.tau;
  const double open_next = p.T - n * p.tau;
  if (!heaviside(open_n)) return 0.0;
  const double a = p.lambda * open_n;
  if (!heaviside(open_next)) return poisson_upper_tail(n, a);
  // Q(n, a) - Q(n + 1, b) = (Q(n, a) - Q(n, b)) + pmf(n, b); the bracket is
  // exactly zero without dead time, so that case reduces to the Poisson pmf.
  const double b = p.lambda * open_next;
  double spread = 0.0;
  if (a != b) {
    spread = boost::math::gamma_p(n, b) < 0.5 ? boost::math::gamma_p(n, a) - boost::math::gamma_p(n, b)
                                              : boost::math::gamma_q(n, b) - boost::math::gamma_q(n, a);
  }
  return spread + poisson_pmf(1.0, b, n);
}

int max_output_count(const CounterParams& p) {
  validate(p);
  if (p.tau > 0.0) {
    const double bound = std::floor(p.T / p.tau) + 1.0;
    if (bound > 1e7) throw ParameterError("counter: T/tau too large");
    return static_cast<int>(bound);
  }
  const double m = p.lambda * p.T;
  return static_cast<int>(std::ceil(m + 12.0 * std::sqrt(m) + 30.0));
}

CountDistribution output_distribution(const CounterParams& p) {
  validate(p);
  const int top = max_output_count(p);
  CountDistribution d;
  d.pmf.resize(static_cast<std::size_t>(top) + 1);
  d.pmf[0] = std::exp(-p.lambda * p.T);
  for (int n = 1; n <= top; ++n) {
    double v = output_pmf(p, n);
    if (v < 0.0) {
      d.clamped += -v;
      v = 0.0;
    }
    d.pmf[n] = v;
  }
  double total = 0.0;
  double first = 0.0;
  double second = 0.0;
  for (std::size_t n = 0; n < d.pmf.size(); ++n) {
    total += d.pmf[n];
    first += n * d.pmf[n];
    second += static_cast<double>(n) * n * d.pmf[n];
  }
  d.normalization_defect = std::fabs(total - 1.0);
  d.mean = first;
  d.variance = second - first * first;
  return d;
}

}  // namespace fpt
