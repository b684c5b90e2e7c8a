#include "fpt/models.hpp"

#include <cmath>
#include <functional>

#include "fpt/errors.hpp"

namespace fpt {

namespace {

constexpr std::size_t kMaxTerms = 10000;
constexpr int kSmallRun = 3;

void check_start(double nu, double S, double x) {
  if (!(x >= nu && x <= S)) throw DomainError("starting point must satisfy nu <= x <= S");
}

// Sums terms(k), k = 0, 1, ..., until kSmallRun consecutive terms fall below
// tol relative to the partial sum.
double sum_series(const std::function<double(std::size_t)>& term, double tol, SeriesTrace& trace) {
  double sum = 0.0;
  int small = 0;
  for (std::size_t k = 0; k < kMaxTerms; ++k) {
    const double t = term(k);
    if (!std::isfinite(t)) throw SeriesDivergenceError("series term overflowed at k = " + std::to_string(k));
    sum += t;
    trace.terms = k + 1;
    trace.last_terms = {trace.last_terms[1], trace.last_terms[2], std::fabs(t)};
    small = std::fabs(t) <= tol * std::fabs(sum) || t == 0.0 ? small + 1 : 0;
    if (small >= kSmallRun) return sum;
  }
  throw SeriesDivergenceError("series did not converge within " + std::to_string(kMaxTerms) + " terms");
}

// sum_k 2^k z^(2k+2) / ((k+1) (2k+1)!!)
double ou_series_even(double z, double tol, SeriesTrace& trace) {
  if (z == 0.0) return 0.0;
  const double step = std::log(2.0 * z * z);
  double log_base = 2.0 * std::log(std::fabs(z));  // log of 2^k z^(2k+2) / (2k+1)!!
  return sum_series(
      [&](std::size_t k) {
        if (k > 0) log_base += step - std::log(2.0 * k + 1.0);
        return std::exp(log_base - std::log(k + 1.0));
      },
      tol, trace);
}

// sum_k 2^k w^(2k+1) / (2k+1)!!
double ou_series_odd(double w, double tol, SeriesTrace& trace) {
  if (w == 0.0) return 0.0;
  const double sign = w < 0.0 ? -1.0 : 1.0;
  const double step = std::log(2.0 * w * w);
  double log_base = std::log(std::fabs(w));
  return sum_series(
      [&](std::size_t k) {
        if (k > 0) log_base += step - std::log(2.0 * k + 1.0);
        return sign * std::exp(log_base);
      },
      tol, trace);
}

// sum_k z^(2k+1) / ((2k+1) k!)
double ou_series_factorial(double z, double tol, SeriesTrace& trace) {
  if (z == 0.0) return 0.0;
  const double sign = z < 0.0 ? -1.0 : 1.0;
  const double step = 2.0 * std::log(std::fabs(z));
  double log_base = std::log(std::fabs(z));  // log |z|^(2k+1) / k!
  return sum_series(
      [&](std::size_t k) {
        if (k > 0) log_base += step - std::log(static_cast<double>(k));
        return sign * std::exp(log_base - std::log(2.0 * k + 1.0));
      },
      tol, trace);
}

}  // namespace

DiffusionSpec wiener_spec(const WienerParams& p) {
  if (!(p.sigma2 > 0.0)) throw ParameterError("wiener: sigma2 must be positive");
  DiffusionSpec s;
  s.name = "wiener";
  s.drift = [mu = p.mu](double) { return mu; };
  s.variance = [v = p.sigma2](double) { return v; };
  s.log_scale = [c = -2.0 * p.mu / p.sigma2](double x) { return c * x; };
  s.lower_bound = p.nu;
  s.lower_class = BoundaryClass::reflecting;
  return s;
}

DiffusionSpec ou_spec(const OUParams& p) {
  if (!(p.theta > 0.0)) throw ParameterError("ou: theta must be positive");
  if (!(p.sigma2 > 0.0)) throw ParameterError("ou: sigma2 must be positive");
  DiffusionSpec s;
  s.name = "ou";
  s.drift = [p](double x) { return -(x - p.rho) / p.theta; };
  s.variance = [v = p.sigma2](double) { return v; };
  s.log_scale = [p](double x) { return x * (x - 2.0 * p.rho) / (p.theta * p.sigma2); };
  s.lower_bound = p.nu;
  s.lower_class = BoundaryClass::reflecting;
  return s;
}

BoundaryClass classify_feller_lower(const FellerParams& p) {
  return p.rho - p.nu >= p.xi * p.theta ? BoundaryClass::entrance : BoundaryClass::reflecting;
}

DiffusionSpec feller_spec(const FellerParams& p) {
  if (!(p.theta > 0.0)) throw ParameterError("feller: theta must be positive");
  if (!(p.xi > 0.0)) throw ParameterError("feller: xi must be positive");
  if (!(p.rho > p.nu)) throw ParameterError("feller: rho must exceed nu");
  const double g = (p.rho - p.nu) / (p.theta * p.xi);
  DiffusionSpec s;
  s.name = "feller";
  s.drift = [p](double x) { return -(x - p.rho) / p.theta; };
  s.variance = [p](double x) { return 2.0 * p.xi * (x - p.nu); };
  s.log_scale = [p, g](double x) { return x / (p.theta * p.xi) - g * std::log(x - p.nu); };
  s.lower_bound = p.nu;
  s.log_scale_offset = [p, g](double u) { return (u + p.nu) / (p.theta * p.xi) - g * std::log(u); };
  s.variance_offset = [xi = p.xi](double u) { return 2.0 * xi * u; };
  s.lower_class = classify_feller_lower(p);
  s.lower_speed_exponent = g - 1.0;
  return s;
}

double wiener_fpt_mean(const WienerParams& p, double S, double x) {
  if (!(p.sigma2 > 0.0)) throw ParameterError("wiener: sigma2 must be positive");
  check_start(p.nu, S, x);
  if (x == S) return 0.0;
  if (p.mu == 0.0) return (S - x) * (S + x - 2.0 * p.nu) / p.sigma2;
  const double c = -2.0 * p.mu / p.sigma2;
  // e^{c(S-nu)} - e^{c(x-nu)} = e^{c(x-nu)} expm1(c(S-x))
  const double bracket = std::exp(c * (x - p.nu)) * std::expm1(c * (S - x));
  return (S - x) / p.mu + p.sigma2 / (2.0 * p.mu * p.mu) * bracket;
}

SeriesMean ou_fpt_mean_detailed(const OUParams& p, double S, double x, double series_tol) {
  if (!(p.theta > 0.0) || !(p.sigma2 > 0.0)) throw ParameterError("ou: theta and sigma2 must be positive");
  if (!(series_tol > 0.0)) throw ParameterError("series tolerance must be positive");
  check_start(p.nu, S, x);
  SeriesMean out;
  if (x == S) return out;
  const double unit = std::sqrt(p.sigma2 * p.theta);
  const double a = (S - p.rho) / unit;
  const double b = (x - p.rho) / unit;
  const double w = (p.nu - p.rho) / unit;
  out.series.resize(5);
  const double even = ou_series_even(a, series_tol, out.series[0]) - ou_series_even(b, series_tol, out.series[1]);
  const double odd = ou_series_odd(w, series_tol, out.series[2]);
  const double fact =
      ou_series_factorial(a, series_tol, out.series[3]) - ou_series_factorial(b, series_tol, out.series[4]);
  out.value = p.theta * even - 2.0 * p.theta * std::exp(-w * w) * odd * fact;
  return out;
}

double ou_fpt_mean(const OUParams& p, double S, double x, double series_tol) {
  return ou_fpt_mean_detailed(p, S, x, series_tol).value;
}

SeriesMean feller_fpt_mean_detailed(const FellerParams& p, double S, double x, double series_tol) {
  if (!(p.theta > 0.0) || !(p.xi > 0.0) || !(p.rho > p.nu))
    throw ParameterError("feller: need theta > 0, xi > 0, rho > nu");
  if (!(series_tol > 0.0)) throw ParameterError("series tolerance must be positive");
  check_start(p.nu, S, x);
  SeriesMean out;
  if (x == S) return out;
  const double base = (p.rho - p.nu) / p.theta;
  const double ls = S - p.nu;
  const double lx = x - p.nu;
  // u_k = ls^(k+1) / (theta^k prod_{i<=k} (base + xi i)), v_k likewise for lx
  double u = ls;
  double v = lx;
  out.series.resize(1);
  const double tail = sum_series(
      [&](std::size_t j) {
        const double k = static_cast<double>(j + 1);
        const double recip = 1.0 / (p.theta * (base + p.xi * k));
        u *= ls * recip;
        v *= lx * recip;
        return (u - v) / (k + 1.0);
      },
      series_tol, out.series[0]);
  out.value = p.theta / (p.rho - p.nu) * (S - x + tail);
  return out;
}

double feller_fpt_mean(const FellerParams& p, double S, double x, double series_tol) {
  return feller_fpt_mean_detailed(p, S, x, series_tol).value;
}

}  // namespace fpt
