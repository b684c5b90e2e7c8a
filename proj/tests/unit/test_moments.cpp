#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "fpt/models.hpp"
#include "fpt/moments.hpp"

using namespace fpt;

namespace {

constexpr double kNu = -80.0;
constexpr double kS = -50.0;
constexpr double kX = -70.0;

WienerParams wiener(double sigma2) { return {-0.5, sigma2, kNu}; }
OUParams ou(double sigma2) { return {5.0, -70.0, sigma2, kNu}; }
FellerParams feller(double xi) { return {5.0, -70.0, xi, kNu}; }

ElasticThreshold elastic(double p) { return ElasticThreshold::from_reflection_probability(kS, p); }

double rel(double a, double b) { return std::fabs(a - b) / std::fmax(std::fabs(a), std::fabs(b)); }

// Reflecting Wiener with c = -2 mu / sigma2: h = e^{c z}, integral_nu^z k = 2 (e^{-c nu} - e^{-c z}) / (sigma2 c).
double wiener_t1(const WienerParams& p, double x) {
  const double c = -2.0 * p.mu / p.sigma2;
  return 2.0 / (p.sigma2 * c) *
         ((std::exp(c * (kS - p.nu)) - std::exp(c * (x - p.nu))) / c - (kS - x));
}

// integral k t_1 with t_1 from an independent closed form or series.
double speed_weighted_mean(const DiffusionSpec& spec, const std::function<double(double)>& t1) {
  if (spec.log_scale_offset) {
    const auto f = [&](double u) {
      return std::exp(std::numbers::ln2 - std::log(spec.variance_offset(u)) - spec.log_scale_offset(u)) *
             t1(kNu + u);
    };
    return integrate(f, 0.0, kS - kNu, spec.lower_speed_exponent, 1e-11);
  }
  return integrate([&](double x) { return speed_density(spec, x).to_double() * t1(x); }, kNu, kS,
                   std::nullopt, 1e-11);
}

}  // namespace

TEST_CASE("Wiener mean against the closed form") {
  for (double s2 : {10.0, 20.0, 30.0, 40.0, 50.0}) {
    const DiffusionSpec spec = wiener_spec(wiener(s2));
    CHECK(rel(fpt_moment(spec, kS, kX, 1), wiener_t1(wiener(s2), kX)) < 1e-10);
  }
  CHECK(rel(fpt_moment(wiener_spec(wiener(10.0)), kS, kX, 1), 3.073451e2) < 1e-6);
}

TEST_CASE("mean profile over the whole interval") {
  const WienerParams p = wiener(20.0);
  const GridFunction profile = fpt_moment_profile(wiener_spec(p), kS, 1);
  for (std::size_t i = 0; i < profile.grid().node_count(); i += 7) {
    const double x = profile.grid().nodes()[i];
    CHECK(rel(profile.value(i), wiener_t1(p, x)) < 1e-9);
  }
  CHECK(profile.at(kS) == 0.0);
  CHECK(fpt_moment_profile(wiener_spec(p), kS, 0).at(kX) == 1.0);
}

TEST_CASE("degenerate orders and starting points") {
  const DiffusionSpec spec = ou_spec(ou(20.0));
  CHECK(fpt_moment(spec, kS, kS, 1) == 0.0);
  CHECK(fpt_moment(spec, kS, kS, 3) == 0.0);
  CHECK(fpt_moment(spec, kS, kX, 0) == 1.0);
  CHECK(fpt_variance(spec, kS, kS) == 0.0);
  CHECK(fet_moment(spec, elastic(0.5), kX, 0) == 1.0);
  CHECK_THROWS_AS(fpt_moment(spec, kS, -40.0, 1), DomainError);
  CHECK_THROWS_AS(fpt_moment(spec, kS, -90.0, 1), DomainError);
  CHECK_THROWS_AS(fpt_moment(spec, kS, kX, -1), DomainError);
  CHECK_THROWS_AS(refractory_moment(spec, elastic(0.5), 0), DomainError);
}

TEST_CASE("variance values") {
  CHECK(rel(fpt_variance(wiener_spec(wiener(10.0)), kS, kX), 9.254218e4) < 1e-6);
  CHECK(rel(fpt_variance(feller_spec(feller(1.0)), kS, kX), 6.372482e3) < 1e-6);
  CHECK(rel(fpt_variance(ou_spec(ou(20.0)), kS, kX), 6.554937e4) < 1e-6);
}

TEST_CASE("no reflection reduces to first-passage moments") {
  for (const DiffusionSpec& spec : {wiener_spec(wiener(20.0)), ou_spec(ou(30.0)), feller_spec(feller(1.5))}) {
    for (int n = 1; n <= 3; ++n)
      CHECK(rel(fet_moment(spec, elastic(0.0), kX, n), fpt_moment(spec, kS, kX, n)) < 1e-12);
    CHECK(refractory_moment(spec, elastic(0.0), 1) == 0.0);
    CHECK(refractory_moment(spec, elastic(0.0), 2) == 0.0);
    CHECK(refractory_variance(spec, elastic(0.0)) == 0.0);
  }
}

TEST_CASE("refractory mean is the scaled speed measure") {
  const DiffusionSpec spec = wiener_spec(wiener(10.0));
  const double K = 2.0 * (std::exp(8.0) - std::exp(5.0));
  for (double p : {0.1, 0.5, 0.9, 0.99})
    CHECK(rel(refractory_moment(spec, elastic(p), 1), p / (1.0 - p) * K) < 1e-10);
  CHECK(rel(refractory_moment(spec, elastic(0.1), 1), 6.294544e2) < 1e-6);
  CHECK(rel(fet_moment(spec, elastic(0.1), kX, 1), 9.367995e2) < 1e-6);
}

TEST_CASE("binomial relations agree with the direct recursion") {
  const DiffusionSpec spec = ou_spec(ou(200.0));
  for (int n : {1, 2, 3}) {
    const double direct = fet_moment(spec, elastic(0.5), kX, n);
    CHECK(rel(fet_moment_via_relation(spec, elastic(0.5), kX, n, RelationForm::fpt_profiles), direct) < 1e-8);
    CHECK(rel(fet_moment_via_relation(spec, elastic(0.5), kX, n, RelationForm::fet_profiles), direct) < 1e-8);
  }
  const DiffusionSpec w = wiener_spec(wiener(20.0));
  CHECK(rel(fet_moment_via_relation(w, elastic(0.9), kX, 1, RelationForm::fpt_profiles),
            fpt_moment(w, kS, kX, 1) + refractory_moment(w, elastic(0.9), 1)) < 1e-10);
}

TEST_CASE("refractory mean scales with beta/alpha") {
  for (const DiffusionSpec& spec : {wiener_spec(wiener(30.0)), ou_spec(ou(40.0)), feller_spec(feller(3.0))}) {
    const double base = refractory_moment(spec, elastic(0.5), 1);
    CHECK(rel(refractory_moment(spec, elastic(0.9), 1), 9.0 * base) < 1e-10);
    CHECK(rel(refractory_moment(spec, ElasticThreshold{kS, 1.0, 81.0}, 1), 81.0 * base) < 1e-10);
    CHECK(rel(refractory_moment(spec, ElasticThreshold{kS, 0.1, 89.1}, 1), 891.0 * base) < 1e-10);
  }
}

TEST_CASE("refractory variance is quadratic in beta/alpha") {
  // V(r) = a r + b r^2 with a = 2 C1 and b = K^2
  const DiffusionSpec spec = ou_spec(ou(30.0));
  const double v1 = refractory_variance(spec, ElasticThreshold{kS, 1.0, 1.0});
  const double v2 = refractory_variance(spec, ElasticThreshold{kS, 1.0, 2.0});
  const double b = (v2 - 2.0 * v1) / 2.0;
  const double a = v1 - b;
  const double K = speed_measure(spec, kNu, kS);
  CHECK(rel(b, K * K) < 1e-8);
  for (double r : {0.3, 5.0, 40.0}) {
    CHECK(rel(refractory_variance(spec, ElasticThreshold{kS, 1.0, r}), a * r + b * r * r) < 1e-8);
  }
}

TEST_CASE("refractory moments do not depend on the starting point") {
  const DiffusionSpec spec = feller_spec(feller(2.5));
  const double e = fet_moment(spec, elastic(0.9), kX, 1) - fpt_moment(spec, kS, kX, 1);
  for (double x : {-79.0, -75.0, -60.0, -55.0}) {
    CHECK(rel(fet_moment(spec, elastic(0.9), x, 1) - fpt_moment(spec, kS, x, 1), e) < 1e-8);
  }
  CHECK(rel(e, refractory_moment(spec, elastic(0.9), 1)) < 1e-8);
}

TEST_CASE("first-exit mean near the threshold tends to the refractory mean") {
  const DiffusionSpec spec = wiener_spec(wiener(10.0));
  const double tr = refractory_moment(spec, elastic(0.5), 1);
  const double eps = 1e-6 * (kS - kNu);
  CHECK(rel(fet_moment(spec, elastic(0.5), kS - eps, 1), tr) < 1e-6);
  CHECK(rel(fet_moment(spec, elastic(0.5), kS - eps, 1), tr) > 0.0);
}

TEST_CASE("monotonicity and positivity") {
  const DiffusionSpec spec = ou_spec(ou(20.0));
  double previous = INFINITY;
  for (double x : {-80.0, -75.0, -70.0, -65.0, -60.0, -55.0, -51.0}) {
    const double t = fpt_moment(spec, kS, x, 1);
    CHECK(t < previous);
    CHECK(t > 0.0);
    CHECK(fpt_variance(spec, kS, x) >= 0.0);
    CHECK(fet_moment(spec, elastic(0.5), x, 2) >= fpt_moment(spec, kS, x, 2));
    previous = t;
  }
  double last = 0.0;
  for (double p : {0.1, 0.5, 0.9, 0.99}) {
    const double v = refractory_variance(spec, elastic(p));
    CHECK(v > last);
    last = v;
  }
}

TEST_CASE("Wiener refractory variance against an independent integral") {
  const WienerParams p = wiener(10.0);
  const DiffusionSpec spec = wiener_spec(p);
  const double C1 = speed_weighted_mean(spec, [&](double x) { return wiener_t1(p, x); });
  const double K = 2.0 * (std::exp(8.0) - std::exp(5.0));
  for (double prob : {0.1, 0.99}) {
    const double r = prob / (1.0 - prob);
    CHECK(rel(refractory_variance(spec, elastic(prob)), 2.0 * r * C1 + r * r * K * K) < 1e-9);
  }
  CHECK(rel(refractory_variance(spec, elastic(0.1)), 7.681238e5) < 1e-6);
}

TEST_CASE("Feller refractory variance with a singular speed density") {
  // t_1 from the series, integrated against k with the power-law rule.
  for (double xi : {3.0, 4.0, 5.0}) {
    const FellerParams p = feller(xi);
    const DiffusionSpec spec = feller_spec(p);
    const double C1 = speed_weighted_mean(spec, [&](double x) { return feller_fpt_mean(p, kS, x); });
    const double K = speed_measure(spec, kNu, kS, 1e-11);
    for (double prob : {0.1, 0.9}) {
      const double r = prob / (1.0 - prob);
      CHECK(rel(refractory_variance(spec, elastic(prob)), 2.0 * r * C1 + r * r * K * K) < 1e-8);
    }
  }
}

TEST_CASE("Feller variance against a nested integral") {
  // t_2(S|x) = 2 integral_x^S h(z) integral_nu^z k(u) t_1(u) du dz with t_1 from the series
  for (double xi : {4.0, 5.0}) {
    const FellerParams p = feller(xi);
    const DiffusionSpec spec = feller_spec(p);
    const auto inner = [&](double z) {
      const auto f = [&](double u) {
        return std::exp(std::numbers::ln2 - std::log(spec.variance_offset(u)) - spec.log_scale_offset(u)) *
               feller_fpt_mean(p, kS, kNu + u);
      };
      return integrate(f, 0.0, z - kNu, spec.lower_speed_exponent, 1e-12);
    };
    const double t2 =
        2.0 * integrate([&](double z) { return std::exp(spec.log_scale(z)) * inner(z); }, kX, kS, std::nullopt, 1e-11);
    const double t1 = feller_fpt_mean(p, kS, kX);
    CHECK(rel(fpt_variance(spec, kS, kX), t2 - t1 * t1) < 1e-8);
  }
}

TEST_CASE("summary identities") {
  for (const DiffusionSpec& spec : {wiener_spec(wiener(10.0)), ou_spec(ou(10.0)), feller_spec(feller(5.0))}) {
    const MomentSummary s = summary(spec, elastic(0.9), kX);
    CHECK(s.identity_residuals.size() == 5);
    CHECK(s.max_residual() < 1e-8);
    CHECK(rel(s.fet_t1, s.t1 + s.refractory_mean) < 1e-8);
    CHECK(rel(s.fet_variance, s.fpt_variance + s.refractory_variance) < 1e-8);
  }
  const MomentSummary w = summary(wiener_spec(wiener(50.0)), elastic(0.99), kX);
  CHECK(rel(w.refractory_mean, 4.424806e2) < 1e-6);
  CHECK(rel(w.refractory_variance, 2.101676e5) < 1e-6);
}

TEST_CASE("values beyond the double range") {
  const DiffusionSpec spec = ou_spec(ou(10.0));
  CHECK(rel(refractory_moment(spec, elastic(0.1), 1), 9.901436e41) < 1e-6);
  CHECK(rel(refractory_variance(spec, elastic(0.1)), 9.803844e83) < 1e-6);
  CHECK_THROWS_AS(refractory_moment(spec, elastic(0.99), 8), OverflowError);
  const ExtendedReal big = refractory_moment_extended(spec, elastic(0.99), 8);
  CHECK(big.log_abs() > 709.0);
  CHECK(std::isfinite(big.log_abs()));
}

TEST_CASE("parameter errors") {
  const DiffusionSpec spec = wiener_spec(wiener(10.0));
  CHECK_THROWS_AS(fet_moment(spec, ElasticThreshold{kS, 0.0, 1.0}, kX, 1), ParameterError);
  CHECK_THROWS_AS(fpt_moment(spec, kS, kX, 1, 0.0), ParameterError);
  DiffusionSpec attracting = spec;
  attracting.lower_class = BoundaryClass::natural_attracting;
  CHECK_THROWS_AS(fpt_moment(attracting, kS, kX, 1), InvalidBoundaryError);
}
