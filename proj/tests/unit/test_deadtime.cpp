#include <doctest.h>

#include <cmath>

#include <boost/math/special_functions/gamma.hpp>

#include "fpt/deadtime.hpp"
#include "fpt/errors.hpp"

using namespace fpt;

namespace {

// P(N >= n) = P(n-th output by T) = P(Gamma(n, lambda) <= T - (n - 1) tau)
double at_least(const CounterParams& p, int n) {
  if (n == 0) return 1.0;
  const double open = p.T - (n - 1) * p.tau;
  return open > 0.0 ? boost::math::gamma_p(n, p.lambda * open) : 0.0;
}

double gamma_oracle(const CounterParams& p, int n) { return at_least(p, n) - at_least(p, n + 1); }

}  // namespace

TEST_CASE("Heaviside convention") {
  CHECK(heaviside(0.0) == 0);
  CHECK(heaviside(-0.0) == 0);
  CHECK(heaviside(1e-300) == 1);
  CHECK(heaviside(-2.0) == 0);
}

TEST_CASE("Poisson probabilities") {
  CHECK(poisson_pmf(1.0, 1.0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(poisson_pmf(2.0, 2.0, 1) == doctest::Approx(4.0 * std::exp(-4.0)).epsilon(1e-15));
  CHECK(poisson_pmf(0.0, 2.0, 0) == 1.0);
  CHECK(poisson_upper_tail(0, 3.0) == 1.0);
  for (int n : {1, 2, 5, 20}) {
    for (double m : {0.5, 3.0, 19.0, 60.0}) {
      CHECK(poisson_upper_tail(n, m) == doctest::Approx(boost::math::gamma_p(n, m)).epsilon(1e-13));
    }
  }
}

TEST_CASE("hand-evaluated output probability") {
  // Q(2, 4) - Q(3, 3) = 8.5 e^{-3} - 5 e^{-4}
  const CounterParams p{1.0, 5.0, 1.0};
  CHECK(output_pmf(p, 2) == doctest::Approx(8.5 * std::exp(-3.0) - 5.0 * std::exp(-4.0)).epsilon(1e-14));
  CHECK(output_pmf(p, 2) == doctest::Approx(0.331612).epsilon(2e-6));
  CHECK(output_pmf({1.0, 1.0, 1.0}, 3) == 0.0);
}

TEST_CASE("output probabilities against the Erlang form") {
  for (double lambda : {0.3, 1.0, 7.5}) {
    for (double tau : {0.05, 0.4, 1.0, 2.5}) {
      const CounterParams p{lambda, 5.0, tau};
      const CountDistribution d = output_distribution(p);
      for (std::size_t n = 0; n < d.pmf.size(); ++n) {
        CHECK(d.pmf[n] == doctest::Approx(gamma_oracle(p, static_cast<int>(n))).epsilon(1e-12).scale(1.0));
      }
    }
  }
}

TEST_CASE("no dead time gives the Poisson law") {
  for (double lambda : {0.5, 2.0, 10.0}) {
    const CounterParams p{lambda, 3.0, 0.0};
    const CountDistribution d = output_distribution(p);
    for (std::size_t n = 0; n < d.pmf.size(); ++n)
      CHECK(std::fabs(d.pmf[n] - poisson_pmf(lambda, 3.0, static_cast<int>(n))) < 1e-14);
    CHECK(d.mean == doctest::Approx(lambda * 3.0).epsilon(1e-12));
  }
}

TEST_CASE("normalization over a parameter sweep") {
  int cases = 0;
  for (double lambda : {0.1, 1.0, 4.0, 20.0, 80.0}) {
    for (double T : {0.5, 5.0}) {
      for (double tau : {0.0, 0.01, 0.3, 1.0, 7.0}) {
        const CountDistribution d = output_distribution({lambda, T, tau});
        CHECK(d.normalization_defect <= 1e-12);
        CHECK(d.clamped <= 1e-14);
        ++cases;
      }
    }
  }
  CHECK(cases == 50);
}

TEST_CASE("support is bounded by the dead time") {
  for (double tau : {0.3, 1.0, 1.7}) {
    const CounterParams p{3.0, 5.0, tau};
    const int top = max_output_count(p);
    CHECK(top == static_cast<int>(std::floor(5.0 / tau)) + 1);
    CHECK(output_pmf(p, top + 1) == 0.0);
    CHECK(output_pmf(p, top + 5) == 0.0);
  }
}

TEST_CASE("dead time longer than the window") {
  const CountDistribution d = output_distribution({1.0, 5.0, 6.0});
  CHECK(d.pmf.size() == 2);
  CHECK(d.pmf[0] == doctest::Approx(std::exp(-5.0)));
  CHECK(d.pmf[1] == doctest::Approx(-std::expm1(-5.0)).epsilon(1e-15));
}

TEST_CASE("mean count falls as the dead time grows") {
  double last = INFINITY;
  for (double tau : {0.0, 0.1, 0.5, 1.0, 2.0, 10.0}) {
    const double mean = output_distribution({2.0, 5.0, tau}).mean;
    CHECK(mean < last);
    last = mean;
  }
}

TEST_CASE("counter parameter checks") {
  CHECK_THROWS_AS(output_distribution({0.0, 1.0, 0.0}), ParameterError);
  CHECK_THROWS_AS(output_distribution({1.0, -1.0, 0.0}), ParameterError);
  CHECK_THROWS_AS(output_distribution({1.0, 1.0, -0.5}), ParameterError);
  CHECK_THROWS_AS(output_pmf({1.0, 1.0, 0.1}, 0), DomainError);
  CHECK_THROWS_AS(poisson_pmf(1.0, 1.0, -1), DomainError);
}
