#include <doctest.h>

#include <cmath>

#include "fpt/models.hpp"
#include "fpt/moments.hpp"

using namespace fpt;

namespace {

double rel(double a, double b) { return std::fabs(a - b) / std::fmax(std::fabs(a), std::fabs(b)); }

}  // namespace

TEST_CASE("Wiener closed form") {
  const WienerParams p{-0.5, 10.0, -80.0};
  CHECK(rel(wiener_fpt_mean(p, -50.0, -70.0), 3.073451e2) < 1e-6);
  CHECK(wiener_fpt_mean(p, -50.0, -50.0) == 0.0);
  // zero drift: (S - x)(S + x - 2 nu) / sigma2
  CHECK(wiener_fpt_mean({0.0, 4.0, 0.0}, 2.0, 0.0) == doctest::Approx(1.0));
}

TEST_CASE("Wiener mean is continuous through zero drift") {
  const double at_zero = wiener_fpt_mean({0.0, 10.0, -80.0}, -50.0, -70.0);
  for (double mu : {1e-8, -1e-8, 1e-6, -1e-6}) {
    CHECK(rel(wiener_fpt_mean({mu, 10.0, -80.0}, -50.0, -70.0), at_zero) < 1e-5);
  }
  CHECK(rel(wiener_fpt_mean({1e-8, 10.0, -80.0}, -50.0, -70.0), at_zero) < 1e-7);
}

TEST_CASE("OU series against the moment recursion") {
  for (double s2 : {10.0, 20.0, 30.0, 40.0, 100.0, 200.0}) {
    const OUParams p{5.0, -70.0, s2, -80.0};
    for (double x : {-80.0, -70.0, -61.5, -50.5}) {
      CHECK(rel(ou_fpt_mean(p, -50.0, x), fpt_moment(ou_spec(p), -50.0, x, 1)) < 1e-9);
    }
  }
  CHECK(rel(ou_fpt_mean({5.0, -70.0, 100.0, -80.0}, -50.0, -70.0), 1.038152e1) < 1e-6);
  CHECK(rel(ou_fpt_mean({5.0, -70.0, 10.0, -80.0}, -50.0, -70.0), 9.862135e3) < 1e-6);
}

TEST_CASE("Feller series against the moment recursion") {
  for (double xi : {0.5, 1.0, 2.0, 2.5, 4.0, 5.0}) {
    const FellerParams p{5.0, -70.0, xi, -80.0};
    for (double x : {-80.0, -79.99, -70.0, -50.5}) {
      CHECK(rel(feller_fpt_mean(p, -50.0, x), fpt_moment(feller_spec(p), -50.0, x, 1)) < 1e-9);
    }
  }
  CHECK(rel(feller_fpt_mean({5.0, -70.0, 0.5, -80.0}, -50.0, -70.0), 3.768002e2) < 1e-6);
}

TEST_CASE("oracle means vanish at the threshold") {
  CHECK(ou_fpt_mean({5.0, -70.0, 10.0, -80.0}, -50.0, -50.0) == 0.0);
  CHECK(feller_fpt_mean({5.0, -70.0, 1.0, -80.0}, -50.0, -50.0) == 0.0);
  CHECK_THROWS_AS(ou_fpt_mean({5.0, -70.0, 10.0, -80.0}, -50.0, -40.0), DomainError);
  CHECK_THROWS_AS(feller_fpt_mean({5.0, -70.0, 1.0, -80.0}, -50.0, -81.0), DomainError);
}

TEST_CASE("series traces end in shrinking terms") {
  const SeriesMean ou = ou_fpt_mean_detailed({5.0, -70.0, 20.0, -80.0}, -50.0, -70.0);
  CHECK(ou.series.size() == 5);
  const SeriesMean feller = feller_fpt_mean_detailed({5.0, -70.0, 1.0, -80.0}, -50.0, -70.0);
  for (const SeriesMean* m : {&ou, &feller}) {
    for (const SeriesTrace& t : m->series) {
      if (t.terms == 0) continue;
      CHECK(t.terms >= 3);
      CHECK(t.last_terms[2] <= t.last_terms[1]);
      CHECK(t.last_terms[1] <= t.last_terms[0]);
      CHECK(t.last_terms[2] <= 1e-12 * std::fabs(m->value) + 1e-300);
    }
  }
}

TEST_CASE("series overflow is reported") {
  // (S - rho)^2 / (sigma2 theta) = 8e4: terms overflow before they decay
  CHECK_THROWS_AS(ou_fpt_mean({5.0, -70.0, 1e-3, -80.0}, -50.0, -70.0), SeriesDivergenceError);
}

TEST_CASE("model parameter checks") {
  CHECK_THROWS_AS(wiener_spec({0.0, 0.0, 0.0}), ParameterError);
  CHECK_THROWS_AS(ou_spec({-1.0, 0.0, 1.0, 0.0}), ParameterError);
  CHECK_THROWS_AS(feller_spec({5.0, -90.0, 1.0, -80.0}), ParameterError);
  CHECK_THROWS_AS(feller_spec({5.0, -70.0, 0.0, -80.0}), ParameterError);
}
