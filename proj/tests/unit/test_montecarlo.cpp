#include <doctest.h>

#include <cmath>
#include <vector>

#include "fpt/models.hpp"
#include "fpt/moments.hpp"
#include "fpt/montecarlo.hpp"
#include "fpt/philox.hpp"

using namespace fpt;

namespace {

const WienerParams kFast{-0.5, 50.0, -80.0};

}  // namespace

TEST_CASE("Philox known answers") {
  using P = Philox4x32;
  CHECK(P::bijection({0, 0, 0, 0}, {0, 0}) == P::counter_type{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(P::bijection({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        P::counter_type{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(P::bijection({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        P::counter_type{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("Philox streams") {
  Philox4x32 a(42, 7), b(42, 7), c(42, 8);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto va = a();
    CHECK(va == b());
    differs |= va != c();
  }
  CHECK(differs);

  Philox4x32 u(1, 0);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double v = uniform_open(u);
    REQUIRE(v > 0.0);
    REQUIRE(v < 1.0);
    sum += v;
  }
  CHECK(std::fabs(sum / 100000 - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / 100000));
}

TEST_CASE("sample statistics") {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  const SampleStats s = sample_stats(v, 9);
  CHECK(s.n_samples == 4);
  CHECK(s.mean == doctest::Approx(2.5));
  CHECK(s.variance == doctest::Approx(5.0 / 3.0));
  CHECK(s.std_error_of_mean == doctest::Approx(std::sqrt(5.0 / 12.0)));
  CHECK(s.seed == 9);
}

TEST_CASE("Euler passage times are reproducible across thread counts") {
  const DiffusionSpec spec = wiener_spec(kFast);
  SimulationOptions one, three;
  one.threads = 1;
  three.threads = 3;
  const SampleStats a = simulate_fpt(spec, -50.0, -70.0, 2000, 0.05, 11, one);
  const SampleStats b = simulate_fpt(spec, -50.0, -70.0, 2000, 0.05, 11, three);
  CHECK(a.mean == b.mean);
  CHECK(a.variance == b.variance);
  const SampleStats c = simulate_fpt(spec, -50.0, -70.0, 2000, 0.05, 12, one);
  CHECK(a.mean != c.mean);

  const double exact = wiener_fpt_mean(kFast, -50.0, -70.0);
  CHECK(std::fabs(a.mean - exact) < 4.0 * a.std_error_of_mean);
  CHECK(a.scheme_params.at("dt") == 0.05);
  CHECK(a.scheme_params.at("capped_paths") == 0.0);
}

TEST_CASE("passage from the threshold takes no time") {
  const SampleStats s = simulate_fpt(wiener_spec(kFast), -50.0, -50.0, 100, 0.1, 1);
  CHECK(s.mean == 0.0);
  CHECK(s.variance == 0.0);
}

TEST_CASE("time cap") {
  SimulationOptions options;
  options.time_cap = 1.0;
  CHECK_THROWS_AS(simulate_fpt(wiener_spec(kFast), -50.0, -70.0, 200, 0.05, 1, options), TimeCapError);
  CHECK_THROWS_AS(simulate_fpt(wiener_spec(kFast), -50.0, -70.0, 10, 0.0, 1), ParameterError);
  CHECK_THROWS_AS(simulate_fpt(wiener_spec(kFast), -50.0, -40.0, 10, 0.1, 1), DomainError);
}

TEST_CASE("elastic walk calibration and exact expectation") {
  CHECK_NOTHROW(check_elastic_calibration());
  // the walk expectation approaches r K as dx shrinks
  const DiffusionSpec spec = wiener_spec(kFast);
  const auto threshold = ElasticThreshold::from_reflection_probability(-50.0, 0.5);
  const double exact = refractory_moment(spec, threshold, 1);
  double last_gap = INFINITY;
  for (double dx : {2.0, 1.0, 0.5, 0.25}) {
    const double gap = std::fabs(elastic_walk_refractory_mean(spec, threshold, dx) - exact) / exact;
    CHECK(gap < last_gap);
    last_gap = gap;
  }
  CHECK(last_gap < 1e-3);
}

TEST_CASE("elastic walk samples") {
  const DiffusionSpec spec = wiener_spec(kFast);
  const auto threshold = ElasticThreshold::from_reflection_probability(-50.0, 0.5);
  SimulationOptions one, two;
  one.threads = 1;
  two.threads = 2;
  const ElasticSample a = simulate_fet_elastic(spec, threshold, -70.0, 4000, 1.0, 5, one);
  const ElasticSample b = simulate_fet_elastic(spec, threshold, -70.0, 4000, 1.0, 5, two);
  CHECK(a.fet.mean == b.fet.mean);
  CHECK(a.refractory.mean == b.refractory.mean);
  const double walk = elastic_walk_refractory_mean(spec, threshold, 1.0);
  CHECK(std::fabs(a.refractory.mean - walk) < 4.0 * a.refractory.std_error_of_mean);
  CHECK(a.fet.mean > a.refractory.mean);

  CHECK_THROWS_AS(simulate_fet_elastic(spec, threshold, -70.3, 10, 1.0, 5), ParameterError);
  CHECK_THROWS_AS(simulate_fet_elastic(spec, ElasticThreshold{-50.0, 1.0, 0.0}, -70.0, 10, 1.0, 5),
                  ParameterError);
}

TEST_CASE("elastic walk limits") {
  const WienerParams p{-0.5, 100.0, -80.0};
  const DiffusionSpec spec = wiener_spec(p);
  const ElasticSample weak = simulate_fet_elastic(
      spec, ElasticThreshold::from_reflection_probability(-50.0, 0.1), -70.0, 20000, 0.5, 3);
  CHECK(std::fabs(weak.refractory.mean - 1.281821e-1) < 3.5 * weak.refractory.std_error_of_mean);

  // nearly absorbing: the exit time is essentially the passage time
  const ElasticSample absorbing = simulate_fet_elastic(
      spec, ElasticThreshold::from_reflection_probability(-50.0, 0.01), -70.0, 20000, 0.5, 3);
  CHECK(absorbing.refractory.mean < 0.02);
  CHECK(std::fabs(absorbing.fet.mean - wiener_fpt_mean(p, -50.0, -70.0)) < 3.5 * absorbing.fet.std_error_of_mean);
}

TEST_CASE("counter simulation") {
  const CounterSample wide = simulate_counter({1.0, 5.0, 6.0}, 20000, 3, 1);
  CHECK(wide.counts.size() == 2);
  CHECK(wide.counts[0] + wide.counts[1] == 20000);

  const CounterSample a = simulate_counter({2.0, 3.0, 0.0}, 100000, 4, 1);
  const CounterSample b = simulate_counter({2.0, 3.0, 0.0}, 100000, 4, 3);
  CHECK(a.counts == b.counts);
  for (std::size_t n = 0; n < a.frequency.size(); ++n) {
    const double p = poisson_pmf(2.0, 3.0, static_cast<int>(n));
    const double se = std::sqrt(p * (1.0 - p) / 100000.0);
    CHECK(std::fabs(a.frequency[n] - p) < 4.0 * se + 1e-12);
  }
}
