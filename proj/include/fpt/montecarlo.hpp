#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fpt/deadtime.hpp"
#include "fpt/diffusion.hpp"

namespace fpt {

struct SampleStats {
  std::size_t n_samples = 0;
  double mean = 0.0;
  double variance = 0.0;
  double std_error_of_mean = 0.0;
  std::uint64_t seed = 0;
  std::map<std::string, double> scheme_params;
};

/// Mean and unbiased variance of `values`, both by pairwise summation.
SampleStats sample_stats(std::span<const double> values, std::uint64_t seed);

struct SimulationOptions {
  /// Worker threads; 0 picks the hardware concurrency. Results do not depend on it.
  unsigned threads = 0;
  /// Paths still running at this time are stopped. Non-positive: 1000 x the
  /// mean from the moment recursion.
  double time_cap = 0.0;
  /// Largest fraction of capped paths before TimeCapError.
  double max_capped_fraction = 1e-3;
};

/// Euler-Maruyama passage times through S from x, with folding at a finite
/// lower bound and a Brownian-bridge test for crossings between grid times.
SampleStats simulate_fpt(const DiffusionSpec& spec, double S, double x, std::size_t n_samples, double dt,
                         std::uint64_t seed, const SimulationOptions& options = {});

struct ElasticSample {
  SampleStats fet;
  SampleStats refractory;
};

/// Birth-death walk on r1 + i dx with an elastic threshold node at S.
///
/// Interior nodes hold for dx^2/A2 and step up with probability
/// 1/2 + A1 dx / (2 A2). The lower node always steps up. Each visit of the
/// threshold node is absorbed with probability a/(1 + a), with
/// a = (alpha/beta) h(S - dx/2) dx; otherwise the walk steps back down.
/// Both r1 and x must lie on the lattice and S - r1 must be a multiple of dx.
ElasticSample simulate_fet_elastic(const DiffusionSpec& spec, const ElasticThreshold& threshold, double x,
                                   std::size_t n_samples, double dx, std::uint64_t seed,
                                   const SimulationOptions& options = {});

/// Exact expected refractory period of the walk above, by recurrence.
double elastic_walk_refractory_mean(const DiffusionSpec& spec, const ElasticThreshold& threshold, double dx);

/// Runs the zero-drift Wiener check of the walk: the expected refractory
/// period must equal (beta/alpha) 2 (S - nu)/sigma2. Throws CalibrationError.
void check_elastic_calibration();

struct CounterSample {
  std::size_t n_windows = 0;
  std::uint64_t seed = 0;
  std::vector<double> frequency;  ///< empirical pmf
  std::vector<double> std_error;  ///< sqrt(f (1 - f) / n) per bin
  std::vector<std::size_t> counts;
};

/// Non-paralyzable counter driven by Poisson arrivals, one window per stream.
CounterSample simulate_counter(const CounterParams& p, std::size_t n_windows, std::uint64_t seed,
                               unsigned threads = 0);

}  // namespace fpt
