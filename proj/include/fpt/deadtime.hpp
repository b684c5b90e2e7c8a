#pragma once

#include <cstddef>
#include <vector>

namespace fpt {

/// Poisson input with rate lambda observed over [0, T], dead time tau after each output.
struct CounterParams {
  double lambda = 1.0;
  double T = 1.0;
  double tau = 0.0;
};

struct CountDistribution {
  std::vector<double> pmf;          ///< pmf[n], n = 0..n_max
  double normalization_defect = 0.0;  ///< |sum pmf - 1|
  double clamped = 0.0;             ///< total negative rounding set to zero
  double mean = 0.0;
  double variance = 0.0;
};

/// 1 for x > 0, 0 for x <= 0.
int heaviside(double x);

double poisson_pmf(double lambda, double T, int n);

/// P(Poisson(m) >= n).
double poisson_upper_tail(int n, double m);

/// Probability of exactly n >= 1 outputs in the window.
double output_pmf(const CounterParams& p, int n);

/// Largest count with nonzero probability (tau > 0), or a Poisson tail cap (tau == 0).
int max_output_count(const CounterParams& p);

CountDistribution output_distribution(const CounterParams& p);

void validate(const CounterParams& p);

}  // namespace fpt
