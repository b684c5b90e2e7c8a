#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "fpt/diffusion.hpp"

namespace fpt {

inline constexpr double kDefaultSeriesTolerance = 1e-12;

/// dX = mu dt + sigma dW on [nu, +inf), reflecting at nu.
struct WienerParams {
  double mu = 0.0;
  double sigma2 = 1.0;
  double nu = 0.0;
};

/// dX = -(X - rho)/theta dt + sigma dW on [nu, +inf), reflecting at nu.
struct OUParams {
  double theta = 1.0;
  double rho = 0.0;
  double sigma2 = 1.0;
  double nu = 0.0;
};

/// dX = -(X - rho)/theta dt + sqrt(2 xi (X - nu)) dW on [nu, +inf).
struct FellerParams {
  double theta = 1.0;
  double rho = 1.0;
  double xi = 1.0;
  double nu = 0.0;
};

/// log h(x) = -2 mu x / sigma2 (anchor 0).
DiffusionSpec wiener_spec(const WienerParams& p);
/// log h(x) = (x^2 - 2 rho x) / (theta sigma2) (anchor 0).
DiffusionSpec ou_spec(const OUParams& p);
/// log h(x) = x/(theta xi) - g log(x - nu), g = (rho - nu)/(theta xi).
/// A regular lower end gets the reflecting condition.
DiffusionSpec feller_spec(const FellerParams& p);

/// Entrance when rho - nu >= xi theta, otherwise regular (reflecting imposed).
BoundaryClass classify_feller_lower(const FellerParams& p);

/// Bookkeeping for one truncated power series.
struct SeriesTrace {
  std::size_t terms = 0;
  std::array<double, 3> last_terms{};  ///< magnitudes of the final three terms, oldest first
};

struct SeriesMean {
  double value = 0.0;
  std::vector<SeriesTrace> series;
};

/// Closed-form t_1(S|x).
double wiener_fpt_mean(const WienerParams& p, double S, double x);

SeriesMean ou_fpt_mean_detailed(const OUParams& p, double S, double x,
                                double series_tol = kDefaultSeriesTolerance);
double ou_fpt_mean(const OUParams& p, double S, double x, double series_tol = kDefaultSeriesTolerance);

SeriesMean feller_fpt_mean_detailed(const FellerParams& p, double S, double x,
                                    double series_tol = kDefaultSeriesTolerance);
double feller_fpt_mean(const FellerParams& p, double S, double x,
                       double series_tol = kDefaultSeriesTolerance);

}  // namespace fpt
