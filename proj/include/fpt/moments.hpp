#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "fpt/diffusion.hpp"
#include "fpt/quadrature.hpp"

namespace fpt {

/// Default relative tolerance for all moment computations.
inline constexpr double kDefaultTolerance = 1e-9;
/// Highest moment order covered by reference data; larger orders still work.
inline constexpr int kMaxValidatedOrder = 4;

/// First- and second-order passage statistics for one (spec, threshold, x).
struct MomentSummary {
  double t1 = 0.0;  ///< FPT mean t_1(S|x)
  double t2 = 0.0;
  double fpt_variance = 0.0;
  double fet_t1 = 0.0;  ///< first-exit-time mean through the elastic threshold
  double fet_t2 = 0.0;
  double fet_variance = 0.0;
  double refractory_mean = 0.0;
  double refractory_second = 0.0;
  double refractory_variance = 0.0;
  double speed_measure = 0.0;             ///< K(r1, S]
  double speed_weighted_fpt_mean = 0.0;   ///< integral_{r1}^S k(u) t_1(S|u) du
  std::map<std::string, double> identity_residuals;

  double max_residual() const;
};

/// All recursion levels evaluated on one fixed grid over [r1, S].
///
/// Level n is built from level n-1 by one cumulative integral of k * t_{n-1}
/// followed by one right-cumulative integral of h times that, so the cost per
/// level is linear in the number of nodes.
class MomentRecursion {
 public:
  /// Profile of one recursion level together with integral_{r1}^S k * previous.
  struct Level {
    ExtendedProfile profile;
    ExtendedReal previous_speed_integral;
  };

  MomentRecursion(const DiffusionSpec& spec, double level, Grid grid);

  /// Graded starting grid: power-law or geometric panels at a singular r1,
  /// extra bisection where log k changes quickly, `points` as breakpoints.
  static Grid initial_grid(const DiffusionSpec& spec, double level, std::span<const double> points);

  const Grid& grid() const { return grid_; }

  /// t_0 = 1 on every node and breakpoint.
  ExtendedProfile unit_profile() const;

  /// Order-n profile from the order n-1 profile. `ratio` = beta/alpha adds the
  /// elastic term n * ratio * integral k * previous; zero gives plain FPT moments.
  Level next(const ExtendedProfile& previous, int n, double ratio) const;

  /// Profiles of orders 0..n.
  std::vector<ExtendedProfile> profiles(int n, double ratio) const;

  /// integral_{r1}^S k * profile.
  ExtendedReal speed_integral(const ExtendedProfile& profile) const;

  /// Value at a breakpoint of the grid.
  ExtendedReal value_at(const ExtendedProfile& profile, double x) const;

 private:
  Grid grid_;
  std::vector<double> log_h_;
  std::vector<double> log_k_;
};

/// x -> t_n(S|x) on a grid over [r1, S].
GridFunction fpt_moment_profile(const DiffusionSpec& spec, double level, int n,
                                double tol = kDefaultTolerance);

/// t_n(S|x); exactly zero for x == S and n >= 1.
double fpt_moment(const DiffusionSpec& spec, double level, double x, int n,
                  double tol = kDefaultTolerance);

/// V(S|x) = t_2 - t_1^2.
double fpt_variance(const DiffusionSpec& spec, double level, double x, double tol = kDefaultTolerance);

/// First-exit-time moment through an elastic threshold by direct recursion.
double fet_moment(const DiffusionSpec& spec, const ElasticThreshold& threshold, double x, int n,
                  double tol = kDefaultTolerance);

/// Which binomial relation to FPT moments is used.
enum class RelationForm {
  fpt_profiles = 1,  ///< t_{n-1-j}(S|x) times integral k * fet_j
  fet_profiles = 2,  ///< fet_j(S|x) times integral k * t_{n-1-j}
};

/// First-exit-time moment through its binomial relation with FPT moments.
double fet_moment_via_relation(const DiffusionSpec& spec, const ElasticThreshold& threshold, double x,
                               int n, RelationForm form, double tol = kDefaultTolerance);

/// E(T_r^n) = n (beta/alpha) integral_{r1}^S k(u) fet_{n-1}(S|u) du.
double refractory_moment(const DiffusionSpec& spec, const ElasticThreshold& threshold, int n,
                         double tol = kDefaultTolerance);
ExtendedReal refractory_moment_extended(const DiffusionSpec& spec, const ElasticThreshold& threshold,
                                        int n, double tol = kDefaultTolerance);

/// V(T_r) = 2 r integral k t_1 + (r K)^2 with r = beta/alpha.
double refractory_variance(const DiffusionSpec& spec, const ElasticThreshold& threshold,
                           double tol = kDefaultTolerance);

/// Every summary field plus identity residuals, each normalised by the
/// larger operand:
///   mean_identity        fet_t1 vs t1 + E(Tr)
///   variance_identity    fet variance vs V + V(Tr)
///   second_moment_forms  the two binomial forms of fet_t2 against each other
///   second_moment_direct direct fet_t2 vs the first binomial form
///   refractory_second    E(Tr^2) by recursion vs V(Tr) + E(Tr)^2
MomentSummary summary(const DiffusionSpec& spec, const ElasticThreshold& threshold, double x,
                      double tol = kDefaultTolerance);

}  // namespace fpt
