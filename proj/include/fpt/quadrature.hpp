#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "fpt/extended_real.hpp"

namespace fpt {

/// 8-point Gauss-Legendre rule on [-1, 1] together with its spectral
/// integration matrices: `left[i][j]` integrates the j-th Lagrange basis
/// polynomial over [-1, nodes[i]], `right[i][j]` over [nodes[i], 1].
struct PanelRule {
  static constexpr std::size_t size = 8;
  std::array<double, size> nodes{};
  std::array<double, size> weights{};
  std::array<std::array<double, size>, size> left{};
  std::array<std::array<double, size>, size> right{};

  static const PanelRule& get();
};

enum class Grading { uniform, geometric, power_law };

/// Panel partition of [a, b] carrying Gauss-Legendre nodes.
///
/// Panels live in a parameter w in [0, 1] with x(w) = a + (b - a) w^p. The
/// power p = 1 except for power-law grading, where p = 1/gamma turns an
/// endpoint singularity (x - a)^(gamma - 1) into a smooth integrand.
class Grid {
 public:
  static Grid uniform(double a, double b, std::size_t panels);
  /// Uniform panels, with the first one halved `levels` times toward a.
  static Grid geometric(double a, double b, std::size_t panels, int levels);
  /// Substitution x = a + (b - a) w^(1/gamma) plus geometric panels toward w = 0.
  static Grid power_law(double a, double b, double gamma, std::size_t panels, int levels);

  /// Every panel bisected in the parameter variable. Existing breakpoints stay.
  Grid refined() const;
  /// Bisects the panels flagged in `which` (size panel_count()).
  Grid split(const std::vector<bool>& which) const;
  /// Adds x as a panel boundary. No-op if x already is one or lies outside (a, b).
  Grid with_breakpoint(double x) const;

  double lower() const { return lower_; }
  double upper() const { return upper_; }
  Grading grading() const { return grading_; }
  double power() const { return power_; }
  std::size_t panel_count() const { return knot_w_.size() - 1; }
  std::size_t node_count() const { return nodes_.size(); }

  std::span<const double> parameter_knots() const { return knot_w_; }
  std::span<const double> breakpoints() const { return knot_x_; }
  std::span<const double> nodes() const { return nodes_; }
  /// nodes[i] - a, computed from the parameter so it keeps full relative
  /// accuracy next to a.
  std::span<const double> offsets() const { return offsets_; }
  /// dx/ds at each node, s the panel-local variable in [-1, 1].
  std::span<const double> jacobians() const { return jacobians_; }
  /// Quadrature weights in x: sum_i weights[i] f(nodes[i]) approximates the integral.
  std::span<const double> weights() const { return weights_; }

  /// Index of the panel containing x; the last panel owns b.
  std::size_t panel_of(double x) const;
  std::optional<std::size_t> knot_index(double x) const;

  double to_parameter(double x) const;
  double from_parameter(double w) const;

 private:
  Grid(double a, double b, Grading grading, double power, std::vector<double> knot_w,
       std::vector<double> knot_x);
  void build_nodes();

  double lower_ = 0.0;
  double upper_ = 1.0;
  Grading grading_ = Grading::uniform;
  double power_ = 1.0;
  std::vector<double> knot_w_;
  std::vector<double> knot_x_;
  std::vector<double> nodes_;
  std::vector<double> offsets_;
  std::vector<double> jacobians_;
  std::vector<double> weights_;
};

/// Function sampled at the nodes of a grid, optionally also at its breakpoints.
///
/// Values are stored as `values[i] * 2^exponent_offset` with the offset chosen
/// so the largest magnitude lies in [1, 2).
class GridFunction {
 public:
  GridFunction(Grid grid, std::vector<double> values, double exponent_offset = 0.0,
               std::vector<double> knot_values = {});

  static GridFunction sample(Grid grid, const std::function<double(double)>& f);
  static GridFunction from_extended(Grid grid, std::span<const ExtendedReal> node_values,
                                    std::span<const ExtendedReal> knot_values);

  const Grid& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  double exponent_offset() const { return exponent_offset_; }
  bool has_knot_values() const { return !knot_values_.empty(); }

  double value(std::size_t node) const;
  double knot_value(std::size_t knot) const;
  ExtendedReal extended_value(std::size_t node) const;
  ExtendedReal extended_knot_value(std::size_t knot) const;
  std::vector<ExtendedReal> extended_values() const;
  std::vector<ExtendedReal> extended_knot_values() const;

  /// Exact at breakpoints; barycentric panel interpolation elsewhere.
  double at(double x) const;

 private:
  void normalize();

  Grid grid_;
  std::vector<double> values_;
  double exponent_offset_ = 0.0;
  std::vector<double> knot_values_;
};

/// Node and breakpoint values of a function in extended form.
struct ExtendedProfile {
  std::vector<ExtendedReal> nodes;
  std::vector<ExtendedReal> knots;
};

/// z -> integral_a^z f, given f at the grid nodes. Each panel is scaled by its
/// own largest exponent before summation.
ExtendedProfile cumulative_from_left(const Grid& grid, std::span<const ExtendedReal> integrand);
/// z -> integral_z^b f.
ExtendedProfile cumulative_from_right(const Grid& grid, std::span<const ExtendedReal> integrand);
/// integral_a^b f with pairwise summation over panels.
ExtendedReal integrate_nodes(const Grid& grid, std::span<const ExtendedReal> integrand);

/// F(z) = integral_a^z f on the same grid, F(a) = 0.
GridFunction cumulative_integral(const GridFunction& f);

/// Fixed-grid rule, no refinement.
double integrate_on(const Grid& grid, const std::function<double(double)>& f);

inline constexpr int kMaxPanelDoublings = 20;

/// Integral of f over [a, b] by panel doubling until two successive levels
/// agree within tol/2. `singularity_exponent` = gamma - 1 declares
/// f(x) ~ (x - a)^(gamma - 1) near a.
double integrate(const std::function<double(double)>& f, double a, double b,
                 std::optional<double> singularity_exponent = std::nullopt, double tol = 1e-9,
                 int max_doublings = kMaxPanelDoublings);

/// As integrate() for a positive integrand given through its logarithm.
ExtendedReal integrate_log(const std::function<double(double)>& log_f, double a, double b,
                           std::optional<double> singularity_exponent = std::nullopt,
                           double tol = 1e-9, int max_doublings = kMaxPanelDoublings);

/// Starting grid used by integrate() for the given endpoint behaviour.
Grid initial_grid(double a, double b, std::optional<double> singularity_exponent);

/// Pairwise (cascade) sum in index order.
double pairwise_sum(std::span<const double> values);
ExtendedReal pairwise_sum(std::span<const ExtendedReal> values);

}  // namespace fpt
