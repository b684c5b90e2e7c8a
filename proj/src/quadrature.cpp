#include "fpt/quadrature.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "fpt/errors.hpp"

namespace fpt {

namespace {

using Rule = PanelRule;
constexpr std::size_t kN = Rule::size;

double lagrange_basis(const std::array<double, kN>& nodes, std::size_t j, double s) {
  double v = 1.0;
  for (std::size_t k = 0; k < kN; ++k)
    if (k != j) v *= (s - nodes[k]) / (nodes[j] - nodes[k]);
  return v;
}

// Integral of the j-th basis polynomial over [lo, hi]; exact since the basis has degree 7.
double basis_integral(const Rule& r, std::size_t j, double lo, double hi) {
  const double half = 0.5 * (hi - lo);
  const double mid = 0.5 * (hi + lo);
  double sum = 0.0;
  for (std::size_t m = 0; m < kN; ++m) sum += r.weights[m] * lagrange_basis(r.nodes, j, mid + half * r.nodes[m]);
  return half * sum;
}

Rule make_rule() {
  using boost::math::quadrature::gauss;
  const auto& abscissa = gauss<double, kN>::abscissa();
  const auto& weights = gauss<double, kN>::weights();
  Rule r;
  // boost stores the non-negative half of the symmetric rule
  const std::size_t half = abscissa.size();
  for (std::size_t i = 0; i < half; ++i) {
    r.nodes[half - 1 - i] = -abscissa[i];
    r.weights[half - 1 - i] = weights[i];
    r.nodes[kN - half + i] = abscissa[i];
    r.weights[kN - half + i] = weights[i];
  }
  for (std::size_t i = 0; i < kN; ++i)
    for (std::size_t j = 0; j < kN; ++j) {
      r.left[i][j] = basis_integral(r, j, -1.0, r.nodes[i]);
      r.right[i][j] = basis_integral(r, j, r.nodes[i], 1.0);
    }
  return r;
}

double largest_log(std::span<const ExtendedReal> values) {
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& v : values)
    if (!v.is_zero()) top = std::fmax(top, v.log_scale());
  return top;
}

// Panel values as plain doubles times exp(top), with dx/ds folded in.
bool scaled_panel(const Grid& grid, std::span<const ExtendedReal> integrand, std::size_t panel,
                  std::array<double, kN>& scaled, double& top) {
  const auto values = integrand.subspan(panel * kN, kN);
  top = largest_log(values);
  if (top == -std::numeric_limits<double>::infinity()) return false;
  const auto jac = grid.jacobians().subspan(panel * kN, kN);
  for (std::size_t j = 0; j < kN; ++j)
    scaled[j] = values[j].is_zero() ? 0.0 : values[j].mantissa() * std::exp(values[j].log_scale() - top) * jac[j];
  return true;
}

void check_size(const Grid& grid, std::span<const ExtendedReal> integrand) {
  if (integrand.size() != grid.node_count()) throw DomainError("integrand size does not match grid");
}

}  // namespace

const PanelRule& PanelRule::get() {
  static const PanelRule rule = make_rule();
  return rule;
}

// ---------------------------------------------------------------------------
// Grid

Grid::Grid(double a, double b, Grading grading, double power, std::vector<double> knot_w,
           std::vector<double> knot_x)
    : lower_(a), upper_(b), grading_(grading), power_(power), knot_w_(std::move(knot_w)),
      knot_x_(std::move(knot_x)) {
  build_nodes();
}

Grid Grid::uniform(double a, double b, std::size_t panels) {
  if (!(a < b)) throw DomainError("grid needs a < b");
  if (panels == 0) throw DomainError("grid needs at least one panel");
  std::vector<double> w(panels + 1), x(panels + 1);
  for (std::size_t i = 0; i <= panels; ++i) {
    w[i] = static_cast<double>(i) / static_cast<double>(panels);
    x[i] = a + (b - a) * w[i];
  }
  x.front() = a;
  x.back() = b;
  return Grid(a, b, Grading::uniform, 1.0, std::move(w), std::move(x));
}

Grid Grid::geometric(double a, double b, std::size_t panels, int levels) {
  Grid g = uniform(a, b, panels);
  std::vector<double> w = g.knot_w_;
  const double first = w[1];
  for (int l = 1; l <= levels; ++l) w.push_back(std::ldexp(first, -l));
  std::sort(w.begin(), w.end());
  std::vector<double> x(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) x[i] = a + (b - a) * w[i];
  x.front() = a;
  x.back() = b;
  return Grid(a, b, Grading::geometric, 1.0, std::move(w), std::move(x));
}

Grid Grid::power_law(double a, double b, double gamma, std::size_t panels, int levels) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw DomainError("power-law grading needs gamma in (0, 1]");
  Grid g = geometric(a, b, panels, levels);
  g.grading_ = Grading::power_law;
  g.power_ = 1.0 / gamma;
  for (std::size_t i = 1; i + 1 < g.knot_w_.size(); ++i) g.knot_x_[i] = g.from_parameter(g.knot_w_[i]);
  g.build_nodes();
  return g;
}

double Grid::from_parameter(double w) const {
  if (power_ == 1.0) return lower_ + (upper_ - lower_) * w;
  return lower_ + (upper_ - lower_) * std::pow(w, power_);
}

double Grid::to_parameter(double x) const {
  const double u = (x - lower_) / (upper_ - lower_);
  if (power_ == 1.0) return u;
  return std::pow(u, 1.0 / power_);
}

void Grid::build_nodes() {
  const auto& rule = PanelRule::get();
  const std::size_t panels = panel_count();
  nodes_.resize(panels * kN);
  offsets_.resize(panels * kN);
  jacobians_.resize(panels * kN);
  weights_.resize(panels * kN);
  const double length = upper_ - lower_;
  for (std::size_t p = 0; p < panels; ++p) {
    const double half = 0.5 * (knot_w_[p + 1] - knot_w_[p]);
    const double mid = 0.5 * (knot_w_[p + 1] + knot_w_[p]);
    for (std::size_t j = 0; j < kN; ++j) {
      const double w = mid + half * rule.nodes[j];
      const double dxdw = power_ == 1.0 ? length : length * power_ * std::pow(w, power_ - 1.0);
      nodes_[p * kN + j] = from_parameter(w);
      offsets_[p * kN + j] = power_ == 1.0 ? length * w : length * std::pow(w, power_);
      jacobians_[p * kN + j] = half * dxdw;
      weights_[p * kN + j] = rule.weights[j] * half * dxdw;
    }
  }
}

Grid Grid::refined() const {
  return split(std::vector<bool>(panel_count(), true));
}

Grid Grid::split(const std::vector<bool>& which) const {
  if (which.size() != panel_count()) throw DomainError("split flags do not match panel count");
  std::vector<double> w, x;
  w.reserve(knot_w_.size() * 2);
  x.reserve(knot_w_.size() * 2);
  for (std::size_t p = 0; p < panel_count(); ++p) {
    w.push_back(knot_w_[p]);
    x.push_back(knot_x_[p]);
    if (which[p]) {
      const double mid = 0.5 * (knot_w_[p] + knot_w_[p + 1]);
      w.push_back(mid);
      x.push_back(from_parameter(mid));
    }
  }
  w.push_back(knot_w_.back());
  x.push_back(knot_x_.back());
  return Grid(lower_, upper_, grading_, power_, std::move(w), std::move(x));
}

Grid Grid::with_breakpoint(double x) const {
  if (!(x > lower_ && x < upper_) || knot_index(x)) return *this;
  const std::size_t p = panel_of(x);
  double w = to_parameter(x);
  w = std::clamp(w, knot_w_[p], knot_w_[p + 1]);
  if (w == knot_w_[p] || w == knot_w_[p + 1]) return *this;
  std::vector<double> kw = knot_w_, kx = knot_x_;
  kw.insert(kw.begin() + static_cast<std::ptrdiff_t>(p + 1), w);
  kx.insert(kx.begin() + static_cast<std::ptrdiff_t>(p + 1), x);
  return Grid(lower_, upper_, grading_, power_, std::move(kw), std::move(kx));
}

std::size_t Grid::panel_of(double x) const {
  if (!(x >= lower_ && x <= upper_)) throw DomainError("point outside the grid");
  const auto it = std::upper_bound(knot_x_.begin(), knot_x_.end(), x);
  const auto idx = static_cast<std::size_t>(it - knot_x_.begin());
  return std::min(idx == 0 ? 0 : idx - 1, panel_count() - 1);
}

std::optional<std::size_t> Grid::knot_index(double x) const {
  const auto it = std::lower_bound(knot_x_.begin(), knot_x_.end(), x);
  if (it != knot_x_.end() && *it == x) return static_cast<std::size_t>(it - knot_x_.begin());
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// GridFunction

GridFunction::GridFunction(Grid grid, std::vector<double> values, double exponent_offset,
                           std::vector<double> knot_values)
    : grid_(std::move(grid)), values_(std::move(values)), exponent_offset_(exponent_offset),
      knot_values_(std::move(knot_values)) {
  if (values_.size() != grid_.node_count()) throw DomainError("grid function size does not match grid");
  if (!knot_values_.empty() && knot_values_.size() != grid_.panel_count() + 1)
    throw DomainError("knot value count does not match grid");
  for (double v : values_)
    if (!std::isfinite(v)) throw OverflowError("grid function values must be finite");
  normalize();
}

GridFunction GridFunction::sample(Grid grid, const std::function<double(double)>& f) {
  std::vector<double> v(grid.node_count()), k(grid.panel_count() + 1);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(grid.nodes()[i]);
  for (std::size_t i = 0; i < k.size(); ++i) k[i] = f(grid.breakpoints()[i]);
  return GridFunction(std::move(grid), std::move(v), 0.0, std::move(k));
}

GridFunction GridFunction::from_extended(Grid grid, std::span<const ExtendedReal> node_values,
                                         std::span<const ExtendedReal> knot_values) {
  double top = std::fmax(largest_log(node_values), largest_log(knot_values));
  if (top == -std::numeric_limits<double>::infinity()) top = 0.0;
  const double offset = std::floor(top / std::numbers::ln2);
  const double shift = offset * std::numbers::ln2;
  auto plain = [shift](const ExtendedReal& v) { return v.is_zero() ? 0.0 : v.mantissa() * std::exp(v.log_scale() - shift); };
  std::vector<double> v(node_values.size()), k(knot_values.size());
  std::transform(node_values.begin(), node_values.end(), v.begin(), plain);
  std::transform(knot_values.begin(), knot_values.end(), k.begin(), plain);
  return GridFunction(std::move(grid), std::move(v), offset, std::move(k));
}

void GridFunction::normalize() {
  double top = 0.0;
  for (double v : values_) top = std::fmax(top, std::fabs(v));
  for (double v : knot_values_) top = std::fmax(top, std::fabs(v));
  if (top == 0.0) return;
  const int e = std::ilogb(top);
  if (e == 0) return;
  for (double& v : values_) v = std::ldexp(v, -e);
  for (double& v : knot_values_) v = std::ldexp(v, -e);
  exponent_offset_ += e;
}

double GridFunction::value(std::size_t node) const { return extended_value(node).to_double(); }

double GridFunction::knot_value(std::size_t knot) const { return extended_knot_value(knot).to_double(); }

ExtendedReal GridFunction::extended_value(std::size_t node) const {
  return ExtendedReal(values_.at(node), exponent_offset_ * std::numbers::ln2);
}

ExtendedReal GridFunction::extended_knot_value(std::size_t knot) const {
  if (knot_values_.empty()) throw DomainError("grid function carries no breakpoint values");
  return ExtendedReal(knot_values_.at(knot), exponent_offset_ * std::numbers::ln2);
}

std::vector<ExtendedReal> GridFunction::extended_values() const {
  std::vector<ExtendedReal> out(values_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = extended_value(i);
  return out;
}

std::vector<ExtendedReal> GridFunction::extended_knot_values() const {
  std::vector<ExtendedReal> out(knot_values_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = extended_knot_value(i);
  return out;
}

double GridFunction::at(double x) const {
  if (has_knot_values())
    if (auto k = grid_.knot_index(x)) return knot_value(*k);
  const auto& rule = PanelRule::get();
  const std::size_t p = grid_.panel_of(x);
  const auto kw = grid_.parameter_knots();
  const double half = 0.5 * (kw[p + 1] - kw[p]);
  const double s = (grid_.to_parameter(x) - 0.5 * (kw[p + 1] + kw[p])) / half;

  std::vector<double> pts(rule.nodes.begin(), rule.nodes.end());
  std::vector<double> vals(values_.begin() + static_cast<std::ptrdiff_t>(p * kN),
                           values_.begin() + static_cast<std::ptrdiff_t>((p + 1) * kN));
  if (has_knot_values()) {
    pts.insert(pts.begin(), -1.0);
    vals.insert(vals.begin(), knot_values_[p]);
    pts.push_back(1.0);
    vals.push_back(knot_values_[p + 1]);
  }
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    if (s == pts[k]) return std::ldexp(vals[k], static_cast<int>(exponent_offset_));
    double lambda = 1.0;
    for (std::size_t m = 0; m < pts.size(); ++m)
      if (m != k) lambda /= (pts[k] - pts[m]);
    const double t = lambda / (s - pts[k]);
    num += t * vals[k];
    den += t;
  }
  return ExtendedReal(num / den, exponent_offset_ * std::numbers::ln2).to_double();
}

// ---------------------------------------------------------------------------
// Integration

ExtendedProfile cumulative_from_left(const Grid& grid, std::span<const ExtendedReal> integrand) {
  check_size(grid, integrand);
  const auto& rule = PanelRule::get();
  const std::size_t panels = grid.panel_count();
  ExtendedProfile out{std::vector<ExtendedReal>(grid.node_count()), std::vector<ExtendedReal>(panels + 1)};
  std::array<double, kN> f{};
  for (std::size_t p = 0; p < panels; ++p) {
    double top = 0.0;
    const ExtendedReal base = out.knots[p];
    if (!scaled_panel(grid, integrand, p, f, top)) {
      for (std::size_t i = 0; i < kN; ++i) out.nodes[p * kN + i] = base;
      out.knots[p + 1] = base;
      continue;
    }
    double full = 0.0;
    for (std::size_t i = 0; i < kN; ++i) {
      double partial = 0.0;
      for (std::size_t j = 0; j < kN; ++j) partial += rule.left[i][j] * f[j];
      out.nodes[p * kN + i] = base + ExtendedReal(partial, top);
      full += rule.weights[i] * f[i];
    }
    out.knots[p + 1] = base + ExtendedReal(full, top);
  }
  return out;
}

ExtendedProfile cumulative_from_right(const Grid& grid, std::span<const ExtendedReal> integrand) {
  check_size(grid, integrand);
  const auto& rule = PanelRule::get();
  const std::size_t panels = grid.panel_count();
  ExtendedProfile out{std::vector<ExtendedReal>(grid.node_count()), std::vector<ExtendedReal>(panels + 1)};
  std::array<double, kN> f{};
  for (std::size_t p = panels; p-- > 0;) {
    double top = 0.0;
    const ExtendedReal base = out.knots[p + 1];
    if (!scaled_panel(grid, integrand, p, f, top)) {
      for (std::size_t i = 0; i < kN; ++i) out.nodes[p * kN + i] = base;
      out.knots[p] = base;
      continue;
    }
    double full = 0.0;
    for (std::size_t i = 0; i < kN; ++i) {
      double partial = 0.0;
      for (std::size_t j = 0; j < kN; ++j) partial += rule.right[i][j] * f[j];
      out.nodes[p * kN + i] = base + ExtendedReal(partial, top);
      full += rule.weights[i] * f[i];
    }
    out.knots[p] = base + ExtendedReal(full, top);
  }
  return out;
}

ExtendedReal integrate_nodes(const Grid& grid, std::span<const ExtendedReal> integrand) {
  check_size(grid, integrand);
  const auto& rule = PanelRule::get();
  std::vector<ExtendedReal> panel_sums(grid.panel_count());
  std::array<double, kN> f{};
  for (std::size_t p = 0; p < grid.panel_count(); ++p) {
    double top = 0.0;
    if (!scaled_panel(grid, integrand, p, f, top)) continue;
    double full = 0.0;
    for (std::size_t j = 0; j < kN; ++j) full += rule.weights[j] * f[j];
    panel_sums[p] = ExtendedReal(full, top);
  }
  return pairwise_sum(std::span<const ExtendedReal>(panel_sums));
}

GridFunction cumulative_integral(const GridFunction& f) {
  const auto values = f.extended_values();
  auto cumulative = cumulative_from_left(f.grid(), values);
  return GridFunction::from_extended(f.grid(), cumulative.nodes, cumulative.knots);
}

double integrate_on(const Grid& grid, const std::function<double(double)>& f) {
  std::vector<double> panel_sums(grid.panel_count());
  for (std::size_t p = 0; p < grid.panel_count(); ++p) {
    double s = 0.0;
    for (std::size_t j = 0; j < kN; ++j) s += grid.weights()[p * kN + j] * f(grid.nodes()[p * kN + j]);
    panel_sums[p] = s;
  }
  return pairwise_sum(std::span<const double>(panel_sums));
}

Grid initial_grid(double a, double b, std::optional<double> singularity_exponent) {
  if (!singularity_exponent) return Grid::uniform(a, b, 1);
  const double s = *singularity_exponent;
  if (!(s > -1.0)) throw NonIntegrableError("endpoint singularity exponent must exceed -1");
  if (s < 0.0) return Grid::power_law(a, b, 1.0 + s, 1, 8);
  if (s == std::floor(s)) return Grid::uniform(a, b, 1);
  return Grid::geometric(a, b, 1, 16);
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 std::optional<double> singularity_exponent, double tol, int max_doublings) {
  if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
  if (a == b) return 0.0;
  if (!(a < b)) throw DomainError("integrate needs a < b");
  Grid grid = initial_grid(a, b, singularity_exponent);
  auto abs_f = [&f](double x) { return std::fabs(f(x)); };
  double previous = integrate_on(grid, f);
  for (int d = 0; d < max_doublings; ++d) {
    grid = grid.refined();
    const double current = integrate_on(grid, f);
    const double scale = std::fmax(std::fabs(current), integrate_on(grid, abs_f) * 1e-3);
    if (std::fabs(current - previous) <= 0.5 * tol * scale) return current;
    previous = current;
  }
  throw ToleranceError("integrate: tolerance not met after " + std::to_string(max_doublings) +
                       " panel doublings");
}

ExtendedReal integrate_log(const std::function<double(double)>& log_f, double a, double b,
                           std::optional<double> singularity_exponent, double tol, int max_doublings) {
  if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
  if (a == b) return {};
  if (!(a < b)) throw DomainError("integrate needs a < b");
  Grid grid = initial_grid(a, b, singularity_exponent);
  auto evaluate = [&log_f](const Grid& g) {
    std::vector<ExtendedReal> v(g.node_count());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = ExtendedReal::from_log(log_f(g.nodes()[i]));
    return integrate_nodes(g, v);
  };
  ExtendedReal previous = evaluate(grid);
  for (int d = 0; d < max_doublings; ++d) {
    grid = grid.refined();
    const ExtendedReal current = evaluate(grid);
    if (relative_difference(current, previous) <= 0.5 * tol) return current;
    previous = current;
  }
  throw ToleranceError("integrate_log: tolerance not met after " + std::to_string(max_doublings) +
                       " panel doublings");
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

ExtendedReal pairwise_sum(std::span<const ExtendedReal> values) {
  if (values.size() <= 8) {
    ExtendedReal s;
    for (const auto& v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

}  // namespace fpt
