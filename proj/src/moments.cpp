#include "fpt/moments.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "fpt/errors.hpp"

namespace fpt {

namespace {

constexpr std::size_t kBasePanels = 8;
constexpr int kMaxDoublings = 10;
constexpr int kMaxBisectionPasses = 16;
// Largest change of log k allowed inside one starting panel.
constexpr double kMaxLogStep = 1.0;

using Evaluate = std::function<std::vector<ExtendedReal>(const MomentRecursion&)>;

void check_common(const DiffusionSpec& spec, double level, double tol) {
  validate(spec);
  require_supported_boundary(spec);
  if (!(tol > 0.0)) throw ParameterError("tolerance must be positive");
  if (!(level > spec.effective_lower() && level < spec.upper_bound))
    throw ParameterError("threshold must lie strictly inside the state interval");
}

void check_start(const DiffusionSpec& spec, double level, double x) {
  if (!(x >= spec.effective_lower() && x <= level))
    throw DomainError("starting point must satisfy r1 <= x <= S");
}

struct Converged {
  std::vector<ExtendedReal> values;
  Grid grid;
};

// Panel doubling until every tracked value moves by less than tol/2.
Converged converge(const DiffusionSpec& spec, double level, std::vector<double> points, double tol,
                   const Evaluate& evaluate) {
  Grid grid = MomentRecursion::initial_grid(spec, level, points);
  auto previous = evaluate(MomentRecursion(spec, level, grid));
  for (int d = 0; d < kMaxDoublings; ++d) {
    Grid finer = grid.refined();
    auto current = evaluate(MomentRecursion(spec, level, finer));
    bool agreed = true;
    for (std::size_t i = 0; i < current.size() && agreed; ++i)
      agreed = relative_difference(current[i], previous[i]) <= 0.5 * tol;
    if (agreed) return {std::move(current), std::move(finer)};
    previous = std::move(current);
    grid = std::move(finer);
  }
  throw ToleranceError("moment recursion did not converge within " + std::to_string(kMaxDoublings) +
                       " panel doublings");
}

double rel(double a, double b) {
  const double scale = std::fmax(std::fabs(a), std::fabs(b));
  return scale == 0.0 ? 0.0 : std::fabs(a - b) / scale;
}

}  // namespace

double MomentSummary::max_residual() const {
  double worst = 0.0;
  for (const auto& [name, value] : identity_residuals) worst = std::fmax(worst, value);
  return worst;
}

// ---------------------------------------------------------------------------
// MomentRecursion

MomentRecursion::MomentRecursion(const DiffusionSpec& spec, double level, Grid grid)
    : grid_(std::move(grid)) {
  if (grid_.lower() != spec.effective_lower() || grid_.upper() != level)
    throw DomainError("recursion grid must span [r1, S]");
  const auto nodes = grid_.nodes();
  const auto offsets = grid_.offsets();
  const bool use_offsets = spec.log_scale_offset && grid_.lower() == spec.lower_bound;
  log_h_.resize(nodes.size());
  log_k_.resize(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double a2 = use_offsets ? spec.variance_offset(offsets[i]) : spec.variance(nodes[i]);
    log_h_[i] = use_offsets ? spec.log_scale_offset(offsets[i]) : spec.log_scale(nodes[i]);
    log_k_[i] = std::numbers::ln2 - std::log(a2) - log_h_[i];
    if (!std::isfinite(log_h_[i]) || !std::isfinite(log_k_[i]))
      throw DomainError("scale or speed density not finite at a quadrature node of '" + spec.name + "'");
  }
}

Grid MomentRecursion::initial_grid(const DiffusionSpec& spec, double level, std::span<const double> points) {
  const double a = spec.effective_lower();
  std::optional<double> s;
  if (spec.lower_speed_exponent && a == spec.lower_bound) s = *spec.lower_speed_exponent;

  Grid grid = [&] {
    if (!s) return Grid::uniform(a, level, kBasePanels);
    if (*s <= -1.0) throw NonIntegrableError("speed density singularity at r1 is not integrable");
    if (*s < 0.0) return Grid::power_law(a, level, 1.0 + *s, kBasePanels, 10);
    if (*s == std::floor(*s)) return Grid::uniform(a, level, kBasePanels);
    return Grid::geometric(a, level, kBasePanels, 20);
  }();
  for (double p : points) grid = grid.with_breakpoint(p);

  for (int pass = 0; pass < kMaxBisectionPasses; ++pass) {
    const auto kw = grid.parameter_knots();
    std::vector<bool> flags(grid.panel_count(), false);
    bool any = false;
    // the first panel at a singular r1 is graded, not bisected
    for (std::size_t p = s ? 1 : 0; p < grid.panel_count(); ++p) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (double f : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        const double x = grid.from_parameter(kw[p] + f * (kw[p + 1] - kw[p]));
        const double lk = log_speed_density(spec, x);
        if (!std::isfinite(lk)) continue;
        lo = std::fmin(lo, lk);
        hi = std::fmax(hi, lk);
      }
      if (hi - lo > kMaxLogStep) flags[p] = any = true;
    }
    if (!any) break;
    grid = grid.split(flags);
  }
  return grid;
}

ExtendedProfile MomentRecursion::unit_profile() const {
  return {std::vector<ExtendedReal>(grid_.node_count(), ExtendedReal::from_double(1.0)),
          std::vector<ExtendedReal>(grid_.panel_count() + 1, ExtendedReal::from_double(1.0))};
}

MomentRecursion::Level MomentRecursion::next(const ExtendedProfile& previous, int n, double ratio) const {
  const std::size_t count = grid_.node_count();
  std::vector<ExtendedReal> integrand(count);
  for (std::size_t i = 0; i < count; ++i)
    integrand[i] = ExtendedReal(previous.nodes[i].mantissa(), previous.nodes[i].log_scale() + log_k_[i]);
  const ExtendedProfile inner = cumulative_from_left(grid_, integrand);
  const ExtendedReal total = inner.knots.back();

  for (std::size_t i = 0; i < count; ++i)
    integrand[i] = ExtendedReal(inner.nodes[i].mantissa(), inner.nodes[i].log_scale() + log_h_[i]);
  const ExtendedProfile outer = cumulative_from_right(grid_, integrand);

  const ExtendedReal elastic = ratio > 0.0 ? total * ratio : ExtendedReal{};
  const double order = static_cast<double>(n);
  Level level{{std::vector<ExtendedReal>(count), std::vector<ExtendedReal>(outer.knots.size())}, total};
  for (std::size_t i = 0; i < count; ++i) level.profile.nodes[i] = (outer.nodes[i] + elastic) * order;
  for (std::size_t i = 0; i < outer.knots.size(); ++i) level.profile.knots[i] = (outer.knots[i] + elastic) * order;
  return level;
}

std::vector<ExtendedProfile> MomentRecursion::profiles(int n, double ratio) const {
  std::vector<ExtendedProfile> out;
  out.reserve(static_cast<std::size_t>(n) + 1);
  out.push_back(unit_profile());
  for (int order = 1; order <= n; ++order) out.push_back(next(out.back(), order, ratio).profile);
  return out;
}

ExtendedReal MomentRecursion::speed_integral(const ExtendedProfile& profile) const {
  std::vector<ExtendedReal> integrand(grid_.node_count());
  for (std::size_t i = 0; i < integrand.size(); ++i)
    integrand[i] = ExtendedReal(profile.nodes[i].mantissa(), profile.nodes[i].log_scale() + log_k_[i]);
  return integrate_nodes(grid_, integrand);
}

ExtendedReal MomentRecursion::value_at(const ExtendedProfile& profile, double x) const {
  const auto k = grid_.knot_index(x);
  if (!k) throw DomainError("profile requested off the grid breakpoints");
  return profile.knots[*k];
}

// ---------------------------------------------------------------------------
// Public operations

GridFunction fpt_moment_profile(const DiffusionSpec& spec, double level, int n, double tol) {
  check_common(spec, level, tol);
  if (n < 0) throw DomainError("moment order must be non-negative");
  const Grid start = MomentRecursion::initial_grid(spec, level, {});
  if (n == 0) {
    return GridFunction(start, std::vector<double>(start.node_count(), 1.0), 0.0,
                        std::vector<double>(start.panel_count() + 1, 1.0));
  }
  const std::vector<double> tracked(start.breakpoints().begin(), start.breakpoints().end());
  auto result = converge(spec, level, {}, tol, [&](const MomentRecursion& r) {
    const auto profile = r.profiles(n, 0.0).back();
    std::vector<ExtendedReal> out;
    for (double x : tracked) out.push_back(r.value_at(profile, x));
    return out;
  });
  const MomentRecursion final_recursion(spec, level, result.grid);
  const auto profile = final_recursion.profiles(n, 0.0).back();
  return GridFunction::from_extended(result.grid, profile.nodes, profile.knots);
}

double fpt_moment(const DiffusionSpec& spec, double level, double x, int n, double tol) {
  check_common(spec, level, tol);
  check_start(spec, level, x);
  if (n < 0) throw DomainError("moment order must be non-negative");
  if (n == 0) return 1.0;
  if (x == level) return 0.0;
  auto result = converge(spec, level, {x}, tol, [&](const MomentRecursion& r) {
    return std::vector<ExtendedReal>{r.value_at(r.profiles(n, 0.0).back(), x)};
  });
  return result.values[0].to_double();
}

double fpt_variance(const DiffusionSpec& spec, double level, double x, double tol) {
  check_common(spec, level, tol);
  check_start(spec, level, x);
  if (x == level) return 0.0;
  auto result = converge(spec, level, {x}, tol, [&](const MomentRecursion& r) {
    const auto p = r.profiles(2, 0.0);
    return std::vector<ExtendedReal>{r.value_at(p[1], x), r.value_at(p[2], x)};
  });
  const ExtendedReal t1 = result.values[0];
  return (result.values[1] - t1 * t1).to_double();
}

double fet_moment(const DiffusionSpec& spec, const ElasticThreshold& threshold, double x, int n, double tol) {
  check_common(spec, threshold.level, tol);
  validate(spec, threshold);
  check_start(spec, threshold.level, x);
  if (n < 0) throw DomainError("moment order must be non-negative");
  if (n == 0) return 1.0;
  const double ratio = threshold.ratio();
  auto result = converge(spec, threshold.level, {x}, tol, [&](const MomentRecursion& r) {
    return std::vector<ExtendedReal>{r.value_at(r.profiles(n, ratio).back(), x)};
  });
  return result.values[0].to_double();
}

double fet_moment_via_relation(const DiffusionSpec& spec, const ElasticThreshold& threshold, double x, int n,
                               RelationForm form, double tol) {
  check_common(spec, threshold.level, tol);
  validate(spec, threshold);
  check_start(spec, threshold.level, x);
  if (n < 0) throw DomainError("moment order must be non-negative");
  if (n == 0) return 1.0;
  const double ratio = threshold.ratio();
  auto result = converge(spec, threshold.level, {x}, tol, [&](const MomentRecursion& r) {
    const auto fpt = r.profiles(n, 0.0);
    const auto fet = r.profiles(n - 1, ratio);
    ExtendedReal sum;
    double binomial = 1.0;  // C(n-1, j)
    for (int j = 0; j <= n - 1; ++j) {
      const auto& at_x = form == RelationForm::fpt_profiles ? fpt[n - 1 - j] : fet[j];
      const auto& integrated = form == RelationForm::fpt_profiles ? fet[j] : fpt[n - 1 - j];
      sum += r.value_at(at_x, x) * r.speed_integral(integrated) * binomial;
      binomial = binomial * (n - 1 - j) / (j + 1);
    }
    return std::vector<ExtendedReal>{r.value_at(fpt[n], x) + sum * (n * ratio)};
  });
  return result.values[0].to_double();
}

ExtendedReal refractory_moment_extended(const DiffusionSpec& spec, const ElasticThreshold& threshold, int n,
                                        double tol) {
  check_common(spec, threshold.level, tol);
  validate(spec, threshold);
  if (n < 1) throw DomainError("refractory moment order must be positive");
  const double ratio = threshold.ratio();
  if (ratio == 0.0) return {};
  auto result = converge(spec, threshold.level, {}, tol, [&](const MomentRecursion& r) {
    const auto fet = r.profiles(n - 1, ratio);
    return std::vector<ExtendedReal>{r.speed_integral(fet.back()) * (n * ratio)};
  });
  return result.values[0];
}

double refractory_moment(const DiffusionSpec& spec, const ElasticThreshold& threshold, int n, double tol) {
  return refractory_moment_extended(spec, threshold, n, tol).to_double();
}

double refractory_variance(const DiffusionSpec& spec, const ElasticThreshold& threshold, double tol) {
  check_common(spec, threshold.level, tol);
  validate(spec, threshold);
  const double ratio = threshold.ratio();
  if (ratio == 0.0) return 0.0;
  auto result = converge(spec, threshold.level, {}, tol, [&](const MomentRecursion& r) {
    const auto fpt = r.profiles(1, 0.0);
    return std::vector<ExtendedReal>{r.speed_integral(fpt[0]), r.speed_integral(fpt[1])};
  });
  const ExtendedReal mean = result.values[0] * ratio;
  return (result.values[1] * (2.0 * ratio) + mean * mean).to_double();
}

MomentSummary summary(const DiffusionSpec& spec, const ElasticThreshold& threshold, double x, double tol) {
  check_common(spec, threshold.level, tol);
  validate(spec, threshold);
  check_start(spec, threshold.level, x);
  const double r = threshold.ratio();
  auto result = converge(spec, threshold.level, {x}, tol, [&](const MomentRecursion& rec) {
    const auto fpt = rec.profiles(2, 0.0);
    const auto fet = rec.profiles(2, r);
    return std::vector<ExtendedReal>{rec.value_at(fpt[1], x),   rec.value_at(fpt[2], x),
                                     rec.value_at(fet[1], x),   rec.value_at(fet[2], x),
                                     rec.speed_integral(fpt[0]), rec.speed_integral(fpt[1]),
                                     rec.speed_integral(fet[1])};
  });
  const auto& v = result.values;
  const ExtendedReal t1 = v[0], t2 = v[1], ft1 = v[2], ft2 = v[3], K = v[4], C1 = v[5], D1 = v[6];

  MomentSummary s;
  s.t1 = t1.to_double();
  s.t2 = t2.to_double();
  s.fpt_variance = (t2 - t1 * t1).to_double();
  s.fet_t1 = ft1.to_double();
  s.fet_t2 = ft2.to_double();
  s.fet_variance = (ft2 - ft1 * ft1).to_double();
  const ExtendedReal mean_tr = K * r;
  s.refractory_mean = mean_tr.to_double();
  s.refractory_second = (D1 * (2.0 * r)).to_double();
  s.refractory_variance = (C1 * (2.0 * r) + mean_tr * mean_tr).to_double();
  s.speed_measure = K.to_double();
  s.speed_weighted_fpt_mean = C1.to_double();

  // second moment of the exit time in its two binomial forms
  const ExtendedReal form_a = t2 + ft1 * K * (2.0 * r) + C1 * (2.0 * r);
  const ExtendedReal form_b = t2 + t1 * K * (2.0 * r) + D1 * (2.0 * r);

  s.identity_residuals["mean_identity"] = rel(s.fet_t1, s.t1 + s.refractory_mean);
  s.identity_residuals["variance_identity"] = rel(s.fet_variance, s.fpt_variance + s.refractory_variance);
  s.identity_residuals["second_moment_forms"] = relative_difference(form_a, form_b);
  s.identity_residuals["second_moment_direct"] = relative_difference(ft2, form_b);
  s.identity_residuals["refractory_second"] =
      rel(s.refractory_second, s.refractory_variance + s.refractory_mean * s.refractory_mean);
  return s;
}

}  // namespace fpt
