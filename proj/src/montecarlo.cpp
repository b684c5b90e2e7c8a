#include "fpt/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <thread>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>

#include "fpt/errors.hpp"
#include "fpt/moments.hpp"
#include "fpt/philox.hpp"
#include "fpt/quadrature.hpp"

namespace fpt {

namespace {

unsigned worker_count(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

// Calls body(i) for i in [0, n) on contiguous index blocks.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t, std::size_t)>& body) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(worker_count(threads), std::max<std::size_t>(n, 1)));
  if (workers <= 1) {
    body(0, n);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t lo = std::min(n, w * chunk);
    const std::size_t hi = std::min(n, lo + chunk);
    pool.emplace_back(body, lo, hi);
  }
  for (auto& t : pool) t.join();
}

std::size_t lattice_index(double value, double origin, double dx, const char* what) {
  const double steps = (value - origin) / dx;
  const double rounded = std::round(steps);
  if (rounded < 0.0 || std::fabs(steps - rounded) > 1e-9 * std::fmax(1.0, rounded))
    throw ParameterError(std::string(what) + " is not on the walk lattice");
  return static_cast<std::size_t>(rounded);
}

struct WalkTables {
  std::vector<std::uint64_t> up_threshold;  // step up when the 32-bit draw is below this
  std::vector<double> up_probability;
  std::vector<double> hold;                 // time per step leaving the node
  std::size_t top = 0;                      // threshold node
  double absorb = 1.0;                      // per-visit absorption probability
};

// Up/down decisions from one byte of a 32-bit draw each; a tie on the byte
// is settled with 24 fresh bits, so every decision is exact to 32 bits.
class StepBits {
 public:
  explicit StepBits(Philox4x32& rng) : rng_(rng) {}

  bool up(std::uint64_t threshold) {
    if (left_ == 0) {
      word_ = rng_();
      left_ = 4;
    }
    const std::uint32_t byte = word_ >> 24;
    word_ <<= 8;
    --left_;
    const std::uint64_t head = threshold >> 24;
    if (byte != head) return byte < head;
    return ((std::uint64_t{byte} << 24) | (rng_() >> 8)) < threshold;
  }

 private:
  Philox4x32& rng_;
  std::uint32_t word_ = 0;
  int left_ = 0;
};

WalkTables walk_tables(const DiffusionSpec& spec, const ElasticThreshold& threshold, double dx) {
  validate(spec);
  validate(spec, threshold);
  if (!(dx > 0.0)) throw ParameterError("dx must be positive");
  if (!std::isfinite(spec.lower_bound)) throw ParameterError("the walk needs a finite lower bound");
  if (!(threshold.beta > 0.0)) throw ParameterError("the walk needs beta > 0");
  const double origin = spec.lower_bound;
  WalkTables w;
  w.top = lattice_index(threshold.level, origin, dx, "threshold");
  if (w.top < 2) throw ParameterError("dx too coarse for the interval");
  const std::size_t nodes = w.top + 1;
  w.up_threshold.resize(nodes);
  w.up_probability.resize(nodes);
  w.hold.resize(nodes);
  for (std::size_t i = 0; i < nodes; ++i) {
    const double x = origin + static_cast<double>(i) * dx;
    const double a2 = spec.variance(i == 0 ? origin + 0.5 * dx : x);
    if (!(a2 > 0.0)) throw DomainError("walk: variance not positive at a lattice node");
    w.hold[i] = dx * dx / a2;
    double p = i == 0 ? 1.0 : 0.5 + spec.drift(x) * dx / (2.0 * a2);
    if (p < 0.0 || p > 1.0) throw ParameterError("walk: dx too large for the local drift");
    w.up_probability[i] = p;
    w.up_threshold[i] = static_cast<std::uint64_t>(std::ldexp(p, 32));
  }
  const double h = scale_density(spec, threshold.level - 0.5 * dx).to_double();
  const double a = h * dx / threshold.ratio();
  w.absorb = a / (1.0 + a);
  return w;
}

}  // namespace

SampleStats sample_stats(std::span<const double> values, std::uint64_t seed) {
  SampleStats s;
  s.n_samples = values.size();
  s.seed = seed;
  if (values.empty()) return s;
  s.mean = pairwise_sum(values) / static_cast<double>(values.size());
  if (values.size() > 1) {
    std::vector<double> squares(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) squares[i] = (values[i] - s.mean) * (values[i] - s.mean);
    s.variance = pairwise_sum(squares) / static_cast<double>(values.size() - 1);
  }
  s.std_error_of_mean = std::sqrt(s.variance / static_cast<double>(values.size()));
  return s;
}

SampleStats simulate_fpt(const DiffusionSpec& spec, double S, double x, std::size_t n_samples, double dt,
                         std::uint64_t seed, const SimulationOptions& options) {
  validate(spec);
  if (!(dt > 0.0)) throw ParameterError("dt must be positive");
  if (n_samples == 0) throw ParameterError("need at least one sample");
  const double lower = spec.lower_bound;
  if (!(x >= spec.effective_lower() && x <= S && S < spec.upper_bound))
    throw DomainError("simulate_fpt needs r1 <= x <= S < r2");

  std::vector<double> times(n_samples, 0.0);
  double cap = options.time_cap;
  std::size_t capped = 0;
  if (x < S) {
    if (!(cap > 0.0)) cap = 1000.0 * fpt_moment(spec, S, x, 1);
    const bool reflect = std::isfinite(lower);
    const double sqrt_dt = std::sqrt(dt);
    std::vector<unsigned char> hit_cap(n_samples, 0);
    parallel_for(n_samples, options.threads, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) {
        Philox4x32 rng(seed, i);
        boost::random::normal_distribution<double> normal;
        double X = x;
        double t = 0.0;
        for (;;) {
          const double a2 = std::fmax(spec.variance(X), 0.0);
          double next = X + spec.drift(X) * dt + std::sqrt(a2) * sqrt_dt * normal(rng);
          if (reflect && next < lower) next = lower + (lower - next);
          bool crossed = next >= S;
          if (!crossed && a2 > 0.0) {
            const double exponent = -2.0 * (S - X) * (S - next) / (a2 * dt);
            if (exponent > -40.0) crossed = uniform_open(rng) < std::exp(exponent);
          }
          if (crossed) {
            t += 0.5 * dt;
            break;
          }
          X = next;
          t += dt;
          if (t >= cap) {
            hit_cap[i] = 1;
            break;
          }
        }
        times[i] = t;
      }
    });
    capped = static_cast<std::size_t>(std::count(hit_cap.begin(), hit_cap.end(), 1));
    if (static_cast<double>(capped) > options.max_capped_fraction * static_cast<double>(n_samples))
      throw TimeCapError(std::to_string(capped) + " of " + std::to_string(n_samples) +
                         " paths reached the time cap");
  }
  SampleStats s = sample_stats(times, seed);
  s.scheme_params["dt"] = dt;
  s.scheme_params["time_cap"] = cap;
  s.scheme_params["capped_paths"] = static_cast<double>(capped);
  return s;
}

double elastic_walk_refractory_mean(const DiffusionSpec& spec, const ElasticThreshold& threshold, double dx) {
  const WalkTables w = walk_tables(spec, threshold, dx);
  // T_j: expected time to climb from node j to node j + 1
  double climb = w.hold[0];
  for (std::size_t j = 1; j < w.top; ++j)
    climb = (w.hold[j] + (1.0 - w.up_probability[j]) * climb) / w.up_probability[j];
  return (1.0 - w.absorb) / w.absorb * (w.hold[w.top] + climb);
}

void check_elastic_calibration() {
  constexpr double nu = -80.0, S = -50.0, sigma2 = 10.0;
  DiffusionSpec spec;
  spec.name = "wiener";
  spec.drift = [](double) { return 0.0; };
  spec.variance = [](double) { return sigma2; };
  spec.log_scale = [](double) { return 0.0; };
  spec.lower_bound = nu;
  const auto threshold = ElasticThreshold::from_reflection_probability(S, 0.5);
  const double expected = threshold.ratio() * 2.0 * (S - nu) / sigma2;
  for (double dx : {2.0, 1.0, 0.5}) {
    const double got = elastic_walk_refractory_mean(spec, threshold, dx);
    if (std::fabs(got - expected) > 1e-9 * expected)
      throw CalibrationError("elastic walk calibration failed at dx=" + std::to_string(dx) + ": " +
                             std::to_string(got) + " vs " + std::to_string(expected));
  }
}

ElasticSample simulate_fet_elastic(const DiffusionSpec& spec, const ElasticThreshold& threshold, double x,
                                   std::size_t n_samples, double dx, std::uint64_t seed,
                                   const SimulationOptions& options) {
  static const bool calibrated = (check_elastic_calibration(), true);
  (void)calibrated;
  if (n_samples == 0) throw ParameterError("need at least one sample");
  const WalkTables w = walk_tables(spec, threshold, dx);
  const std::size_t start = lattice_index(x, spec.lower_bound, dx, "starting point");
  if (start > w.top) throw DomainError("starting point above the threshold");

  const double cap = options.time_cap > 0.0 ? options.time_cap : std::numeric_limits<double>::infinity();
  std::vector<double> fet(n_samples), refractory(n_samples);
  std::vector<unsigned char> hit_cap(n_samples, 0);
  parallel_for(n_samples, options.threads, [&](std::size_t lo, std::size_t hi) {
    const std::uint64_t* up = w.up_threshold.data();
    const double* hold = w.hold.data();
    for (std::size_t i = lo; i < hi; ++i) {
      Philox4x32 rng(seed, i);
      StepBits steps(rng);
      std::size_t node = start;
      double t = 0.0;
      while (node != w.top && t < cap) {
        t += hold[node];
        node = node - 1 + 2 * static_cast<std::size_t>(steps.up(up[node]));
      }
      const double first_hit = t;
      while (t < cap) {
        if (uniform_open(rng) < w.absorb) break;
        t += hold[w.top];
        node = w.top - 1;
        while (node != w.top) {
          t += hold[node];
          node = node - 1 + 2 * static_cast<std::size_t>(steps.up(up[node]));
        }
      }
      if (t >= cap) hit_cap[i] = 1;
      fet[i] = t;
      refractory[i] = t - first_hit;
    }
  });
  const auto capped = static_cast<std::size_t>(std::count(hit_cap.begin(), hit_cap.end(), 1));
  if (static_cast<double>(capped) > options.max_capped_fraction * static_cast<double>(n_samples))
    throw TimeCapError(std::to_string(capped) + " walks reached the time cap");

  ElasticSample out{sample_stats(fet, seed), sample_stats(refractory, seed)};
  for (auto* s : {&out.fet, &out.refractory}) {
    s->scheme_params["dx"] = dx;
    s->scheme_params["absorb_probability"] = w.absorb;
    s->scheme_params["capped_paths"] = static_cast<double>(capped);
  }
  return out;
}

CounterSample simulate_counter(const CounterParams& p, std::size_t n_windows, std::uint64_t seed,
                               unsigned threads) {
  validate(p);
  if (n_windows == 0) throw ParameterError("need at least one window");
  std::vector<std::uint32_t> outputs(n_windows);
  parallel_for(n_windows, threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      Philox4x32 rng(seed, i);
      boost::random::exponential_distribution<double> gap(p.lambda);
      std::uint32_t count = 0;
      double blocked_until = -std::numeric_limits<double>::infinity();
      for (double t = gap(rng); t < p.T; t += gap(rng)) {
        if (t >= blocked_until) {
          ++count;
          blocked_until = t + p.tau;
        }
      }
      outputs[i] = count;
    }
  });
  CounterSample s;
  s.n_windows = n_windows;
  s.seed = seed;
  const std::uint32_t top = *std::max_element(outputs.begin(), outputs.end());
  s.counts.assign(top + 1, 0);
  for (auto c : outputs) ++s.counts[c];
  const double n = static_cast<double>(n_windows);
  for (auto c : s.counts) {
    const double f = static_cast<double>(c) / n;
    s.frequency.push_back(f);
    s.std_error.push_back(std::sqrt(f * (1.0 - f) / n));
  }
  return s;
}

}  // namespace fpt
