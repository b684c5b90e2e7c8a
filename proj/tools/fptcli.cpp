#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fpt/errors.hpp"
#include "fpt/harness.hpp"
#include "fpt/montecarlo.hpp"

namespace h = fpt::harness;

namespace {

struct Common {
  std::string format = "csv";
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--format", c.format, "csv or text")->check(CLI::IsMember({"csv", "text"}));
  cmd->add_option("--out", c.out, "write to this file instead of stdout");
}

h::OutputFormat format_of(const Common& c) { return c.format == "text" ? h::OutputFormat::text : h::OutputFormat::csv; }

// stdout unless --out was given
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw fpt::ParameterError("cannot open '" + path + "' for writing");
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

h::RunConfig build_config(const std::string& config_file, const std::vector<std::string>& assignments) {
  h::RunConfig config;
  if (!config_file.empty()) {
    std::ifstream in(config_file);
    if (!in) throw fpt::ParameterError("cannot read config '" + config_file + "'");
    h::apply_config_text(config, in, config_file);
  }
  for (const auto& a : assignments) h::apply_assignment(config, a);
  return config;
}

int report_exit(const h::ComparisonReport& report) {
  return static_cast<int>(report.passed() ? h::ExitCode::pass : h::ExitCode::comparison_failed);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Passage-time, exit-time and refractory-period moments of one-dimensional diffusions"};
  app.require_subcommand(1);

  // table
  Common table_opts;
  int table_id = 0;
  std::optional<double> table_gate;
  double table_quad_tol = fpt::kDefaultTolerance;
  unsigned threads = 0;
  auto* table = app.add_subcommand("table", "recompute a shipped reference table and compare");
  table->add_option("id", table_id, "table number")->required()->check(CLI::Range(1, 6));
  table->add_option("--tol", table_gate, "relative-error gate (default 1e-5 for tables 1-2, 1e-4 otherwise)");
  table->add_option("--quad-tol", table_quad_tol, "quadrature tolerance");
  table->add_option("--threads", threads, "worker threads, 0 = all cores");
  add_common(table, table_opts);

  // compare
  Common compare_opts;
  std::string reference_path;
  std::optional<double> compare_gate;
  auto* compare = app.add_subcommand("compare", "compare against a reference table file");
  compare->add_option("reference", reference_path, "CSV reference file")->required()->check(CLI::ExistingFile);
  compare->add_option("--tol", compare_gate, "relative-error gate");
  compare->add_option("--quad-tol", table_quad_tol, "quadrature tolerance");
  compare->add_option("--threads", threads, "worker threads, 0 = all cores");
  add_common(compare, compare_opts);

  // moments
  Common moments_opts;
  std::string config_file;
  std::vector<std::string> assignments;
  std::optional<double> moments_tol;
  auto* moments = app.add_subcommand("moments", "moment summary rows, one per reflection probability");
  moments->add_option("assignments", assignments, "key=value settings, e.g. model=wiener mu=-0.5 p_R=0.1,0.5");
  moments->add_option("--config", config_file, "key=value file, overridden by assignments")->check(CLI::ExistingFile);
  moments->add_option("--tol", moments_tol, "quadrature tolerance");
  add_common(moments, moments_opts);

  // counter
  Common counter_opts;
  fpt::CounterParams counter_params;
  std::size_t counter_windows = 0;
  std::uint64_t seed = 1;
  auto* counter = app.add_subcommand("counter", "output-count distribution of the dead-time counter");
  counter->add_option("--lambda", counter_params.lambda, "input rate")->required();
  counter->add_option("--T", counter_params.T, "observation window")->required();
  counter->add_option("--tau", counter_params.tau, "dead time")->required();
  counter->add_option("--simulate", counter_windows, "also simulate this many windows");
  counter->add_option("--seed", seed, "simulation seed");
  add_common(counter, counter_opts);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo oracles");
  simulate->require_subcommand(1);
  Common sim_opts;
  std::size_t samples = 100000;
  double dt = 1e-2;
  double dx = 1.0;
  std::vector<std::string> sim_assignments;
  std::string sim_config;
  auto* sim_fpt = simulate->add_subcommand("fpt", "Euler-Maruyama first-passage times");
  auto* sim_fet = simulate->add_subcommand("fet", "elastic-threshold random walk");
  for (auto* cmd : {sim_fpt, sim_fet}) {
    cmd->add_option("assignments", sim_assignments, "key=value settings as for moments");
    cmd->add_option("--config", sim_config, "key=value file")->check(CLI::ExistingFile);
    cmd->add_option("--samples", samples, "number of paths");
    cmd->add_option("--seed", seed, "seed");
    cmd->add_option("--threads", threads, "worker threads, 0 = all cores");
    add_common(cmd, sim_opts);
  }
  sim_fpt->add_option("--dt", dt, "time step");
  sim_fet->add_option("--dx", dx, "lattice spacing");
  auto* sim_counter = simulate->add_subcommand("counter", "simulated dead-time counter");
  sim_counter->add_option("--lambda", counter_params.lambda, "input rate")->required();
  sim_counter->add_option("--T", counter_params.T, "observation window")->required();
  sim_counter->add_option("--tau", counter_params.tau, "dead time")->required();
  sim_counter->add_option("--windows", counter_windows, "number of windows")->required();
  sim_counter->add_option("--seed", seed, "seed");
  add_common(sim_counter, sim_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(h::ExitCode::error);
  }

  try {
    if (*table) {
      Sink sink(table_opts.out);
      const auto report = h::run_table(table_id, table_gate, table_quad_tol, threads);
      report.write(sink.stream(), format_of(table_opts));
      return report_exit(report);
    }
    if (*compare) {
      Sink sink(compare_opts.out);
      std::ifstream in(reference_path);
      const auto report = h::compare_table(h::parse_reference_table(in), compare_gate, table_quad_tol, threads);
      report.write(sink.stream(), format_of(compare_opts));
      return report_exit(report);
    }
    if (*moments) {
      auto config = build_config(config_file, assignments);
      if (moments_tol) config.tol = *moments_tol;
      if (moments->count("--format")) config.format = format_of(moments_opts);
      Sink sink(moments_opts.out);
      h::write_moments(sink.stream(), config);
      return 0;
    }
    if (*counter) {
      Sink sink(counter_opts.out);
      h::write_counter(sink.stream(), counter_params, format_of(counter_opts), counter_windows, seed);
      return 0;
    }
    if (*simulate) {
      Sink sink(sim_opts.out);
      auto& out = sink.stream();
      if (*sim_counter) {
        h::write_counter(out, counter_params, format_of(sim_opts), counter_windows, seed);
        return 0;
      }
      const auto config = build_config(sim_config, sim_assignments);
      const auto spec = h::make_spec(config.model, config.params);
      fpt::SimulationOptions options;
      options.threads = threads;
      std::vector<std::pair<std::string, fpt::SampleStats>> results;
      if (*sim_fpt) {
        results.emplace_back("fpt", fpt::simulate_fpt(spec, config.S, config.x, samples, dt, seed, options));
      } else {
        for (double p : config.p_reflect) {
          const auto thr = fpt::ElasticThreshold::from_reflection_probability(config.S, p);
          auto r = fpt::simulate_fet_elastic(spec, thr, config.x, samples, dx, seed, options);
          results.emplace_back("fet:" + std::to_string(p), r.fet);
          results.emplace_back("refractory:" + std::to_string(p), r.refractory);
        }
      }
      out << "quantity,n_samples,mean,variance,std_error,seed\n";
      for (const auto& [name, s] : results)
        out << name << ',' << s.n_samples << ',' << h::format_full(s.mean) << ',' << h::format_full(s.variance)
            << ',' << h::format_full(s.std_error_of_mean) << ',' << s.seed << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(h::ExitCode::error);
  }
  return static_cast<int>(h::ExitCode::error);
}
