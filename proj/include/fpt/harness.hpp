#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fpt/deadtime.hpp"
#include "fpt/diffusion.hpp"
#include "fpt/moments.hpp"

namespace fpt::harness {

enum class ExitCode : int { pass = 0, comparison_failed = 1, error = 2 };

enum class OutputFormat { csv, text };

/// Identity residuals and oracle gaps above this fail a report row.
inline constexpr double kResidualGate = 1e-6;

/// 7 significant figures, "3.073451E+02".
std::string format_sig7(double v);
/// Round-trip precision, "3.0734510000000000e+02".
std::string format_full(double v);

/// One column of a reference table: a quantity, optionally at a reflection probability.
struct ColumnKey {
  std::string quantity;            ///< t1, V, E_Tr, V_Tr
  std::optional<double> p_reflect;
  std::string label;               ///< header text as written
};

/// Reference table: `# key=value` metadata lines, a header naming the swept
/// parameter and the columns, then one row per parameter value.
struct ReferenceTable {
  std::map<std::string, std::string> metadata;
  std::vector<std::string> notes;
  std::string sweep;               ///< name of the swept model parameter
  std::vector<ColumnKey> columns;
  std::vector<double> sweep_values;
  std::vector<std::vector<double>> values;  ///< values[row][column]
};

ReferenceTable parse_reference_table(std::istream& in);
ReferenceTable parse_reference_table(std::string_view text);

/// Shipped reference tables 1..6.
std::string_view embedded_table(int id);
/// CRC-32 of an embedded table and the value recorded for it at build time.
std::uint32_t crc32_of(std::string_view text);
std::uint32_t recorded_checksum(int id);

/// Model name plus parameters, the state threshold and starting point.
struct RunConfig {
  std::string model = "wiener";
  std::map<std::string, double> params;
  double S = 0.0;
  double x = 0.0;
  std::vector<double> p_reflect{0.0};
  double tol = kDefaultTolerance;
  OutputFormat format = OutputFormat::csv;
  std::uint64_t seed = 1;
};

/// Applies `key=value` lines; '#' starts a comment. Diagnostics name the
/// line and key. Keys: model, S, x, p_R (comma list), tol, format, seed;
/// anything else is a model parameter.
void apply_config_text(RunConfig& config, std::istream& in, std::string_view source = "config");
void apply_assignment(RunConfig& config, std::string_view assignment, std::string_view where = "argument");

/// Builds the diffusion named by `model` from its parameters.
DiffusionSpec make_spec(const std::string& model, const std::map<std::string, double>& params);
/// Closed-form or series mean for the built-in models.
std::optional<double> oracle_mean(const std::string& model, const std::map<std::string, double>& params,
                                  double S, double x);
/// Note attached to rows whose lower boundary is regular with a reflecting condition imposed.
std::optional<std::string> boundary_note(const std::string& model, const std::map<std::string, double>& params);

struct ReportRow {
  std::string cell;
  double computed = 0.0;
  double reference = 0.0;
  double relative_error = 0.0;
  double threshold = 0.0;
  std::optional<double> oracle;  ///< independent value for the same cell
  double residual = 0.0;         ///< largest identity residual behind the cell
  bool pass = false;
  std::string note;
};

struct ComparisonReport {
  std::string title;
  std::vector<ReportRow> rows;

  bool passed() const;
  double worst_relative_error() const;
  void write(std::ostream& out, OutputFormat format) const;
};

/// Default gate for table `id`: 1e-5 for the Wiener tables, 1e-4 otherwise.
double default_threshold(int id);

/// Recomputes every cell of `table`. `threshold` overrides the default gate.
ComparisonReport compare_table(const ReferenceTable& table, std::optional<double> threshold = std::nullopt,
                               double tol = kDefaultTolerance, unsigned threads = 0);
ComparisonReport run_table(int id, std::optional<double> threshold = std::nullopt,
                           double tol = kDefaultTolerance, unsigned threads = 0);

/// One summary row per reflection probability.
void write_moments(std::ostream& out, const RunConfig& config);

/// pmf table, with empirical columns when `simulate_windows` > 0.
void write_counter(std::ostream& out, const CounterParams& p, OutputFormat format,
                   std::size_t simulate_windows = 0, std::uint64_t seed = 1);

}  // namespace fpt::harness
