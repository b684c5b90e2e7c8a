#include "fpt/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <zlib.h>

#include "fpt/errors.hpp"
#include "fpt/models.hpp"
#include "fpt/montecarlo.hpp"

namespace fpt::harness {

namespace detail {
extern const std::string_view kTableText[6];
extern const std::string_view kChecksumText;
}  // namespace detail

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_number(std::string_view text, std::string_view what) {
  const std::string s = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ParameterError(std::string(what) + ": '" + s + "' is not a number");
  return v;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

double require(const std::map<std::string, double>& params, const std::string& model, const char* key) {
  const auto it = params.find(key);
  if (it == params.end()) throw ParameterError(model + ": missing parameter '" + key + "'");
  return it->second;
}

void reject_unknown(const std::map<std::string, double>& params, const std::string& model,
                    std::initializer_list<const char*> known) {
  for (const auto& [key, value] : params) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; }))
      throw ParameterError(model + ": unknown parameter '" + key + "'");
  }
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

double relative_error(double computed, double reference) {
  if (reference == 0.0) return computed == 0.0 ? 0.0 : std::fabs(computed);
  return std::fabs(computed - reference) / std::fabs(reference);
}

void for_each_index(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads ? threads : hw, std::max<std::size_t>(n, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

const std::set<std::string> kMetadataOnly{"table", "model", "S", "x", "note"};

}  // namespace

std::string format_sig7(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6E", v);
  return buf;
}

std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Reference tables

ReferenceTable parse_reference_table(std::istream& in) {
  ReferenceTable t;
  std::string line;
  int number = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++number;
    const std::string text = trim(line);
    if (text.empty()) continue;
    const std::string where = "line " + std::to_string(number);
    if (text[0] == '#') {
      const std::string body = trim(std::string_view(text).substr(1));
      const auto eq = body.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = trim(std::string_view(body).substr(0, eq));
      const std::string value = trim(std::string_view(body).substr(eq + 1));
      if (key == "note")
        t.notes.push_back(value);
      else
        t.metadata[key] = value;
      continue;
    }
    const auto cells = split(text, ',');
    if (!header) {
      if (cells.size() < 2) throw ParameterError(where + ": header needs a sweep column and one value column");
      t.sweep = cells[0];
      for (std::size_t i = 1; i < cells.size(); ++i) {
        ColumnKey key;
        key.label = cells[i];
        const auto colon = cells[i].find(':');
        key.quantity = cells[i].substr(0, colon);
        if (colon != std::string::npos) key.p_reflect = parse_number(cells[i].substr(colon + 1), where);
        if (key.quantity != "t1" && key.quantity != "V" && key.quantity != "E_Tr" && key.quantity != "V_Tr")
          throw ParameterError(where + ": unknown column '" + cells[i] + "'");
        if ((key.quantity == "E_Tr" || key.quantity == "V_Tr") && !key.p_reflect)
          throw ParameterError(where + ": column '" + cells[i] + "' needs a reflection probability");
        t.columns.push_back(key);
      }
      header = true;
      continue;
    }
    if (cells.size() != t.columns.size() + 1)
      throw ParameterError(where + ": expected " + std::to_string(t.columns.size() + 1) + " fields");
    t.sweep_values.push_back(parse_number(cells[0], where));
    std::vector<double> row;
    for (std::size_t i = 1; i < cells.size(); ++i) row.push_back(parse_number(cells[i], where));
    t.values.push_back(std::move(row));
  }
  if (!header) throw ParameterError("reference table has no header");
  for (const char* key : {"model", "S", "x"})
    if (!t.metadata.count(key)) throw ParameterError(std::string("reference table lacks '# ") + key + "='");
  return t;
}

ReferenceTable parse_reference_table(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_reference_table(in);
}

std::string_view embedded_table(int id) {
  if (id < 1 || id > 6) throw ParameterError("table id must be 1..6");
  return detail::kTableText[id - 1];
}

std::uint32_t crc32_of(std::string_view text) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(text.data()), static_cast<uInt>(text.size()));
  return static_cast<std::uint32_t>(crc);
}

std::uint32_t recorded_checksum(int id) {
  if (id < 1 || id > 6) throw ParameterError("table id must be 1..6");
  const std::string name = "table" + std::to_string(id) + ".csv";
  std::istringstream in{std::string(detail::kChecksumText)};
  std::string hex, file;
  while (in >> hex >> file)
    if (file == name) return static_cast<std::uint32_t>(std::stoul(hex, nullptr, 16));
  throw ParameterError("no checksum recorded for " + name);
}

// ---------------------------------------------------------------------------
// Configuration

void apply_assignment(RunConfig& config, std::string_view assignment, std::string_view where) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos)
    throw ParameterError(std::string(where) + ": expected key=value, got '" + std::string(assignment) + "'");
  const std::string key = trim(assignment.substr(0, eq));
  const std::string value = trim(assignment.substr(eq + 1));
  const std::string ctx = std::string(where) + ", key '" + key + "'";
  if (key.empty()) throw ParameterError(std::string(where) + ": empty key");
  if (key == "model") {
    config.model = value;
  } else if (key == "S") {
    config.S = parse_number(value, ctx);
  } else if (key == "x") {
    config.x = parse_number(value, ctx);
  } else if (key == "p_R") {
    config.p_reflect.clear();
    for (const auto& p : split(value, ',')) {
      const double v = parse_number(p, ctx);
      if (!(v >= 0.0 && v < 1.0)) throw ParameterError(ctx + ": reflection probability must be in [0, 1)");
      config.p_reflect.push_back(v);
    }
  } else if (key == "tol") {
    config.tol = parse_number(value, ctx);
    if (!(config.tol > 0.0)) throw ParameterError(ctx + ": tolerance must be positive");
  } else if (key == "format") {
    if (value == "csv")
      config.format = OutputFormat::csv;
    else if (value == "text")
      config.format = OutputFormat::text;
    else
      throw ParameterError(ctx + ": format must be csv or text");
  } else if (key == "seed") {
    config.seed = static_cast<std::uint64_t>(parse_number(value, ctx));
  } else {
    config.params[key] = parse_number(value, ctx);
  }
}

void apply_config_text(RunConfig& config, std::istream& in, std::string_view source) {
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    const std::string text = trim(std::string_view(line).substr(0, hash));
    if (text.empty()) continue;
    apply_assignment(config, text, std::string(source) + ":" + std::to_string(number));
  }
}

DiffusionSpec make_spec(const std::string& model, const std::map<std::string, double>& params) {
  if (model == "wiener") {
    reject_unknown(params, model, {"mu", "sigma2", "nu"});
    return wiener_spec({require(params, model, "mu"), require(params, model, "sigma2"), require(params, model, "nu")});
  }
  if (model == "ou") {
    reject_unknown(params, model, {"theta", "rho", "sigma2", "nu"});
    return ou_spec({require(params, model, "theta"), require(params, model, "rho"),
                    require(params, model, "sigma2"), require(params, model, "nu")});
  }
  if (model == "feller") {
    reject_unknown(params, model, {"theta", "rho", "xi", "nu"});
    return feller_spec({require(params, model, "theta"), require(params, model, "rho"),
                        require(params, model, "xi"), require(params, model, "nu")});
  }
  throw ParameterError("unknown model '" + model + "' (expected wiener, ou or feller)");
}

std::optional<double> oracle_mean(const std::string& model, const std::map<std::string, double>& params,
                                  double S, double x) {
  if (model == "wiener")
    return wiener_fpt_mean({params.at("mu"), params.at("sigma2"), params.at("nu")}, S, x);
  if (model == "ou")
    return ou_fpt_mean({params.at("theta"), params.at("rho"), params.at("sigma2"), params.at("nu")}, S, x);
  if (model == "feller")
    return feller_fpt_mean({params.at("theta"), params.at("rho"), params.at("xi"), params.at("nu")}, S, x);
  return std::nullopt;
}

std::optional<std::string> boundary_note(const std::string& model, const std::map<std::string, double>& params) {
  if (model != "feller") return std::nullopt;
  const FellerParams p{params.at("theta"), params.at("rho"), params.at("xi"), params.at("nu")};
  if (classify_feller_lower(p) == BoundaryClass::reflecting) return "regular boundary: reflecting imposed";
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Reports

bool ComparisonReport::passed() const {
  return std::all_of(rows.begin(), rows.end(), [](const ReportRow& r) { return r.pass; });
}

double ComparisonReport::worst_relative_error() const {
  double worst = 0.0;
  for (const auto& r : rows) worst = std::fmax(worst, r.relative_error);
  return worst;
}

void ComparisonReport::write(std::ostream& out, OutputFormat format) const {
  const auto failed = std::count_if(rows.begin(), rows.end(), [](const ReportRow& r) { return !r.pass; });
  if (format == OutputFormat::csv) {
    out << "cell,computed,computed_7,reference,relative_error,threshold,oracle,residual,status,note\n";
    for (const auto& r : rows) {
      out << csv_field(r.cell) << ',' << format_full(r.computed) << ',' << format_sig7(r.computed) << ','
          << format_sig7(r.reference) << ',' << format_sig7(r.relative_error) << ',' << format_sig7(r.threshold)
          << ',' << (r.oracle ? format_full(*r.oracle) : "") << ',' << format_sig7(r.residual) << ','
          << (r.pass ? "pass" : "FAIL") << ',' << csv_field(r.note) << '\n';
    }
    return;
  }
  out << title << '\n';
  std::size_t width = 4;
  for (const auto& r : rows) width = std::max(width, r.cell.size());
  out << std::left << std::setw(static_cast<int>(width)) << "cell" << "  " << std::setw(13) << "computed"
      << "  " << std::setw(13) << "reference" << "  " << std::setw(13) << "rel.error" << "  status\n";
  for (const auto& r : rows) {
    out << std::setw(static_cast<int>(width)) << r.cell << "  " << std::setw(13) << format_sig7(r.computed)
        << "  " << std::setw(13) << format_sig7(r.reference) << "  " << std::setw(13)
        << format_sig7(r.relative_error) << "  " << (r.pass ? "pass" : "FAIL");
    if (!r.note.empty()) out << "  " << r.note;
    out << '\n';
  }
  out << rows.size() << " cells, " << failed << " failed, worst relative error " << format_sig7(worst_relative_error())
      << '\n';
}

double default_threshold(int id) { return id == 1 || id == 2 ? 1e-5 : 1e-4; }

ComparisonReport compare_table(const ReferenceTable& table, std::optional<double> threshold, double tol,
                               unsigned threads) {
  const std::string model = table.metadata.at("model");
  const double S = parse_number(table.metadata.at("S"), "S");
  const double x = parse_number(table.metadata.at("x"), "x");
  std::map<std::string, double> base;
  for (const auto& [key, value] : table.metadata)
    if (!kMetadataOnly.count(key)) base[key] = parse_number(value, key);
  int id = 0;
  if (auto it = table.metadata.find("table"); it != table.metadata.end()) id = std::stoi(it->second);
  const double gate = threshold.value_or(default_threshold(id));

  ComparisonReport report;
  report.title = id ? "table " + std::to_string(id) + " (" + model + ")" : model;
  const std::size_t ncols = table.columns.size();
  report.rows.resize(table.values.size() * ncols);

  for_each_index(table.values.size(), threads, [&](std::size_t r) {
    auto params = base;
    params[table.sweep] = table.sweep_values[r];
    const DiffusionSpec spec = make_spec(model, params);
    const auto note = boundary_note(model, params);
    std::map<double, MomentSummary> by_p;
    for (const auto& c : table.columns) {
      const double p = c.p_reflect.value_or(0.0);
      if (!by_p.count(p))
        by_p.emplace(p, summary(spec, ElasticThreshold::from_reflection_probability(S, p), x, tol));
    }
    std::optional<double> oracle;
    for (std::size_t c = 0; c < ncols; ++c) {
      const ColumnKey& key = table.columns[c];
      const MomentSummary& m = by_p.at(key.p_reflect.value_or(0.0));
      ReportRow row;
      std::ostringstream cell;
      cell << table.sweep << '=' << table.sweep_values[r] << '/' << key.label;
      row.cell = cell.str();
      if (key.quantity == "t1") {
        row.computed = m.t1;
        if (!oracle) oracle = oracle_mean(model, params, S, x);
        row.oracle = oracle;
      } else if (key.quantity == "V") {
        row.computed = m.fpt_variance;
      } else if (key.quantity == "E_Tr") {
        row.computed = m.refractory_mean;
      } else {
        row.computed = m.refractory_variance;
      }
      row.reference = table.values[r][c];
      row.relative_error = relative_error(row.computed, row.reference);
      row.threshold = gate;
      row.residual = m.max_residual();
      row.pass = row.relative_error <= gate && row.residual <= kResidualGate &&
                 (!row.oracle || relative_error(row.computed, *row.oracle) <= kResidualGate);
      if (note) row.note = *note;
      if (row.oracle && relative_error(row.computed, *row.oracle) > kResidualGate)
        row.note += (row.note.empty() ? "" : "; ") + std::string("oracle disagrees");
      report.rows[r * ncols + c] = std::move(row);
    }
  });
  return report;
}

ComparisonReport run_table(int id, std::optional<double> threshold, double tol, unsigned threads) {
  const std::string_view text = embedded_table(id);
  if (crc32_of(text) != recorded_checksum(id))
    throw Error("embedded table " + std::to_string(id) + " does not match its checksum");
  return compare_table(parse_reference_table(text), threshold, tol, threads);
}

// ---------------------------------------------------------------------------
// moments and counter output

void write_moments(std::ostream& out, const RunConfig& config) {
  const DiffusionSpec spec = make_spec(config.model, config.params);
  struct Field {
    const char* name;
    double MomentSummary::*member;
  };
  static constexpr Field kFields[] = {
      {"t1", &MomentSummary::t1},
      {"V", &MomentSummary::fpt_variance},
      {"fet_t1", &MomentSummary::fet_t1},
      {"fet_V", &MomentSummary::fet_variance},
      {"E_Tr", &MomentSummary::refractory_mean},
      {"V_Tr", &MomentSummary::refractory_variance},
      {"E_Tr2", &MomentSummary::refractory_second},
  };
  const auto note = boundary_note(config.model, config.params);
  if (config.format == OutputFormat::csv) {
    out << "model,p_R";
    for (const auto& f : kFields) out << ',' << f.name << ',' << f.name << "_7";
    out << ",max_residual,note\n";
  }
  for (double p : config.p_reflect) {
    const auto m = summary(spec, ElasticThreshold::from_reflection_probability(config.S, p), config.x, config.tol);
    if (config.format == OutputFormat::csv) {
      out << config.model << ',' << p;
      for (const auto& f : kFields) out << ',' << format_full(m.*f.member) << ',' << format_sig7(m.*f.member);
      out << ',' << format_sig7(m.max_residual()) << ',' << csv_field(note.value_or("")) << '\n';
    } else {
      out << config.model << "  p_R=" << p << '\n';
      for (const auto& f : kFields) out << "  " << std::left << std::setw(8) << f.name << format_sig7(m.*f.member) << '\n';
      out << "  " << std::setw(8) << "residual" << format_sig7(m.max_residual()) << '\n';
      if (note) out << "  " << *note << '\n';
    }
  }
}

void write_counter(std::ostream& out, const CounterParams& p, OutputFormat format, std::size_t simulate_windows,
                   std::uint64_t seed) {
  const CountDistribution d = output_distribution(p);
  std::optional<CounterSample> sim;
  if (simulate_windows > 0) sim = simulate_counter(p, simulate_windows, seed);
  std::size_t rows = d.pmf.size();
  if (sim) rows = std::max(rows, sim->frequency.size());
  double cumulative = 0.0;
  if (format == OutputFormat::csv) {
    out << "n,pmf,cumulative";
    if (sim) out << ",frequency,std_error,z";
    out << '\n';
  } else {
    out << "lambda=" << p.lambda << " T=" << p.T << " tau=" << p.tau << "  mean=" << format_sig7(d.mean)
        << " variance=" << format_sig7(d.variance) << " defect=" << format_sig7(d.normalization_defect) << '\n';
  }
  for (std::size_t n = 0; n < rows; ++n) {
    const double pmf = n < d.pmf.size() ? d.pmf[n] : 0.0;
    cumulative += pmf;
    const char sep = format == OutputFormat::csv ? ',' : ' ';
    out << n << sep << format_full(pmf) << sep << format_full(cumulative);
    if (sim) {
      const double f = n < sim->frequency.size() ? sim->frequency[n] : 0.0;
      const double se = n < sim->std_error.size() ? sim->std_error[n] : 0.0;
      const double ref_se = std::sqrt(pmf * (1.0 - pmf) / static_cast<double>(simulate_windows));
      const double z = ref_se > 0.0 ? (f - pmf) / ref_se : (f == pmf ? 0.0 : INFINITY);
      out << sep << format_sig7(f) << sep << format_sig7(se) << sep << format_sig7(z);
    }
    out << '\n';
  }
}

}  // namespace fpt::harness
