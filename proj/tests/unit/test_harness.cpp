#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>

#include "fpt/harness.hpp"

using namespace fpt;
using namespace fpt::harness;

namespace {

const char* kRow = R"(# model=wiener
# mu=-0.5
# nu=-80
# S=-50
# x=-70
sigma2,t1,E_Tr:0.1,V_Tr:0.99
10,3.073451E+2,6.294544E+2,3.148772E+11
)";

}  // namespace

TEST_CASE("number formats") {
  CHECK(format_sig7(307.3451018) == "3.073451E+02");
  CHECK(format_sig7(8.822180e44) == "8.822180E+44");
  CHECK(format_sig7(0.0) == "0.000000E+00");
  CHECK(std::stod(format_full(0.1)) == 0.1);
  CHECK(std::stod(format_full(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("reference table parsing") {
  const ReferenceTable t = parse_reference_table(std::string_view(kRow));
  CHECK(t.metadata.at("model") == "wiener");
  CHECK(t.sweep == "sigma2");
  REQUIRE(t.columns.size() == 3);
  CHECK(t.columns[0].quantity == "t1");
  CHECK(!t.columns[0].p_reflect);
  CHECK(t.columns[2].quantity == "V_Tr");
  CHECK(*t.columns[2].p_reflect == doctest::Approx(0.99));
  CHECK(t.sweep_values == std::vector<double>{10.0});
  CHECK(t.values[0][2] == 3.148772e11);

  CHECK_THROWS_AS(parse_reference_table(std::string_view("# model=wiener\nsigma2,Q\n1,2\n")), ParameterError);
  CHECK_THROWS_AS(parse_reference_table(std::string_view("# model=wiener\n# S=1\n# x=0\nsigma2,t1\n1,2,3\n")),
                  ParameterError);
}

TEST_CASE("embedded tables match their recorded checksums") {
  for (int id = 1; id <= 6; ++id) {
    CHECK(crc32_of(embedded_table(id)) == recorded_checksum(id));
    const ReferenceTable t = parse_reference_table(embedded_table(id));
    CHECK(t.columns.size() == 5);
    CHECK(!t.sweep_values.empty());
  }
  CHECK(crc32_of("123456789") == 0xcbf43926u);
  CHECK_THROWS_AS(embedded_table(7), ParameterError);
}

TEST_CASE("gates") {
  CHECK(default_threshold(1) == 1e-5);
  CHECK(default_threshold(2) == 1e-5);
  for (int id = 3; id <= 6; ++id) CHECK(default_threshold(id) == 1e-4);
}

TEST_CASE("comparison of a single row") {
  const ComparisonReport r = compare_table(parse_reference_table(std::string_view(kRow)), 1e-5);
  REQUIRE(r.rows.size() == 3);
  CHECK(r.passed());
  CHECK(r.worst_relative_error() < 1e-6);
  CHECK(r.rows[0].oracle.has_value());
  for (const ReportRow& row : r.rows) CHECK(row.residual < kResidualGate);

  std::string perturbed = kRow;
  perturbed.replace(perturbed.find("6.294544E+2"), 11, "6.295544E+2");
  const ComparisonReport bad = compare_table(parse_reference_table(std::string_view(perturbed)), 1e-5);
  CHECK(!bad.passed());
  CHECK(!bad.rows[1].pass);
  CHECK(bad.rows[0].pass);

  std::ostringstream csv;
  bad.write(csv, OutputFormat::csv);
  CHECK(csv.str().find("FAIL") != std::string::npos);
}

TEST_CASE("configuration text") {
  RunConfig c;
  std::istringstream in("model = ou  # comment\ntheta=5\nrho=-70\nsigma2=20\nnu=-80\nS=-50\nx=-70\np_R=0.1,0.9\n");
  apply_config_text(c, in, "run.cfg");
  CHECK(c.model == "ou");
  CHECK(c.params.at("sigma2") == 20.0);
  CHECK(c.p_reflect == std::vector<double>{0.1, 0.9});
  CHECK(c.S == -50.0);

  std::istringstream bad("model=ou\nsigma2=abc\n");
  try {
    apply_config_text(c, bad, "run.cfg");
    FAIL("expected a diagnostic");
  } catch (const ParameterError& e) {
    const std::string what = e.what();
    CHECK(what.find("run.cfg:2") != std::string::npos);
    CHECK(what.find("sigma2") != std::string::npos);
  }
  CHECK_THROWS_AS(apply_assignment(c, "p_R=1.0"), ParameterError);
  CHECK_THROWS_AS(apply_assignment(c, "novalue"), ParameterError);
  CHECK_THROWS_AS(apply_assignment(c, "format=xml"), ParameterError);
}

TEST_CASE("model construction from parameters") {
  CHECK_NOTHROW(make_spec("wiener", {{"mu", -0.5}, {"sigma2", 10.0}, {"nu", -80.0}}));
  CHECK_THROWS_AS(make_spec("wiener", {{"mu", -0.5}, {"nu", -80.0}}), ParameterError);
  CHECK_THROWS_AS(make_spec("wiener", {{"mu", -0.5}, {"sigma2", 10.0}, {"nu", -80.0}, {"theta", 1.0}}),
                  ParameterError);
  CHECK_THROWS_AS(make_spec("cir", {}), ParameterError);

  const std::map<std::string, double> regular{{"theta", 5.0}, {"rho", -70.0}, {"xi", 5.0}, {"nu", -80.0}};
  const std::map<std::string, double> entrance{{"theta", 5.0}, {"rho", -70.0}, {"xi", 1.0}, {"nu", -80.0}};
  CHECK(boundary_note("feller", regular).has_value());
  CHECK(!boundary_note("feller", entrance).has_value());
  CHECK(*oracle_mean("feller", entrance, -50.0, -70.0) == doctest::Approx(8.029989e1).epsilon(1e-6));
}

TEST_CASE("moments output") {
  RunConfig c;
  c.model = "wiener";
  c.params = {{"mu", -0.5}, {"sigma2", 10.0}, {"nu", -80.0}};
  c.S = -50.0;
  c.x = -70.0;
  c.p_reflect = {0.0, 0.5};
  std::ostringstream a, b;
  write_moments(a, c);
  write_moments(b, c);
  CHECK(a.str() == b.str());
  CHECK(a.str().find("3.073451E+02") != std::string::npos);
  CHECK(a.str().find("5.665090E+03") != std::string::npos);
  int lines = 0;
  for (char ch : a.str()) lines += ch == '\n';
  CHECK(lines == 3);
}

TEST_CASE("counter output") {
  std::ostringstream out;
  write_counter(out, {1.0, 5.0, 6.0}, OutputFormat::csv);
  int lines = 0;
  for (char ch : out.str()) lines += ch == '\n';
  CHECK(lines == 3);
  CHECK(out.str().rfind("n,pmf,cumulative", 0) == 0);
}
