#include "membrane/lab.hpp"

#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

using namespace membrane;
using namespace membrane::lab;

namespace {

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return resolve_config(parse_key_values(in));
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::filesystem::path scratch_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("membrane-lab-test-" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("registered experiments") {
  const auto names = registered_experiments();
  CHECK(names.size() == 7);
  CHECK(names.front() == "energy-table");
}

TEST_CASE("config parsing") {
  const ExperimentConfig c = parse(
      "# energy table\n"
      "experiment = energy-table\n"
      "dim = 1\n"
      "spacing = 2^-9   # fine\n"
      "draws = 3\n");
  CHECK(c.dim == 1);
  CHECK(c.spacing == 1.0 / 512);
  CHECK(c.draws == 3);
  CHECK(c.seed == 7);

  const ExperimentConfig g = parse("experiment = generic-regular\nradii = 1/32, 1/16, 1/8, 1/4\n");
  CHECK(g.radii == std::vector<double>{1.0 / 32, 1.0 / 16, 1.0 / 8, 1.0 / 4});
  CHECK(g.spacing == 1.0 / 256);
  CHECK(g.perturbation == "balanced");

  const ExperimentConfig f =
      parse("experiment = generic-regular\nperturbation = fourier\nphi_a0 = 0.1\nphi_cos = 0.2, 0\npsi_sin = 0.3\n");
  CHECK(f.phi.a0 == 0.1);
  CHECK(f.phi.a == std::vector<double>{0.2, 0.0});
  CHECK(f.psi.b == std::vector<double>{0.3});
}

TEST_CASE("config errors name the offending key") {
  auto error_of = [](const std::string& text) {
    try {
      parse(text);
    } catch (const std::invalid_argument& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  const std::string unknown = error_of("experiment = unknown-name\n");
  CHECK(unknown.find("unknown-name") != std::string::npos);
  CHECK(unknown.find("energy-table") != std::string::npos);
  CHECK(unknown.find("aux-function") != std::string::npos);
  CHECK(error_of("experiment = energy-table\ncolour = red\n").find("colour") != std::string::npos);
  CHECK(error_of("experiment = energy-table\nspacing = 0.3\n").find("spacing") != std::string::npos);
  CHECK(error_of("experiment = energy-table\ndim = 3\n").find("dim") != std::string::npos);
  CHECK(error_of("experiment = clog-width\ndim = 1\n").find("dim = 2") != std::string::npos);
  CHECK(error_of("experiment = energy-table\ndraws = 0\n").find("draws") != std::string::npos);
  CHECK(error_of("experiment = energy-table\ndraws = 1.5\n").find("integer") != std::string::npos);
  CHECK(error_of("experiment = energy-table\namplitude = -1\n").find("amplitude") != std::string::npos);
  CHECK(error_of("experiment = generic-regular\nphi_a0 = 1\n").find("fourier") != std::string::npos);
  CHECK(error_of("experiment = generic-regular\nradii = 0.1, -0.2\n").find("radii") != std::string::npos);
  CHECK(error_of("experiment = generic-regular\ninner_radius = 2\n").find("inner_radius") != std::string::npos);
  CHECK(error_of("experiment = energy-table\nspacing = 1/0\n").find("zero denominator") != std::string::npos);
  CHECK(error_of("dim = 2\n").find("experiment") != std::string::npos);
  CHECK(error_of("experiment = energy-table\nexperiment = aux-function\n").find("duplicate") != std::string::npos);
  CHECK(error_of("experiment energy-table\n").find("line 1") != std::string::npos);
  CHECK_THROWS(load_config("/nonexistent/config.cfg"));
}

TEST_CASE("config echo carries every resolved key") {
  const ExperimentConfig c = parse("experiment = sing1-instability\n");
  const auto echo = c.echo();
  CHECK(echo.size() == 18);
  CHECK(echo[0] == std::pair<std::string, std::string>{"experiment", "sing1-instability"});
  bool found = false;
  for (const auto& [k, v] : echo)
    if (k == "spacing") found = v == "0.0078125";
  CHECK(found);
}

TEST_CASE("localized perturbation presets") {
  ExperimentConfig c = parse("experiment = generic-regular\n");
  const auto [phi, psi] = make_perturbation(c);
  CHECK(left_arc_slack(phi, psi) >= -1e-12);
  double peak = 0.0;
  for (int j = 0; j < 1000; ++j) {
    const double t = 2.0 * M_PI * j / 1000;
    peak = std::max(peak, std::abs(phi(t)) + std::abs(psi(t)));
  }
  CHECK(peak == doctest::Approx(1.0).epsilon(1e-3));
  const GammaValues gp = gamma_functionals(phi.as_boundary()), gq = gamma_functionals(psi.as_boundary());
  CHECK(std::abs(gp.gamma1) <= 1e-3);
  CHECK(std::abs(gq.gamma1) <= 1e-3);
  CHECK(gp.gamma2 - gq.gamma2 == doctest::Approx(0.857).epsilon(1e-2));

  c.perturbation = "split";
  const auto [sphi, spsi] = make_perturbation(c);
  CHECK(left_arc_slack(sphi, spsi) >= -1e-12);
  CHECK(std::abs(gamma_functionals(sphi.as_boundary()).gamma1 - gamma_functionals(spsi.as_boundary()).gamma1) == doctest::Approx(0.2568).epsilon(1e-3));

  c.perturbation = "random";
  c.seed = 5;
  const auto r1 = make_perturbation(c), r2 = make_perturbation(c);
  CHECK(r1.first.a == r2.first.a);
  CHECK(left_arc_slack(r1.first, r1.second) >= -1e-12);
  c.seed = 6;
  CHECK(make_perturbation(c).first.a != r1.first.a);

  c.perturbation = "none";
  CHECK(make_perturbation(c).first.bound() == 0.0);
}

TEST_CASE("perturbed problems keep the boundary data ordered") {
  ExperimentConfig c = parse("experiment = sing1-instability\nspacing = 1/32\n");
  const auto [phi, psi] = make_perturbation(c);
  const MembraneProblem p = perturbed_problem(c, phi, psi);
  CHECK_NOTHROW(validate_problem(p));
  c.profile = "parabola";
  CHECK_THROWS_AS(perturbed_problem(c, phi, psi), std::invalid_argument);
}

TEST_CASE("energy-table report and determinism") {
  const ExperimentConfig c = parse("experiment = energy-table\ndim = 1\nspacing = 1/128\ndraws = 2\n");
  const ReportBundle b = run_experiment(c);
  CHECK(b.summary["config"]["spacing"] == "0.0078125");
  CHECK(b.summary["verdicts"].contains("w0_anchor"));
  const auto dir = scratch_dir("energy");
  const auto paths = write_report(b, dir);
  REQUIRE(paths.size() == 3);
  CHECK(paths[0] == dir / "energy-table" / "table.csv");
  CHECK(paths.back() == dir / "energy-table" / "summary.json");
  const std::string table = slurp(paths[0]);
  CHECK(table.rfind("family,value,ratio,expected_ratio\nW0,", 0) == 0);
  const std::string first = slurp(paths.back());
  write_report(run_experiment(c), dir);
  CHECK(slurp(paths.back()) == first);
  CHECK(slurp(paths[0]) == table);
  std::filesystem::remove_all(dir);
}

TEST_CASE("reports are identical for any worker count") {
  const ExperimentConfig c = parse("experiment = sing1-instability\nspacing = 1/32\namplitude = 0\n");
  auto run_with = [&](const char* workers) {
    ::setenv("MEMBRANE_LAB_WORKERS", workers, 1);
    const auto dir = scratch_dir(std::string("workers-") + workers);
    const auto paths = write_report(run_experiment(c), dir);
    std::string all;
    for (const auto& p : paths) all += slurp(p);
    std::filesystem::remove_all(dir);
    return all;
  };
  const std::string one = run_with("1");
  CHECK(run_with("3") == one);
  CHECK(run_with("8") == one);
  ::unsetenv("MEMBRANE_LAB_WORKERS");
}

TEST_CASE("unwritable output directory") {
  ReportBundle b;
  b.experiment = "energy-table";
  CHECK_THROWS(write_report(b, "/proc/membrane-lab-cannot-write"));
}

TEST_CASE("ragged tables are rejected") {
  Table t{"t", {"a", "b"}, {{"1"}}};
  std::ostringstream os;
  CHECK_THROWS_AS(write_table_csv(os, t), std::logic_error);
}

TEST_CASE("report numbers use 12 significant digits") {
  CHECK(report_number(1.0 / 3.0) == 0.333333333333);
  CHECK(std::isnan(report_number(std::nan(""))));
}

TEST_CASE("experiments reject too few usable radii") {
  const ExperimentConfig c = parse("experiment = clog-width\nradii = 1/32, 1/16\n");
  CHECK_THROWS_AS(run_experiment(c), std::invalid_argument);
}

TEST_CASE("aux-function experiment tables") {
  const ReportBundle b = run_experiment(parse("experiment = aux-function\n"));
  REQUIRE(b.tables.size() == 4);
  CHECK(b.tables[0].name == "constants");
  CHECK(b.summary["verdicts"]["A1_closed_form"] == true);
  CHECK(b.summary["verdicts"]["stated_sign_bounded"] == true);
}

TEST_CASE("monneau-sing2 in 1D") {
  const ReportBundle b = run_experiment(parse("experiment = monneau-sing2\ndim = 1\nspacing = 1/128\n"));
  CHECK(b.pass);
  CHECK(b.tables.size() == 3);
}
