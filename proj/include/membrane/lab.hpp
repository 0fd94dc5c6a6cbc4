#pragma once

#include "membrane/harmonic.hpp"
#include "membrane/solver.hpp"

#include "json.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace membrane::lab {

/// Resolved experiment configuration. Every field carries its effective value
/// after defaults were applied, so `echo` reproduces the full run.
struct ExperimentConfig {
  std::string experiment;
  int dim = 2;
  double spacing = 0.0;
  double half_width = 1.0;
  std::string profile;       // sh | uh | parabola
  double amplitude = 0.0;    // perturbation size epsilon
  std::string perturbation;  // none | fourier | balanced | split | random
  FourierSeries phi, psi;    // used when perturbation = fourier
  std::vector<double> radii;
  double inner_radius = 0.25;
  unsigned long long seed = 1;
  int draws = 5;
  std::string output = "membrane-lab-output";

  /// Key/value pairs in a fixed order, numbers with 12 significant digits.
  std::vector<std::pair<std::string, std::string>> echo() const;
};

std::vector<std::string> registered_experiments();

/// Parses `key = value` lines ('#' starts a comment, lists are comma
/// separated). Numbers accept decimals, `p/q` and `2^k`.
std::map<std::string, std::string> parse_key_values(std::istream& in);

/// Applies the experiment's defaults and checks every precondition; throws
/// std::invalid_argument naming the offending key.
ExperimentConfig resolve_config(const std::map<std::string, std::string>& raw);
ExperimentConfig load_config(const std::filesystem::path& path);

struct Table {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

struct ReportBundle {
  std::string experiment;
  std::vector<Table> tables;
  nlohmann::ordered_json summary;
  bool pass = false;
};

ReportBundle run_experiment(const ExperimentConfig& config);

/// Writes `<dir>/<experiment>/<table>.csv` and `<dir>/<experiment>/summary.json`.
std::vector<std::filesystem::path> write_report(const ReportBundle& bundle, const std::filesystem::path& dir);

void write_table_csv(std::ostream& os, const Table& table);

/// Number rounded to the shared 12-digit report precision.
double report_number(double v);

/// The perturbation pair (phi, psi) selected by a config, as Fourier series.
std::pair<FourierSeries, FourierSeries> make_perturbation(const ExperimentConfig& config);

/// Smallest slack of phi <= psi <= 2 phi on the arc x1 <= 0 (negative when violated).
double left_arc_slack(const FourierSeries& phi, const FourierSeries& psi);

/// Three-membrane problem on B_R with boundary data
/// u1 = base_1 + eps phi, u3 = base_3 - eps psi, u2 = -u1 - u3 (then ordered by
/// isotonic projection); base is SH(e1) or UH(e1).
MembraneProblem perturbed_problem(const ExperimentConfig& config, const FourierSeries& phi, const FourierSeries& psi);

}  // namespace membrane::lab
