#pragma once

#include "membrane/grid.hpp"
#include "membrane/profiles.hpp"
#include "membrane/solver.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace membrane {

enum class SeriesKind { Weiss, Monneau };
std::string kind_name(SeriesKind kind);

struct WeissSeries {
  Point center{0.0, 0.0};
  std::vector<double> radii;
  std::vector<double> values;
  SeriesKind kind = SeriesKind::Weiss;
  /// Slack used by the verdict (kMonotoneSlack * h).
  double slack = 0.0;
  bool monotone = true;
  /// Largest drop values[i] - values[i+1] (<= 0 when strictly non-decreasing).
  double worst_drop = 0.0;
};

/// Slack constant for monotonicity verdicts, in units of the lattice spacing.
inline constexpr double kMonotoneSlack = 1.0;

/// Integral of a field over B_r(center) (cell midpoint rule with exact cut-cell
/// areas). Exposed for tests.
double ball_integral(const ScalarField& f, const Point& center, double radius);

/// Boundary integral over the sphere of radius r: trapezoid on
/// max(64, ceil(2 pi r / h)) samples in 2D, endpoint sum in 1D.
double sphere_integral(const ScalarField& f, const Point& center, double radius);

/// Number of circle samples used by the boundary terms.
int sphere_samples(const Lattice& lat, double radius);

/// Weiss energy of a three-membrane stack with forces (1, 0, -1).
double weiss_at(const MembraneStack& stack, const Point& center, double radius);

/// Evaluates weiss_at per radius and judges monotonicity with slack C*h.
WeissSeries weiss_series(const MembraneStack& stack, const Point& center, const std::vector<double>& radii);

/// Monneau functional against the parabola stack v_k = x.A_k x / 2 (centered).
WeissSeries monneau_series(const MembraneStack& stack, const std::vector<SymMatrix>& parabolas, const Point& center,
                           const std::vector<double>& radii);

/// Judges monotonicity of a raw series in place.
void judge_monotone(WeissSeries& series, double spacing);

struct EnergyTable {
  int dim = 1;
  double spacing = 0.0;
  double W0 = 0.0, W1 = 0.0, W2 = 0.0, W3 = 0.0;
  /// max - min over the random hybrid / parabola specs.
  double hybrid_spread = 0.0, parabola_spread = 0.0;
  std::vector<double> hybrid_values, parabola_values;
  double ratio(int k) const;
};

/// Default spacings: 2^-9 in 1D, 2^-7 in 2D.
double default_table_spacing(int dim);

/// Limiting energies of the four homogeneous families at r = 1.
EnergyTable energy_table(int dim, double spacing = 0.0, unsigned long long seed = 7, int draws = 5);

/// Random valid specs (deterministic in the seed) used by energy_table.
std::vector<ProfileSpec> random_hybrids(int dim, unsigned long long seed, int count);
std::vector<ProfileSpec> random_parabolas(int dim, unsigned long long seed, int count);

/// CSV `r,value,kind`.
void write_series_csv(std::ostream& os, const WeissSeries& series);

}  // namespace membrane
