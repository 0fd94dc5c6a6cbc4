#pragma once

#include "membrane/freeboundary.hpp"
#include "membrane/profiles.hpp"
#include "membrane/solver.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace membrane {

enum class Verdict { Reg, Sing1, Sing2, Hybrid, Undetermined };
std::string verdict_name(Verdict v);

struct PointClass {
  Point center{0.0, 0.0};
  Verdict verdict = Verdict::Undetermined;
  /// Weiss energy at the classification radius.
  double energy = 0.0;
  double radius = 0.0;
  /// Family suggested by the energy alone (Undetermined when outside every band).
  Verdict energy_family = Verdict::Undetermined;
  /// Best fit of that family and its rescaled sup misfit.
  std::optional<ProfileSpec> fit;
  double epsilon = 0.0;
};

struct ClassifyOptions {
  /// Contact tolerance; negative selects h^2 / 4.
  double contact_tolerance = -1.0;
  /// Relative half-width of the energy bands.
  double band = 0.05;
  /// A family fit confirms the energy verdict when its misfit is below this.
  double confirm_epsilon = 0.05;
  /// Smallest classification radius in units of h.
  double min_radius_cells = 8.0;
  /// Center must lie within this many cells of both free boundaries.
  double on_boundary_cells = 2.0;
};

/// Limiting Weiss energy of the stable half-space family (1/6 in 1D, pi/16 in 2D).
double reference_w0(int dim);
/// Reference value of a family: W0, 1.5 W0, 1.75 W0, 2 W0.
double reference_energy(Verdict v, int dim);

/// u_k(center + r y) / r^2 resampled on a unit-ball lattice of spacing h/r
/// (rounded so that the node count stays odd).
MembraneStack rescale_at(const MembraneStack& stack, const Point& center, double r);

/// Both free boundaries pass within `on_boundary_cells` cells of `center`.
bool on_both_free_boundaries(const MembraneStack& stack, const Point& center, const ClassifyOptions& opt = {});

PointClass classify_point(const MembraneStack& stack, const Point& center, const std::vector<double>& radii,
                          const ClassifyOptions& opt = {});

/// Lattice nodes in B_inner(0) lying within one cell of both free boundaries.
std::vector<Point> intersection_points(const MembraneStack& stack, double inner_radius, const ClassifyOptions& opt = {});

/// Parabola fit (u1 = y.Ay/2, u3 = y.By/2) by quadratic least squares on B_r(center).
struct ParabolaFit {
  SymMatrix A, B;
  double epsilon = 0.0;
};
ParabolaFit fit_parabola(const MembraneStack& stack, const Point& center, double r);

/// Best hybrid fit over both orderings.
struct HybridFit {
  ProfileSpec spec;
  double epsilon = 0.0;
};
HybridFit fit_hybrid(const MembraneStack& stack, const Point& center, double r);

struct AngleSeries {
  std::vector<double> radii;
  std::vector<double> angle_gap;  // |alpha - beta|
  std::vector<double> epsilon;
  std::vector<FitMode> mode;
  std::vector<double> log_diagnostic;  // |alpha - beta| * |log2 r|
  bool truncated = false;
};

/// Fits at each (decreasing) dyadic radius; stops with `truncated` when a
/// scale cannot be fitted.
AngleSeries angle_dynamics(const MembraneStack& stack, const Point& center, const std::vector<double>& radii,
                           FitMode mode);

/// CSV `x1[,x2],verdict,energy,eps`.
void write_classes_csv(std::ostream& os, const std::vector<PointClass>& classes, int dim);

}  // namespace membrane
