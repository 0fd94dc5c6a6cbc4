#pragma once

#include "membrane/grid.hpp"
#include "membrane/profiles.hpp"
#include "membrane/solver.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace membrane {

using NodeMask = std::vector<std::uint8_t>;

enum class GammaLabel { Gamma1, Gamma2, GammaU, GammaW };
std::string label_name(GammaLabel label);

/// Free-boundary samples: midpoints of lattice edges whose endpoints differ
/// in the contact indicator.
struct GammaSet {
  GammaLabel label = GammaLabel::Gamma1;
  int dim = 2;
  std::vector<Point> points;
};

/// One mask per consecutive pair: contact iff u_k - u_{k+1} <= tolerance.
std::vector<NodeMask> contact_sets(const MembraneStack& stack, double tolerance);

/// Contact masks of the pair system: {u - w/2 <= tol} (first) and {w - u/2 <= tol}.
std::array<NodeMask, 2> pair_contact_sets(const ScalarField& u, const ScalarField& w, double tolerance);

/// Edges with both endpoints in `domain` and differing `contact` values.
GammaSet extract_gamma(const Lattice& lat, const NodeMask& contact, const NodeMask& domain, GammaLabel label);

void write_gamma_csv(std::ostream& os, const GammaSet& gamma);

enum class FitMode { R, S };

/// Half-space fit of a pair on B_radius(center). The pair is rescaled to the
/// unit ball first, so a, b and epsilon refer to y = (x - center)/radius and
/// values divided by radius^2.
struct FlatnessFit {
  Direction alpha, beta;
  double a = 0.0, b = 0.0;
  double epsilon = 0.0;
  FitMode mode = FitMode::R;
  Point center{0.0, 0.0};
  double radius = 1.0;
  /// Mode R with u and w both identically zero: directions are meaningless.
  bool degenerate = false;
};

/// Rescaled sup-norm misfit of given parameters (the fit objective).
double flatness_misfit(const ScalarField& u, const ScalarField& w, const Point& center, double radius,
                       FitMode mode, const Direction& alpha, const Direction& beta, double a, double b);

/// Deterministic coarse-to-fine sup-norm fit: 720 directions in 2D, then
/// simplex refinement.
FlatnessFit fit_flatness(const ScalarField& u, const ScalarField& w, const Point& center, double radius,
                         FitMode mode);

struct WidthRow {
  double r = 0.0;
  double width = 0.0;   // NaN when no free-boundary point lies in B_r
  double log_ratio = 0.0;  // width * (-ln r) / r
  double linear_ratio = 0.0;  // width / r
  std::size_t points = 0;
};

/// width(r) = max over gamma points in B_r(center) of |x . direction - offset|.
std::vector<WidthRow> width_profile(const GammaSet& gamma, const Direction& direction, double offset,
                                    const std::vector<double>& radii, const Point& center = {0.0, 0.0});

/// Orthogonal map taking (alpha, beta) to the symmetric frame
/// alpha_1 = beta_1 > 0, alpha_2 = -beta_2 >= 0. Throws when alpha = -beta.
struct FrameMap {
  std::array<double, 4> q{1.0, 0.0, 0.0, 1.0};  // row-major 2x2
  Direction alpha, beta;
  Point apply(const Point& y) const { return {q[0] * y[0] + q[1] * y[1], q[2] * y[0] + q[3] * y[1]}; }
};
FrameMap symmetric_frame(const Direction& alpha, const Direction& beta, int dim);

struct TrappingResult {
  bool trapped = false;
  /// Worst signed slack of the sandwich on the checked nodes (rescaled units).
  double margin = 0.0;
  std::size_t checked = 0;
};

inline constexpr double kTrappingTolerance = 1e-8;
inline constexpr double kFlatRegime = 0.05;

/// Sandwich test of the rescaled pair between translated approximate
/// solutions on B_{radius/2}(center), shift A * epsilon.
TrappingResult check_trapping(const ScalarField& u, const ScalarField& w, const FlatnessFit& fit,
                              double shift_constant);

}  // namespace membrane
