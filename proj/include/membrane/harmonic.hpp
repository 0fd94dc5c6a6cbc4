#pragma once

#include "membrane/grid.hpp"
#include "membrane/thresholds.hpp"

#include <functional>
#include <iosfwd>
#include <vector>

namespace membrane {

/// Bounded function of the angle on the unit circle.
struct BoundaryFunction {
  std::function<double(double)> f;
  double bound = 0.0;
  double operator()(double theta) const { return f(theta); }
};

/// a0 + sum_k (a_k cos k theta + b_k sin k theta), k = 1..K.
struct FourierSeries {
  double a0 = 0.0;
  std::vector<double> a, b;
  double operator()(double theta) const;
  double bound() const;
  BoundaryFunction as_boundary() const;
};

/// Half-plane Poisson integral of t^2 on 1 < t < 2 (zero elsewhere), x1 > 0.
double h0_eval(const Point& x);

struct AuxConstants {
  double A1 = 0.0;          // d/dx1 h0 at the origin
  double d12 = 0.0;         // d^2/dx1 dx2 h0 at the origin
  double A2 = 0.0;          // d12 / ln 2 (natural-log normalization)
};
AuxConstants aux_constants();

/// Partial sum of H(x) = sum_{k>=1} 4^-k h0(2^k x), k = 1..terms.
double aux_H_eval(const Point& x, int terms);
/// Tail bound of the partial sum: (16/3) 4^-terms.
double aux_H_tail(int terms);

struct RemainderRow {
  double r = 0.0;
  double C = 0.0;
};

struct RemainderCheck {
  std::vector<RemainderRow> rows;
  double band_ratio = 0.0;  // max C / min C
  bool pass = false;         // band_ratio <= thresholds::kRemainderBand
};

inline constexpr int kAuxTerms = 40;

/// C(r) = sup over B_r and x1 > 0 of |H - A1 x1 + s A2 x1 x2 ln r| / r^2.
/// `log_sign` is s: +1 is the stated form, -1 the flipped sign, 0 drops the
/// log term. Radii must lie in (0, 1/2).
RemainderCheck aux_remainder_check(const std::vector<double>& radii, int log_sign = 1);

void write_remainder_csv(std::ostream& os, const RemainderCheck& check);

struct HalfDiscSolution {
  ScalarField field;
  double residual = 0.0;
  bool converged = false;
};

/// Laplace problem on the half disc {|x| < 1, x1 > 0}: arc data `f`, zero on
/// the diameter. Shortley-Weller stencils at the arc, sparse direct solve.
/// The lattice must have half width 1.
HalfDiscSolution halfdisc_dirichlet(const BoundaryFunction& f, const Lattice& lat);

struct GammaValues {
  double gamma1 = 0.0;
  double gamma2 = 0.0;
};

/// gamma1 = d/dx1 h(0), gamma2 = d^2/dx1dx2 h(0) for the half-disc harmonic
/// extension of f. Stencils sit 4h into the half disc; one Richardson step in
/// the stencil width and one between spacings h and h/2.
GammaValues gamma_functionals(const BoundaryFunction& f, double spacing = 1.0 / 64.0);

}  // namespace membrane
