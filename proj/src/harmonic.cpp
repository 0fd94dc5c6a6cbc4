#include "membrane/harmonic.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace membrane {

double FourierSeries::operator()(double theta) const {
  double v = a0;
  for (std::size_t k = 0; k < a.size(); ++k) v += a[k] * std::cos(static_cast<double>(k + 1) * theta);
  for (std::size_t k = 0; k < b.size(); ++k) v += b[k] * std::sin(static_cast<double>(k + 1) * theta);
  return v;
}

double FourierSeries::bound() const {
  double s = std::abs(a0);
  for (double c : a) s += std::abs(c);
  for (double c : b) s += std::abs(c);
  return s;
}

BoundaryFunction FourierSeries::as_boundary() const {
  FourierSeries copy = *this;
  return {[copy](double t) { return copy(t); }, bound()};
}

namespace {

constexpr double kQuadAbs = 1e-11;
constexpr std::size_t kWorkspace = 2000;

struct Workspace {
  gsl_integration_workspace* w;
  Workspace() : w(gsl_integration_workspace_alloc(kWorkspace)) {}
  ~Workspace() { gsl_integration_workspace_free(w); }
  Workspace(const Workspace&) = delete;
  Workspace& operator=(const Workspace&) = delete;
};

// Adaptive Gauss-Kronrod over [lo, hi]; error target kQuadAbs.
template <class G>
double integrate(G&& g, double lo, double hi) {
  static const bool handler_off = [] {
    gsl_set_error_handler_off();
    return true;
  }();
  (void)handler_off;
  if (!(hi > lo)) return 0.0;
  thread_local Workspace ws;
  gsl_function fn;
  fn.function = [](double t, void* p) { return (*static_cast<std::remove_reference_t<G>*>(p))(t); };
  fn.params = &g;
  double result = 0.0, err = 0.0;
  const int status = gsl_integration_qags(&fn, lo, hi, kQuadAbs, 1e-13, kWorkspace, ws.w, &result, &err);
  if (status != GSL_SUCCESS && err > kQuadAbs)
    throw std::runtime_error(std::string("quadrature failed: ") + gsl_strerror(status));
  return result;
}

}  // namespace

double h0_eval(const Point& x) {
  const double x1 = x[0], x2 = x[1];
  if (!(x1 > 0.0)) throw std::invalid_argument("h0 needs x1 > 0");
  // With t = x2 + x1 tan(phi) the kernel becomes d(phi) / pi. Near phi = +-pi/2
  // the cotangent form t = x2 +- x1 / tan(psi), psi = pi/2 - |phi|, keeps the
  // endpoints well conditioned when x1 is tiny.
  const double s1 = 1.0 - x2, s2 = 2.0 - x2, q = 0.25 * std::numbers::pi;
  auto sq = [](double t) { return t * t / std::numbers::pi; };
  double total = 0.0;
  const double c_lo = std::max(std::atan(s1 / x1), -q), c_hi = std::min(std::atan(s2 / x1), q);
  total += integrate([&](double phi) { return sq(x2 + x1 * std::tan(phi)); }, c_lo, c_hi);
  if (s2 > x1) {
    const double top = s1 > x1 ? std::atan(x1 / s1) : q;
    total += integrate([&](double psi) { return sq(x2 + x1 / std::tan(psi)); }, std::atan(x1 / s2), top);
  }
  if (s1 < -x1) {
    const double top = s2 < -x1 ? std::atan(x1 / -s2) : q;
    total += integrate([&](double psi) { return sq(x2 - x1 / std::tan(psi)); }, std::atan(x1 / -s1), top);
  }
  return total;
}

AuxConstants aux_constants() {
  AuxConstants c;
  // d/dx1 of x1 K(x1, t) at 0 leaves t^2 / t^2; d/dx2 of that gives 2 t^2 / t^3.
  c.A1 = integrate([](double t) { return t * t / (t * t) / std::numbers::pi; }, 1.0, 2.0);
  c.d12 = integrate([](double t) { return 2.0 * t * t / (t * t * t) / std::numbers::pi; }, 1.0, 2.0);
  c.A2 = c.d12 / std::numbers::ln2;
  return c;
}

double aux_H_tail(int terms) { return 16.0 / 3.0 * std::pow(4.0, -terms); }

double aux_H_eval(const Point& x, int terms) {
  if (!(x[0] > 0.0)) throw std::invalid_argument("H needs x1 > 0");
  if (terms < 1) throw std::invalid_argument("need at least one term");
  double s = 0.0, scale = 1.0;
  for (int k = 1; k <= terms; ++k) {
    scale *= 2.0;
    const double w = 1.0 / (scale * scale);
    // 4 w bounds the remaining terms' size; past rounding level they cannot move s.
    if (s > 0.0 && 4.0 * w < 1e-3 * std::numeric_limits<double>::epsilon() * s) break;
    s += w * h0_eval({scale * x[0], scale * x[1]});
  }
  return s;
}

RemainderCheck aux_remainder_check(const std::vector<double>& radii, int log_sign) {
  if (radii.empty()) throw std::invalid_argument("radii list is empty");
  for (double r : radii)
    if (!(r > 0.0 && r < 0.5)) throw std::invalid_argument("remainder radii must lie in (0, 1/2)");
  const AuxConstants k = aux_constants();
  constexpr int kRadial = 32, kAngular = 64;
  RemainderCheck out;
  for (double r : radii) {
    const double lr = std::log(r);
    double sup = 0.0;
    auto visit = [&](double rho, double th) {
      const Point x{rho * std::cos(th), rho * std::sin(th)};
      if (!(x[0] > 0.0)) return;
      const double rem = aux_H_eval(x, kAuxTerms) - k.A1 * x[0] + log_sign * k.A2 * x[0] * x[1] * lr;
      sup = std::max(sup, std::abs(rem));
    };
    for (int i = 1; i <= kRadial; ++i) {
      const double rho = r * i / kRadial;
      for (int j = 1; j < kAngular; ++j) visit(rho, -0.5 * std::numbers::pi + std::numbers::pi * j / kAngular);
      // Points hugging the diameter, where H approaches its boundary data.
      visit(rho, 0.5 * std::numbers::pi - 1e-6);
      visit(rho, -0.5 * std::numbers::pi + 1e-6);
    }
    out.rows.push_back({r, sup / (r * r)});
  }
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& row : out.rows) {
    lo = std::min(lo, row.C);
    hi = std::max(hi, row.C);
  }
  out.band_ratio = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  out.pass = out.band_ratio <= thresholds::kRemainderBand;
  return out;
}

void write_remainder_csv(std::ostream& os, const RemainderCheck& check) {
  os << "r,C\n";
  for (const auto& row : check.rows) os << format_number(row.r) << ',' << format_number(row.C) << '\n';
}

HalfDiscSolution halfdisc_dirichlet(const BoundaryFunction& f, const Lattice& lat) {
  if (lat.dim() != 2 || lat.half_width() != 1.0) throw std::invalid_argument("half-disc solve needs a 2D lattice on [-1,1]^2");
  if (!f.f) throw std::invalid_argument("boundary function is empty");
  const int n = lat.nodes_per_axis();
  const double h = lat.spacing();
  auto unknown = [&](int i, int j) {
    if (i < 0 || j < 0 || i >= n || j >= n) return false;
    const double x = lat.coordinate(i), y = lat.coordinate(j);
    return x > 0.0 && x * x + y * y < 1.0 - 1e-12;
  };
  std::vector<int> index(lat.node_count(), -1);
  int m = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      if (unknown(i, j)) index[lat.flat(i, j)] = m++;

  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  constexpr int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const int row = index[lat.flat(i, j)];
      if (row < 0) continue;
      const double px = lat.coordinate(i), py = lat.coordinate(j);
      double dist[4], known[4];
      int col[4];
      for (int d = 0; d < 4; ++d) {
        col[d] = -1;
        known[d] = 0.0;
        dist[d] = h;
        if (unknown(i + di[d], j + dj[d])) {
          col[d] = index[lat.flat(i + di[d], j + dj[d])];
          continue;
        }
        // Nearest boundary crossing along the ray: diameter or arc.
        const double ex = di[d], ey = dj[d];
        const double pe = px * ex + py * ey;
        double s_arc = -pe + std::sqrt(std::max(0.0, pe * pe - (px * px + py * py - 1.0)));
        double s_dia = ex < 0.0 ? px : std::numeric_limits<double>::infinity();
        if (s_dia <= s_arc) {
          dist[d] = std::min(s_dia, h);
          known[d] = 0.0;
        } else {
          s_arc = std::clamp(s_arc, 1e-14, h);
          dist[d] = s_arc;
          known[d] = f(std::atan2(py + s_arc * ey, px + s_arc * ex));
        }
      }
      double diag = 0.0;
      for (int axis = 0; axis < 2; ++axis) {
        const int p = 2 * axis, q = 2 * axis + 1;
        const double hp = dist[p], hm = dist[q];
        const double cp = 2.0 * h * h / ((hp + hm) * hp), cm = 2.0 * h * h / ((hp + hm) * hm);
        diag -= cp + cm;
        for (auto [c, dd] : {std::pair{cp, p}, std::pair{cm, q}}) {
          if (col[dd] >= 0)
            trip.emplace_back(row, col[dd], c);
          else
            rhs[row] -= c * known[dd];
        }
      }
      trip.emplace_back(row, row, diag);
    }
  Eigen::SparseMatrix<double> A(m, m);
  A.setFromTriplets(trip.begin(), trip.end());
  A.makeCompressed();

  HalfDiscSolution out{ScalarField(lat), 0.0, false};
  Eigen::VectorXd sol = Eigen::VectorXd::Zero(m);
  if (m > 0) {
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.analyzePattern(A);
    lu.factorize(A);
    if (lu.info() != Eigen::Success) return out;
    sol = lu.solve(rhs);
    out.residual = (A * sol - rhs).lpNorm<Eigen::Infinity>();
  }
  out.converged = out.residual <= 1e-10;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const std::size_t k = lat.flat(i, j);
      const double x = lat.coordinate(i), y = lat.coordinate(j);
      if (index[k] >= 0) {
        out.field.values[k] = sol[index[k]];
        out.field.mask[k] = 1;
      } else {
        out.field.values[k] = x > 0.0 ? f(std::atan2(y, x)) : 0.0;
        out.field.mask[k] = 0;
      }
    }
  return out;
}

namespace {

GammaValues stencil_gammas(const ScalarField& F, int step) {
  const Lattice& lat = F.lattice;
  const int c = lat.center_index();
  const double h = lat.spacing();
  auto at = [&](int i, int j) { return F.values[lat.flat(c + i, c + j)]; };
  auto g1 = [&](int s) { return at(s, 0) / (s * h); };
  auto g2 = [&](int s) { return (at(s, s) - at(s, -s)) / (2.0 * (s * h) * (s * h)); };
  return {(4.0 * g1(step) - g1(2 * step)) / 3.0, (4.0 * g2(step) - g2(2 * step)) / 3.0};
}

}  // namespace

GammaValues gamma_functionals(const BoundaryFunction& f, double spacing) {
  if (!(spacing > 0.0) || spacing > 1.0 / 16.0) throw std::invalid_argument("gamma spacing must lie in (0, 1/16]");
  auto solve = [&](double h) {
    HalfDiscSolution s = halfdisc_dirichlet(f, Lattice(2, 1.0, h));
    if (!s.converged) throw std::runtime_error("half-disc solve did not converge");
    return s;
  };
  // The same physical offsets (4h and 8h of the coarse grid) on both grids.
  const GammaValues coarse = stencil_gammas(solve(spacing).field, 4);
  const GammaValues fine = stencil_gammas(solve(0.5 * spacing).field, 8);
  return {(4.0 * fine.gamma1 - coarse.gamma1) / 3.0, (4.0 * fine.gamma2 - coarse.gamma2) / 3.0};
}

}  // namespace membrane
