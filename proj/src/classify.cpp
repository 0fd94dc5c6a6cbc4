#include "membrane/classify.hpp"
#include "membrane/energy.hpp"

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace membrane {

std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Reg: return "Reg";
    case Verdict::Sing1: return "Sing1";
    case Verdict::Sing2: return "Sing2";
    case Verdict::Hybrid: return "Hybrid";
    case Verdict::Undetermined: return "Undetermined";
  }
  return "?";
}

double reference_w0(int dim) {
  // Closed-form integration of the stable half-space profile over the unit ball.
  if (dim == 1) return 1.0 / 6.0;
  if (dim == 2) return std::numbers::pi / 16.0;
  throw std::invalid_argument("reference energies exist for dim 1 and 2");
}

double reference_energy(Verdict v, int dim) {
  const double w0 = reference_w0(dim);
  switch (v) {
    case Verdict::Reg: return w0;
    case Verdict::Sing1: return 1.5 * w0;
    case Verdict::Hybrid: return 1.75 * w0;
    case Verdict::Sing2: return 2.0 * w0;
    default: throw std::invalid_argument("Undetermined has no reference energy");
  }
}

MembraneStack rescale_at(const MembraneStack& stack, const Point& center, double r) {
  const Lattice& src = stack.lattice();
  if (!(r > 0.0)) throw std::invalid_argument("rescaling radius must be positive");
  const double lim = src.half_width() * (1.0 + 1e-12);
  if (std::abs(center[0]) + r > lim || (src.dim() == 2 && std::abs(center[1]) + r > lim))
    throw std::out_of_range("rescaling ball leaves the lattice hull");
  const int cells = std::max(2, static_cast<int>(std::floor(std::min(r, 1.0) / src.spacing() + 1e-9)));
  const Lattice lat(src.dim(), 1.0, 1.0 / cells);
  const auto mask = ball_mask(lat, 1.0);
  MembraneStack out;
  out.forces = stack.forces;
  const double hw = src.half_width();
  for (const auto& f : stack.fields) {
    std::vector<double> v(lat.node_count());
    for (std::size_t k = 0; k < v.size(); ++k) {
      const Point y = lat.point(k);
      // Padding nodes outside the ball may map past the source hull; clamp them.
      const Point x{std::clamp(center[0] + r * y[0], -hw, hw),
                    src.dim() == 2 ? std::clamp(center[1] + r * y[1], -hw, hw) : 0.0};
      v[k] = interpolate(f, x) / (r * r);
    }
    out.fields.emplace_back(lat, std::move(v), mask);
  }
  return out;
}

namespace {

void require_triple(const MembraneStack& stack) {
  if (stack.count() != 3) throw std::invalid_argument("classification needs three membranes");
}

double contact_tol(const MembraneStack& stack, const ClassifyOptions& opt) {
  const double h = stack.lattice().spacing();
  return opt.contact_tolerance >= 0.0 ? opt.contact_tolerance : 0.25 * h * h;
}

std::array<GammaSet, 2> free_boundaries(const MembraneStack& stack, const ClassifyOptions& opt) {
  const auto contact = contact_sets(stack, contact_tol(stack, opt));
  const Lattice& lat = stack.lattice();
  return {extract_gamma(lat, contact[0], stack.mask(), GammaLabel::Gamma1),
          extract_gamma(lat, contact[1], stack.mask(), GammaLabel::Gamma2)};
}

double nearest(const GammaSet& g, const Point& c) {
  double best = std::numeric_limits<double>::infinity();
  for (const Point& p : g.points) best = std::min(best, std::hypot(p[0] - c[0], p[1] - c[1]));
  return best;
}

// Pure quadratic least squares: v ~ y.Q y / 2 on rescaled samples.
struct QuadSamples {
  int dim;
  std::vector<Point> y;
  std::vector<double> u1, u3;
};

QuadSamples quad_samples(const MembraneStack& stack, const Point& center, double r) {
  const Lattice& lat = stack.lattice();
  const double lim = lat.half_width() * (1.0 + 1e-12);
  if (std::abs(center[0]) + r > lim || (lat.dim() == 2 && std::abs(center[1]) + r > lim))
    throw std::out_of_range("fit ball leaves the lattice hull");
  QuadSamples s{lat.dim(), {}, {}, {}};
  for (std::size_t k = 0; k < lat.node_count(); ++k) {
    if (!stack.mask()[k]) continue;
    const Point p = lat.point(k);
    const Point y{(p[0] - center[0]) / r, lat.dim() == 2 ? (p[1] - center[1]) / r : 0.0};
    if (std::hypot(y[0], y[1]) > 1.0 + 1e-12) continue;
    s.y.push_back(y);
    s.u1.push_back(stack.fields[0].values[k] / (r * r));
    s.u3.push_back(stack.fields[2].values[k] / (r * r));
  }
  if (s.y.size() < 4) throw std::invalid_argument("too few nodes for a quadratic fit");
  return s;
}

SymMatrix fit_quadratic(const QuadSamples& s, const std::vector<double>& v) {
  const int d = s.dim;
  const int cols = d == 1 ? 1 : 3;
  Eigen::MatrixXd M(static_cast<Eigen::Index>(s.y.size()), cols);
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(s.y.size()));
  for (std::size_t i = 0; i < s.y.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double a = s.y[i][0], b = s.y[i][1];
    if (d == 1) {
      M(r, 0) = 0.5 * a * a;
    } else {
      M(r, 0) = 0.5 * a * a;
      M(r, 1) = a * b;
      M(r, 2) = 0.5 * b * b;
    }
    rhs(r) = v[i];
  }
  const Eigen::VectorXd c = M.colPivHouseholderQr().solve(rhs);
  SymMatrix Q(d);
  Q.set(0, 0, c(0));
  if (d == 2) {
    Q.set(0, 1, c(1));
    Q.set(1, 1, c(2));
  }
  return Q;
}

double quad(const SymMatrix& A, const Point& y) {
  return A.quad(std::span<const double>(y.data(), static_cast<std::size_t>(A.dim())));
}

// Best e for target ~ c * max(y.e, 0)^2 in sup norm.
struct DirFit {
  Direction e;
  double eps;
};

DirFit fit_half_direction(const QuadSamples& s, const std::vector<double>& target, double c) {
  auto misfit = [&](double theta) {
    const double c1 = std::cos(theta), s1 = std::sin(theta);
    double worst = 0.0;
    for (std::size_t i = 0; i < s.y.size(); ++i) {
      const double t = std::max(0.0, c1 * s.y[i][0] + s1 * s.y[i][1]);
      worst = std::max(worst, std::abs(target[i] - c * t * t));
    }
    return worst;
  };
  if (s.dim == 1) {
    const double ep = misfit(0.0), em = misfit(std::numbers::pi);
    return ep <= em ? DirFit{Direction({1.0}), ep} : DirFit{Direction({-1.0}), em};
  }
  constexpr int kAngles = 720;
  const double step = 2.0 * std::numbers::pi / kAngles;
  double best_theta = 0.0, best = std::numeric_limits<double>::infinity();
  for (int j = 0; j < kAngles; ++j) {
    const double th = j * step - std::numbers::pi;
    const double v = misfit(th);
    if (v < best) {
      best = v;
      best_theta = th;
    }
  }
  const auto r = boost::math::tools::brent_find_minima(misfit, best_theta - step, best_theta + step, 40);
  if (r.second < best) {
    best = r.second;
    best_theta = r.first;
  }
  return {Direction::angle(best_theta), best};
}

}  // namespace

bool on_both_free_boundaries(const MembraneStack& stack, const Point& center, const ClassifyOptions& opt) {
  require_triple(stack);
  const auto g = free_boundaries(stack, opt);
  const double reach = opt.on_boundary_cells * stack.lattice().spacing() * (1.0 + 1e-9);
  return nearest(g[0], center) <= reach && nearest(g[1], center) <= reach;
}

ParabolaFit fit_parabola(const MembraneStack& stack, const Point& center, double r) {
  require_triple(stack);
  const QuadSamples s = quad_samples(stack, center, r);
  ParabolaFit f{fit_quadratic(s, s.u1), fit_quadratic(s, s.u3), 0.0};
  for (std::size_t i = 0; i < s.y.size(); ++i)
    f.epsilon = std::max({f.epsilon, std::abs(s.u1[i] - 0.5 * quad(f.A, s.y[i])), std::abs(s.u3[i] - 0.5 * quad(f.B, s.y[i]))});
  return f;
}

HybridFit fit_hybrid(const MembraneStack& stack, const Point& center, double r) {
  require_triple(stack);
  const QuadSamples s = quad_samples(stack, center, r);
  // (e, B): u3 = -y.By/2, u1 = max(y.e,0)^2/4 + y.By/4.
  const SymMatrix Beb = fit_quadratic(s, s.u3) * -1.0;
  std::vector<double> t1(s.y.size());
  for (std::size_t i = 0; i < s.y.size(); ++i) t1[i] = s.u1[i] - 0.25 * quad(Beb, s.y[i]);
  const DirFit eb = fit_half_direction(s, t1, 0.25);
  double eps_eb = eb.eps;
  for (std::size_t i = 0; i < s.y.size(); ++i) eps_eb = std::max(eps_eb, std::abs(s.u3[i] + 0.5 * quad(Beb, s.y[i])));
  // (B, e): u1 = y.By/2, u3 = -max(y.e,0)^2/4 - y.By/4.
  const SymMatrix Bbe = fit_quadratic(s, s.u1);
  std::vector<double> t3(s.y.size());
  for (std::size_t i = 0; i < s.y.size(); ++i) t3[i] = -(s.u3[i] + 0.25 * quad(Bbe, s.y[i]));
  const DirFit be = fit_half_direction(s, t3, 0.25);
  double eps_be = be.eps;
  for (std::size_t i = 0; i < s.y.size(); ++i) eps_be = std::max(eps_be, std::abs(s.u1[i] - 0.5 * quad(Bbe, s.y[i])));
  if (eps_eb <= eps_be) return {HybridEB{eb.e, Beb}, eps_eb};
  return {HybridBE{Bbe, be.e}, eps_be};
}

PointClass classify_point(const MembraneStack& stack, const Point& center, const std::vector<double>& radii,
                          const ClassifyOptions& opt) {
  require_triple(stack);
  if (!on_both_free_boundaries(stack, center, opt))
    throw std::invalid_argument("classification center is not on both free boundaries");
  const Lattice& lat = stack.lattice();
  const double rmin = opt.min_radius_cells * lat.spacing();
  double r = std::numeric_limits<double>::infinity();
  for (double x : radii)
    if (x >= rmin * (1.0 - 1e-12)) r = std::min(r, x);
  if (!std::isfinite(r)) r = rmin;

  PointClass pc;
  pc.center = center;
  pc.radius = r;
  pc.energy = weiss_at(stack, center, r);
  double best = std::numeric_limits<double>::infinity();
  for (Verdict v : {Verdict::Reg, Verdict::Sing1, Verdict::Hybrid, Verdict::Sing2}) {
    const double ref = reference_energy(v, lat.dim());
    const double rel = std::abs(pc.energy - ref) / ref;
    if (rel <= opt.band && rel < best) {
      best = rel;
      pc.energy_family = v;
    }
  }
  const ScalarField u = stack.u(), w = stack.w();
  switch (pc.energy_family) {
    case Verdict::Reg: {
      const FlatnessFit f = fit_flatness(u, w, center, r, FitMode::R);
      pc.fit = HalfPairR{f.alpha, f.beta, f.a, f.b};
      pc.epsilon = f.epsilon;
      break;
    }
    case Verdict::Sing1: {
      const FlatnessFit f = fit_flatness(u, w, center, r, FitMode::S);
      pc.fit = HalfPairS{f.alpha, f.beta, f.a, f.b};
      pc.epsilon = f.epsilon;
      break;
    }
    case Verdict::Sing2: {
      const ParabolaFit f = fit_parabola(stack, center, r);
      pc.fit = Parabola{f.A, f.B};
      pc.epsilon = f.epsilon;
      break;
    }
    case Verdict::Hybrid: {
      const HybridFit f = fit_hybrid(stack, center, r);
      pc.fit = f.spec;
      pc.epsilon = f.epsilon;
      break;
    }
    case Verdict::Undetermined:
      return pc;
  }
  pc.verdict = pc.epsilon <= opt.confirm_epsilon ? pc.energy_family : Verdict::Undetermined;
  return pc;
}

std::vector<Point> intersection_points(const MembraneStack& stack, double inner_radius, const ClassifyOptions& opt) {
  require_triple(stack);
  const Lattice& lat = stack.lattice();
  const auto g = free_boundaries(stack, opt);
  const double h = lat.spacing();
  const double reach = std::sqrt(1.25) * h * (1.0 + 1e-9);
  const int n = lat.nodes_per_axis();
  std::array<std::vector<std::uint8_t>, 2> near{std::vector<std::uint8_t>(lat.node_count(), 0),
                                                std::vector<std::uint8_t>(lat.node_count(), 0)};
  for (int s = 0; s < 2; ++s)
    for (const Point& p : g[static_cast<std::size_t>(s)].points) {
      const int ci = lat.nearest_index(p[0]);
      const int cj = lat.dim() == 2 ? lat.nearest_index(p[1]) : 0;
      for (int dj = -2; dj <= 2; ++dj)
        for (int di = -2; di <= 2; ++di) {
          const int i = ci + di, j = cj + dj;
          if (i < 0 || i >= n || j < 0 || (lat.dim() == 2 ? j >= n : j != 0)) continue;
          const std::size_t k = lat.flat(i, j);
          const Point x = lat.point(k);
          if (std::hypot(x[0] - p[0], x[1] - p[1]) <= reach) near[static_cast<std::size_t>(s)][k] = 1;
        }
    }
  std::vector<Point> out;
  for (std::size_t k = 0; k < lat.node_count(); ++k) {
    if (!stack.mask()[k] || !near[0][k] || !near[1][k]) continue;
    const Point x = lat.point(k);
    if (std::hypot(x[0], x[1]) < inner_radius) out.push_back(x);
  }
  return out;
}

AngleSeries angle_dynamics(const MembraneStack& stack, const Point& center, const std::vector<double>& radii,
                           FitMode mode) {
  require_triple(stack);
  for (std::size_t i = 1; i < radii.size(); ++i)
    if (!(radii[i] < radii[i - 1])) throw std::invalid_argument("angle dynamics radii must be decreasing");
  const ScalarField u = stack.u(), w = stack.w();
  AngleSeries s;
  for (double r : radii) {
    FlatnessFit f;
    try {
      f = fit_flatness(u, w, center, r, mode);
    } catch (const std::exception&) {
      s.truncated = true;
      break;
    }
    if (f.degenerate) {
      s.truncated = true;
      break;
    }
    const double gap = distance(f.alpha, f.beta);
    s.radii.push_back(r);
    s.angle_gap.push_back(gap);
    s.epsilon.push_back(f.epsilon);
    s.mode.push_back(mode);
    s.log_diagnostic.push_back(gap * std::abs(std::log2(r)));
  }
  return s;
}

void write_classes_csv(std::ostream& os, const std::vector<PointClass>& classes, int dim) {
  os << (dim == 2 ? "x1,x2,verdict,energy,eps\n" : "x1,verdict,energy,eps\n");
  for (const auto& c : classes) {
    os << format_number(c.center[0]) << ',';
    if (dim == 2) os << format_number(c.center[1]) << ',';
    os << verdict_name(c.verdict) << ',' << format_number(c.energy) << ',' << format_number(c.epsilon) << '\n';
  }
}

}  // namespace membrane
