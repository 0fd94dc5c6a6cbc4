#include "membrane/freeboundary.hpp"

#include <boost/math/tools/minima.hpp>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace membrane {

std::string label_name(GammaLabel label) {
  switch (label) {
    case GammaLabel::Gamma1: return "Gamma1";
    case GammaLabel::Gamma2: return "Gamma2";
    case GammaLabel::GammaU: return "GammaU";
    case GammaLabel::GammaW: return "GammaW";
  }
  return "?";
}

std::vector<NodeMask> contact_sets(const MembraneStack& stack, double tolerance) {
  std::vector<NodeMask> out;
  for (int m = 0; m + 1 < stack.count(); ++m) {
    const auto& hi = stack.fields[static_cast<std::size_t>(m)].values;
    const auto& lo = stack.fields[static_cast<std::size_t>(m + 1)].values;
    NodeMask c(hi.size(), 0);
    for (std::size_t k = 0; k < hi.size(); ++k) c[k] = hi[k] - lo[k] <= tolerance ? 1 : 0;
    out.push_back(std::move(c));
  }
  return out;
}

std::array<NodeMask, 2> pair_contact_sets(const ScalarField& u, const ScalarField& w, double tolerance) {
  std::array<NodeMask, 2> out{NodeMask(u.size(), 0), NodeMask(u.size(), 0)};
  for (std::size_t k = 0; k < u.size(); ++k) {
    out[0][k] = u.values[k] - 0.5 * w.values[k] <= tolerance ? 1 : 0;
    out[1][k] = w.values[k] - 0.5 * u.values[k] <= tolerance ? 1 : 0;
  }
  return out;
}

GammaSet extract_gamma(const Lattice& lat, const NodeMask& contact, const NodeMask& domain, GammaLabel label) {
  GammaSet g;
  g.label = label;
  g.dim = lat.dim();
  const int n = lat.nodes_per_axis();
  const int jmax = lat.dim() == 2 ? n : 1;
  for (int j = 0; j < jmax; ++j)
    for (int i = 0; i < n; ++i) {
      const std::size_t k = lat.flat(i, j);
      if (!domain[k]) continue;
      const Point p = lat.point(k);
      if (i + 1 < n && domain[k + 1] && contact[k] != contact[k + 1])
        g.points.push_back({p[0] + 0.5 * lat.spacing(), p[1]});
      if (lat.dim() == 2 && j + 1 < n) {
        const std::size_t up = lat.flat(i, j + 1);
        if (domain[up] && contact[k] != contact[up]) g.points.push_back({p[0], p[1] + 0.5 * lat.spacing()});
      }
    }
  return g;
}

void write_gamma_csv(std::ostream& os, const GammaSet& gamma) {
  os << (gamma.dim == 2 ? "x1,x2,label\n" : "x1,label\n");
  for (const Point& p : gamma.points) {
    os << format_number(p[0]) << ',';
    if (gamma.dim == 2) os << format_number(p[1]) << ',';
    os << label_name(gamma.label) << '\n';
  }
}

namespace {

double pos(double s) { return s > 0.0 ? s : 0.0; }
double neg(double s) { return s < 0.0 ? s : 0.0; }

// Rescaled samples of a pair on a ball.
struct Samples {
  int dim = 2;
  std::vector<double> y1, y2, u, w;
  std::size_t size() const { return u.size(); }
};

Samples collect(const ScalarField& u, const ScalarField& w, const Point& center, double radius, double frac = 1.0) {
  const Lattice& lat = u.lattice;
  if (!(lat == w.lattice)) throw std::invalid_argument("pair fields live on different lattices");
  if (!(radius > 0.0)) throw std::invalid_argument("fit radius must be positive");
  const double lim = lat.half_width() * (1.0 + 1e-12);
  if (std::abs(center[0]) + radius > lim || (lat.dim() == 2 && std::abs(center[1]) + radius > lim))
    throw std::out_of_range("fit ball leaves the lattice hull");
  Samples s;
  s.dim = lat.dim();
  const double r2 = radius * radius;
  const double reach = frac * radius * (1.0 + 1e-12);
  for (std::size_t k = 0; k < lat.node_count(); ++k) {
    if (!u.inside(k)) continue;
    const Point p = lat.point(k);
    const double d1 = p[0] - center[0], d2 = lat.dim() == 2 ? p[1] - center[1] : 0.0;
    if (std::hypot(d1, d2) > reach) continue;
    s.y1.push_back(d1 / radius);
    s.y2.push_back(d2 / radius);
    s.u.push_back(u.values[k] / r2);
    s.w.push_back(w.values[k] / r2);
  }
  if (s.size() == 0) throw std::invalid_argument("fit ball contains no interior nodes");
  return s;
}

Samples thin(const Samples& s, std::size_t target) {
  if (s.size() <= target) return s;
  const std::size_t stride = (s.size() + target - 1) / target;
  Samples t;
  t.dim = s.dim;
  for (std::size_t i = 0; i < s.size(); i += stride) {
    t.y1.push_back(s.y1[i]);
    t.y2.push_back(s.y2[i]);
    t.u.push_back(s.u[i]);
    t.w.push_back(s.w[i]);
  }
  return t;
}

// One-membrane half-space misfit: max |v - 1/2 max(y.e - a, 0)^2|.
double half_misfit(const Samples& s, const std::vector<double>& v, double c, double sn, double a) {
  double worst = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double t = pos(c * s.y1[i] + sn * s.y2[i] - a);
    worst = std::max(worst, std::abs(v[i] - 0.5 * t * t));
  }
  return worst;
}

double unstable_misfit(const Samples& s, double ca, double sa, double cb, double sb, double a, double b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double sv = neg(ca * s.y1[i] + sa * s.y2[i] - a);
    const double tv = pos(cb * s.y1[i] + sb * s.y2[i] - b);
    const double p = 0.5 * sv * sv + 0.25 * tv * tv;
    const double q = 0.25 * sv * sv + 0.5 * tv * tv;
    worst = std::max({worst, std::abs(s.u[i] - p), std::abs(s.w[i] - q)});
  }
  return worst;
}

double best_offset(const std::function<double(double)>& f, double& value) {
  const auto r = boost::math::tools::brent_find_minima(f, -1.5, 1.5, 40);
  value = r.second;
  return r.first;
}

struct NmState {
  const std::function<double(const std::vector<double>&)>* f;
  std::size_t n;
};

double nm_trampoline(const gsl_vector* x, void* params) {
  const auto* st = static_cast<const NmState*>(params);
  std::vector<double> v(st->n);
  for (std::size_t i = 0; i < st->n; ++i) v[i] = gsl_vector_get(x, i);
  return (*st->f)(v);
}

// Nelder-Mead with restarts; returns the best point, writes its value.
std::vector<double> nelder_mead(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
                                std::vector<double> step, double& value) {
  const std::size_t n = x.size();
  NmState st{&f, n};
  gsl_multimin_function fn{&nm_trampoline, n, &st};
  value = f(x);
  gsl_vector* gx = gsl_vector_alloc(n);
  gsl_vector* gs = gsl_vector_alloc(n);
  gsl_multimin_fminimizer* m = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n);
  for (int restart = 0; restart < 4; ++restart) {
    for (std::size_t i = 0; i < n; ++i) {
      gsl_vector_set(gx, i, x[i]);
      gsl_vector_set(gs, i, step[i]);
    }
    gsl_multimin_fminimizer_set(m, &fn, gx, gs);
    for (int it = 0; it < 4000; ++it) {
      if (gsl_multimin_fminimizer_iterate(m) != GSL_SUCCESS) break;
      if (gsl_multimin_fminimizer_size(m) < 1e-13) break;
    }
    if (m->fval < value) {
      value = m->fval;
      for (std::size_t i = 0; i < n; ++i) x[i] = gsl_vector_get(m->x, i);
    }
    for (double& s : step) s *= 0.1;
  }
  gsl_multimin_fminimizer_free(m);
  gsl_vector_free(gs);
  gsl_vector_free(gx);
  return x;
}

constexpr int kCoarseAngles = 720;
constexpr std::size_t kCoarseSamples = 1500;

// (angle, offset, misfit) fit of one membrane to a one-sided half-space profile.
struct HalfFit {
  double theta = 0.0, a = 0.0, eps = 0.0;
};

HalfFit fit_half(const Samples& full, std::vector<double> Samples::*field) {
  const Samples coarse = thin(full, kCoarseSamples);
  const std::vector<double>& vc = coarse.*field;
  const std::vector<double>& vf = full.*field;
  if (full.dim == 1) {
    HalfFit best{0.0, 0.0, std::numeric_limits<double>::infinity()};
    for (double theta : {0.0, std::numbers::pi}) {
      double val = 0.0;
      const double c = std::cos(theta);
      const double a = best_offset([&](double x) { return half_misfit(full, vf, c, 0.0, x); }, val);
      if (val < best.eps) best = {theta, a, val};
    }
    return best;
  }
  std::vector<HalfFit> cand;
  for (int j = 0; j < kCoarseAngles; ++j) {
    const double theta = 2.0 * std::numbers::pi * j / kCoarseAngles - std::numbers::pi;
    const double c = std::cos(theta), sn = std::sin(theta);
    double val = 0.0;
    const double a = best_offset([&](double x) { return half_misfit(coarse, vc, c, sn, x); }, val);
    cand.push_back({theta, a, val});
  }
  std::stable_sort(cand.begin(), cand.end(), [](const HalfFit& l, const HalfFit& r) { return l.eps < r.eps; });
  HalfFit best{0.0, 0.0, std::numeric_limits<double>::infinity()};
  const std::function<double(const std::vector<double>&)> obj = [&](const std::vector<double>& p) {
    return half_misfit(full, vf, std::cos(p[0]), std::sin(p[0]), p[1]);
  };
  for (std::size_t c = 0; c < std::min<std::size_t>(4, cand.size()); ++c) {
    double val = 0.0;
    const auto p = nelder_mead(obj, {cand[c].theta, cand[c].a}, {2e-3, 2e-3}, val);
    if (val < best.eps) best = {p[0], p[1], val};
  }
  return best;
}

Direction direction_of(double theta, int dim) {
  if (dim == 1) return Direction({std::cos(theta) >= 0.0 ? 1.0 : -1.0});
  return Direction::angle(std::remainder(theta, 2.0 * std::numbers::pi));
}

double theta_of(const Direction& d) { return std::atan2(d[1], d[0]); }

}  // namespace

double flatness_misfit(const ScalarField& u, const ScalarField& w, const Point& center, double radius,
                       FitMode mode, const Direction& alpha, const Direction& beta, double a, double b) {
  const Samples s = collect(u, w, center, radius);
  if (mode == FitMode::R)
    return std::max(half_misfit(s, s.u, alpha[0], alpha[1], a), half_misfit(s, s.w, beta[0], beta[1], b));
  return unstable_misfit(s, alpha[0], alpha[1], beta[0], beta[1], a, b);
}

FlatnessFit fit_flatness(const ScalarField& u, const ScalarField& w, const Point& center, double radius,
                         FitMode mode) {
  const Samples full = collect(u, w, center, radius);
  FlatnessFit fit;
  fit.mode = mode;
  fit.center = center;
  fit.radius = radius;
  const int dim = full.dim;
  if (mode == FitMode::R) {
    double scale = 0.0;
    for (std::size_t i = 0; i < full.size(); ++i) scale = std::max({scale, std::abs(full.u[i]), std::abs(full.w[i])});
    if (scale <= 1e-14) {
      fit.degenerate = true;
      fit.alpha = fit.beta = direction_of(0.0, dim);
      fit.epsilon = scale;
      return fit;
    }
    const HalfFit fu = fit_half(full, &Samples::u);
    const HalfFit fw = fit_half(full, &Samples::w);
    fit.alpha = direction_of(fu.theta, dim);
    fit.beta = direction_of(fw.theta, dim);
    fit.a = fu.a;
    fit.b = fw.a;
    fit.epsilon = std::max(fu.eps, fw.eps);
    return fit;
  }
  struct Cand {
    double ta, tb, a, b, eps;
  };
  std::vector<Cand> cand;
  if (dim == 1) {
    for (double ta : {0.0, std::numbers::pi})
      for (double tb : {0.0, std::numbers::pi}) cand.push_back({ta, tb, 0.0, 0.0, 0.0});
  } else {
    const Samples coarse = thin(full, kCoarseSamples);
    for (int j = 0; j < kCoarseAngles; ++j) {
      const double th = 2.0 * std::numbers::pi * j / kCoarseAngles - std::numbers::pi;
      const double c = std::cos(th), sn = std::sin(th);
      cand.push_back({th, th, 0.0, 0.0, unstable_misfit(coarse, c, sn, c, sn, 0.0, 0.0)});
    }
    std::stable_sort(cand.begin(), cand.end(), [](const Cand& l, const Cand& r) { return l.eps < r.eps; });
    cand.resize(6);
  }
  Cand best{0.0, 0.0, 0.0, 0.0, std::numeric_limits<double>::infinity()};
  for (const Cand& c0 : cand) {
    double val = 0.0;
    if (dim == 1) {
      const double ca = std::cos(c0.ta), cb = std::cos(c0.tb);
      const std::function<double(const std::vector<double>&)> obj = [&](const std::vector<double>& p) {
        return unstable_misfit(full, ca, 0.0, cb, 0.0, p[0], p[1]);
      };
      const auto p = nelder_mead(obj, {0.0, 0.0}, {0.05, 0.05}, val);
      if (val < best.eps) best = {c0.ta, c0.tb, p[0], p[1], val};
    } else {
      const std::function<double(const std::vector<double>&)> obj = [&](const std::vector<double>& p) {
        return unstable_misfit(full, std::cos(p[0]), std::sin(p[0]), std::cos(p[1]), std::sin(p[1]), p[2], p[3]);
      };
      const auto p = nelder_mead(obj, {c0.ta, c0.tb, 0.0, 0.0}, {5e-3, 5e-3, 0.02, 0.02}, val);
      if (val < best.eps) best = {p[0], p[1], p[2], p[3], val};
    }
  }
  fit.alpha = direction_of(best.ta, dim);
  fit.beta = direction_of(best.tb, dim);
  fit.a = best.a;
  fit.b = best.b;
  fit.epsilon = best.eps;
  return fit;
}

std::vector<WidthRow> width_profile(const GammaSet& gamma, const Direction& direction, double offset,
                                    const std::vector<double>& radii, const Point& center) {
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0)) throw std::invalid_argument("radii must be positive");
    if (i > 0 && !(radii[i] > radii[i - 1])) throw std::invalid_argument("radii must be increasing");
  }
  std::vector<WidthRow> rows;
  for (double r : radii) {
    WidthRow row;
    row.r = r;
    double worst = -1.0;
    for (const Point& p : gamma.points) {
      if (std::hypot(p[0] - center[0], p[1] - center[1]) > r) continue;
      ++row.points;
      const double dev = std::abs(direction[0] * p[0] + direction[1] * p[1] - offset);
      worst = std::max(worst, dev);
    }
    if (row.points == 0) {
      row.width = row.log_ratio = row.linear_ratio = std::numeric_limits<double>::quiet_NaN();
    } else {
      row.width = worst;
      row.log_ratio = worst * (-std::log(r)) / r;
      row.linear_ratio = worst / r;
    }
    rows.push_back(row);
  }
  return rows;
}

FrameMap symmetric_frame(const Direction& alpha, const Direction& beta, int dim) {
  FrameMap fm;
  if (dim == 1) {
    if (alpha[0] * beta[0] <= 0.0) throw std::invalid_argument("alpha = -beta cannot be put in the symmetric frame");
    const double s = alpha[0] > 0.0 ? 1.0 : -1.0;
    fm.q = {s, 0.0, 0.0, 1.0};
    fm.alpha = Direction({1.0});
    fm.beta = Direction({1.0});
    return fm;
  }
  const double m1 = alpha[0] + beta[0], m2 = alpha[1] + beta[1];
  if (std::hypot(m1, m2) < 1e-12) throw std::invalid_argument("alpha = -beta cannot be put in the symmetric frame");
  const double phi = std::atan2(m2, m1);
  const double c = std::cos(phi), s = std::sin(phi);
  fm.q = {c, s, -s, c};
  Point a = fm.apply({alpha[0], alpha[1]});
  if (a[1] < 0.0) {
    fm.q = {c, s, s, -c};  // rotate, then reflect x2
    a = fm.apply({alpha[0], alpha[1]});
  }
  const Point b = fm.apply({beta[0], beta[1]});
  const double c1 = 0.5 * (a[0] + b[0]), s1 = std::abs(0.5 * (a[1] - b[1]));
  const double nrm = std::hypot(c1, s1);
  fm.alpha = Direction({c1 / nrm, s1 / nrm});
  fm.beta = Direction({c1 / nrm, -s1 / nrm});
  return fm;
}

TrappingResult check_trapping(const ScalarField& u, const ScalarField& w, const FlatnessFit& fit,
                              double shift_constant) {
  if (!(fit.epsilon < kFlatRegime)) throw std::invalid_argument("trapping needs a flat fit (epsilon < 0.05)");
  const FrameMap fm = symmetric_frame(fit.alpha, fit.beta, u.lattice.dim());
  const Samples s = collect(u, w, fit.center, fit.radius, 0.5);
  const double shift = shift_constant * fit.epsilon;
  TrappingResult res;
  res.margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < s.size(); ++i) {
    Pair lo, hi;
    if (fit.mode == FitMode::R) {
      const Point yl = fm.apply({s.y1[i] - shift * fit.alpha[0], s.y2[i] - shift * fit.alpha[1]});
      const Point yh = fm.apply({s.y1[i] + shift * fit.alpha[0], s.y2[i] + shift * fit.alpha[1]});
      lo = eval_approx(1, fm.alpha, fm.beta, fit.a, fit.b, yl);
      hi = eval_approx(1, fm.alpha, fm.beta, fit.a, fit.b, yh);
    } else {
      const Point y = fm.apply({s.y1[i], s.y2[i]});
      lo = eval_approx(2, fm.alpha, fm.beta, fit.a - shift, fit.b + shift, y);
      hi = eval_approx(2, fm.alpha, fm.beta, fit.a + shift, fit.b - shift, y);
    }
    res.margin = std::min({res.margin, s.u[i] - lo.p, hi.p - s.u[i], s.w[i] - lo.q, hi.q - s.w[i]});
    ++res.checked;
  }
  res.trapped = res.margin >= -kTrappingTolerance;
  return res;
}

}  // namespace membrane
