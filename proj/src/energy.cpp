#include "membrane/energy.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <ostream>
#include <random>
#include <stdexcept>

namespace membrane {

std::string kind_name(SeriesKind kind) { return kind == SeriesKind::Weiss ? "weiss" : "monneau"; }

namespace {

void require_ball_in_hull(const Lattice& lat, const Point& c, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("radius must be positive");
  const double lim = lat.half_width() * (1.0 + 1e-12);
  if (std::abs(c[0]) + r > lim || (lat.dim() == 2 && std::abs(c[1]) + r > lim))
    throw std::out_of_range("ball leaves the lattice hull");
}

// Area of {p in disc(0, r) : p1 <= x, p2 <= y}.
double quadrant_area(double x, double y, double r) {
  if (y <= -r || x <= -r) return 0.0;
  const double X = std::min(x, r);
  auto prim = [r](double t) {  // antiderivative of sqrt(r^2 - t^2)
    t = std::clamp(t, -r, r);
    return 0.5 * (t * std::sqrt(std::max(0.0, r * r - t * t)) + r * r * std::asin(t / r));
  };
  auto chord = [&](double lo, double hi) { return hi > lo ? prim(hi) - prim(lo) : 0.0; };
  if (y >= r) return 2.0 * chord(-r, X);
  const double T = std::sqrt(r * r - y * y);
  double area = 0.0;
  // |t| <= T: the chord reaches past y, covered length y + S(t).
  const double lo2 = -T, hi2 = std::min(T, X);
  if (hi2 > lo2) area += y * (hi2 - lo2) + chord(lo2, hi2);
  if (y >= 0.0) {
    area += 2.0 * chord(-r, std::min(-T, X));
    area += 2.0 * chord(T, X);
  }
  return area;
}

double rect_disc_area(double x0, double x1, double y0, double y1, double r) {
  return quadrant_area(x1, y1, r) - quadrant_area(x0, y1, r) - quadrant_area(x1, y0, r) + quadrant_area(x0, y0, r);
}

constexpr int kCutSubsamples = 16;

// Visits every cell meeting B_r(c) with its quadrature weight and the local
// evaluation point (tx, ty) in [0,1]^2.
void for_each_cell(const Lattice& lat, const Point& c, double r,
                   const std::function<void(int, int, double, double, double)>& visit) {
  const int n = lat.nodes_per_axis();
  const double h = lat.spacing();
  auto lo_index = [&](double x) { return std::clamp(static_cast<int>(std::floor((x + lat.half_width()) / h)), 0, n - 2); };
  const int i0 = lo_index(c[0] - r), i1 = lo_index(c[0] + r);
  if (lat.dim() == 1) {
    for (int i = i0; i <= i1; ++i) {
      const double a = std::max(lat.coordinate(i), c[0] - r), b = std::min(lat.coordinate(i + 1), c[0] + r);
      if (b <= a) continue;
      const double mid = 0.5 * (a + b);
      visit(i, 0, b - a, (mid - lat.coordinate(i)) / h, 0.0);
    }
    return;
  }
  const int j0 = lo_index(c[1] - r), j1 = lo_index(c[1] + r);
  for (int j = j0; j <= j1; ++j)
    for (int i = i0; i <= i1; ++i) {
      const double x0 = lat.coordinate(i) - c[0], x1 = lat.coordinate(i + 1) - c[0];
      const double y0 = lat.coordinate(j) - c[1], y1 = lat.coordinate(j + 1) - c[1];
      const double far = std::hypot(std::max(std::abs(x0), std::abs(x1)), std::max(std::abs(y0), std::abs(y1)));
      if (far <= r) {
        visit(i, j, h * h, 0.5, 0.5);
        continue;
      }
      const double area = rect_disc_area(x0, x1, y0, y1, r);
      if (area <= 0.0) continue;
      double sx = 0.0, sy = 0.0;
      int hits = 0;
      for (int q = 0; q < kCutSubsamples; ++q)
        for (int p = 0; p < kCutSubsamples; ++p) {
          const double tx = (p + 0.5) / kCutSubsamples, ty = (q + 0.5) / kCutSubsamples;
          if (std::hypot(x0 + tx * h, y0 + ty * h) < r) {
            sx += tx;
            sy += ty;
            ++hits;
          }
        }
      if (hits == 0) {
        sx = sy = 0.5;
        hits = 1;
      }
      visit(i, j, area, sx / hits, sy / hits);
    }
}

struct CellEval {
  double value, g1, g2;
};

CellEval cell_eval(const ScalarField& f, int i, int j, double tx, double ty) {
  const Lattice& lat = f.lattice;
  const double h = lat.spacing();
  const auto& v = f.values;
  if (lat.dim() == 1) {
    const double a = v[lat.flat(i)], b = v[lat.flat(i + 1)];
    return {(1.0 - tx) * a + tx * b, (b - a) / h, 0.0};
  }
  const double v00 = v[lat.flat(i, j)], v10 = v[lat.flat(i + 1, j)];
  const double v01 = v[lat.flat(i, j + 1)], v11 = v[lat.flat(i + 1, j + 1)];
  return {(1.0 - ty) * ((1.0 - tx) * v00 + tx * v10) + ty * ((1.0 - tx) * v01 + tx * v11),
          ((1.0 - ty) * (v10 - v00) + ty * (v11 - v01)) / h, ((1.0 - tx) * (v01 - v00) + tx * (v11 - v10)) / h};
}

bool is_weiss_forces(const std::vector<double>& f) {
  return f.size() == 3 && f[0] == 1.0 && f[1] == 0.0 && f[2] == -1.0;
}

}  // namespace

int sphere_samples(const Lattice& lat, double radius) {
  return std::max(64, static_cast<int>(std::ceil(2.0 * std::numbers::pi * radius / lat.spacing())));
}

double ball_integral(const ScalarField& f, const Point& center, double radius) {
  require_ball_in_hull(f.lattice, center, radius);
  double total = 0.0;
  for_each_cell(f.lattice, center, radius, [&](int i, int j, double wgt, double tx, double ty) {
    total += wgt * cell_eval(f, i, j, tx, ty).value;
  });
  return total;
}

double sphere_integral(const ScalarField& f, const Point& center, double radius) {
  const Lattice& lat = f.lattice;
  if (lat.dim() == 1) {
    const auto t = circle_trace(f, center, radius, 2);
    return t[0] + t[1];
  }
  const int m = sphere_samples(lat, radius);
  const auto t = circle_trace(f, center, radius, m);
  double s = 0.0;
  for (double v : t) s += v;
  return s * 2.0 * std::numbers::pi * radius / m;
}

namespace {

// Sum over membranes of the squared traces, integrated over the sphere.
double sphere_sum_squares(const std::vector<std::vector<double>>& traces, const Lattice& lat, double radius) {
  const std::size_t m = traces.front().size();
  double s = 0.0;
  for (std::size_t j = 0; j < m; ++j)
    for (const auto& t : traces) s += t[j] * t[j];
  if (lat.dim() == 1) return s;
  return s * 2.0 * std::numbers::pi * radius / static_cast<double>(m);
}

}  // namespace

double weiss_at(const MembraneStack& stack, const Point& center, double radius) {
  if (!is_weiss_forces(stack.forces)) throw std::invalid_argument("Weiss energy needs three membranes with forces (1, 0, -1)");
  const Lattice& lat = stack.lattice();
  require_ball_in_hull(lat, center, radius);
  double volume = 0.0;
  for_each_cell(lat, center, radius, [&](int i, int j, double wgt, double tx, double ty) {
    double dens = 0.0;
    for (int m = 0; m < 3; ++m) {
      const CellEval e = cell_eval(stack.fields[static_cast<std::size_t>(m)], i, j, tx, ty);
      dens += 0.5 * (e.g1 * e.g1 + e.g2 * e.g2) + stack.forces[static_cast<std::size_t>(m)] * e.value;
    }
    volume += wgt * dens;
  });
  const int samples = lat.dim() == 1 ? 2 : sphere_samples(lat, radius);
  std::vector<std::vector<double>> traces;
  for (const auto& f : stack.fields) traces.push_back(circle_trace(f, center, radius, samples));
  const double boundary = sphere_sum_squares(traces, lat, radius);
  const int d = lat.dim();
  return volume / std::pow(radius, d + 2) - boundary / std::pow(radius, d + 3);
}

void judge_monotone(WeissSeries& s, double spacing) {
  s.slack = kMonotoneSlack * spacing;
  s.worst_drop = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < s.values.size(); ++i) s.worst_drop = std::max(s.worst_drop, s.values[i] - s.values[i + 1]);
  if (s.values.size() < 2) s.worst_drop = 0.0;
  s.monotone = s.worst_drop <= s.slack;
}

namespace {

void check_radii(const std::vector<double>& radii) {
  if (radii.empty()) throw std::invalid_argument("radii list is empty");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0)) throw std::invalid_argument("radii must be positive");
    if (i > 0 && !(radii[i] > radii[i - 1])) throw std::invalid_argument("radii must be strictly increasing");
  }
}

}  // namespace

WeissSeries weiss_series(const MembraneStack& stack, const Point& center, const std::vector<double>& radii) {
  check_radii(radii);
  WeissSeries s;
  s.center = center;
  s.radii = radii;
  s.kind = SeriesKind::Weiss;
  for (double r : radii) s.values.push_back(weiss_at(stack, center, r));
  judge_monotone(s, stack.lattice().spacing());
  return s;
}

WeissSeries monneau_series(const MembraneStack& stack, const std::vector<SymMatrix>& parabolas, const Point& center,
                           const std::vector<double>& radii) {
  check_radii(radii);
  const int N = stack.count();
  const Lattice& lat = stack.lattice();
  if (static_cast<int>(parabolas.size()) != N) throw std::invalid_argument("one parabola per membrane required");
  for (int m = 0; m < N; ++m) {
    const SymMatrix& A = parabolas[static_cast<std::size_t>(m)];
    if (A.dim() != lat.dim()) throw std::invalid_argument("parabola dimension mismatch");
    if (std::abs(A.trace() - stack.forces[static_cast<std::size_t>(m)]) > kPsdTolerance)
      throw std::invalid_argument("parabola trace must equal the membrane force");
    if (m + 1 < N && (A - parabolas[static_cast<std::size_t>(m + 1)]).min_eigenvalue() < -kPsdTolerance)
      throw std::invalid_argument("parabola stack is not ordered");
  }
  WeissSeries s;
  s.center = center;
  s.radii = radii;
  s.kind = SeriesKind::Monneau;
  const int d = lat.dim();
  // Nodal differences u_k - v_k, interpolated as one field: exact samples of
  // the parabola stack then give M = 0 exactly instead of an interpolation
  // error of v scaled by r^-(d+3).
  std::vector<ScalarField> gaps;
  for (int m = 0; m < N; ++m) {
    const SymMatrix& A = parabolas[static_cast<std::size_t>(m)];
    ScalarField g = stack.fields[static_cast<std::size_t>(m)];
    for (std::size_t k = 0; k < lat.node_count(); ++k) {
      const Point x = lat.point(k);
      const double y[2] = {x[0] - center[0], x[1] - center[1]};
      g.values[k] -= 0.5 * A.quad(std::span<const double>(y, static_cast<std::size_t>(d)));
    }
    gaps.push_back(std::move(g));
  }
  for (double r : radii) {
    require_ball_in_hull(lat, center, r);
    const int samples = d == 1 ? 2 : sphere_samples(lat, r);
    std::vector<std::vector<double>> diffs;
    for (const ScalarField& g : gaps) diffs.push_back(circle_trace(g, center, r, samples));
    s.values.push_back(sphere_sum_squares(diffs, lat, r) / std::pow(r, d + 3));
  }
  judge_monotone(s, lat.spacing());
  return s;
}

double EnergyTable::ratio(int k) const {
  const double w[] = {W0, W1, W2, W3};
  return w[k] / W0;
}

double default_table_spacing(int dim) { return dim == 1 ? 1.0 / 512.0 : 1.0 / 128.0; }

namespace {

SymMatrix random_psd_trace(int dim, double trace, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  SymMatrix g(dim);
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j) g.set(i, j, uni(rng));
  // g g^T is PSD; normalise its trace.
  SymMatrix p(dim);
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j) {
      double s = 0.0;
      for (int k = 0; k < dim; ++k) s += g(i, k) * g(j, k);
      p.set(i, j, s);
    }
  return p * (trace / p.trace());
}

Direction random_unit(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<double> c(static_cast<std::size_t>(dim));
  for (double& x : c) x = nd(rng);
  return Direction::unit(c);
}

}  // namespace

std::vector<ProfileSpec> random_hybrids(int dim, unsigned long long seed, int count) {
  std::mt19937_64 rng(seed);
  std::vector<ProfileSpec> out;
  for (int k = 0; k < count; ++k) {
    const Direction e = random_unit(dim, rng);
    // 3B - e e^T = 3M with M >= 0, trace(M) = 2/3.
    const SymMatrix B = SymMatrix::outer(e) * (1.0 / 3.0) + random_psd_trace(dim, 2.0 / 3.0, rng);
    if (k % 2 == 0)
      out.emplace_back(HybridEB{e, B});
    else
      out.emplace_back(HybridBE{B, e});
  }
  return out;
}

std::vector<ProfileSpec> random_parabolas(int dim, unsigned long long seed, int count) {
  std::mt19937_64 rng(seed);
  std::vector<ProfileSpec> out;
  for (int k = 0; k < count; ++k) {
    // 2A + B = P >= 0 and A + 2B = -Q <= 0 with trace(P) = trace(Q) = 1.
    const SymMatrix P = random_psd_trace(dim, 1.0, rng);
    const SymMatrix Q = random_psd_trace(dim, 1.0, rng);
    out.emplace_back(Parabola{(P * 2.0 + Q) * (1.0 / 3.0), (P + Q * 2.0) * (-1.0 / 3.0)});
  }
  return out;
}

EnergyTable energy_table(int dim, double spacing, unsigned long long seed, int draws) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("energy table needs dim 1 or 2");
  if (spacing <= 0.0) spacing = default_table_spacing(dim);
  if (draws < 1) throw std::invalid_argument("need at least one random draw per family");
  const Lattice lat(dim, 1.0, spacing);
  std::vector<double> e1(static_cast<std::size_t>(dim), 0.0);
  e1[0] = 1.0;
  auto energy = [&](const ProfileSpec& spec) { return weiss_at(sample_stack(spec, lat), {0.0, 0.0}, 1.0); };
  EnergyTable t;
  t.dim = dim;
  t.spacing = spacing;
  t.W0 = energy(StableHalf{Direction(e1)});
  t.W1 = energy(UnstableHalf{Direction(e1)});
  for (const auto& s : random_hybrids(dim, seed, draws)) t.hybrid_values.push_back(energy(s));
  for (const auto& s : random_parabolas(dim, seed + 1, draws)) t.parabola_values.push_back(energy(s));
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  auto spread = [](const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi - *lo;
  };
  t.W2 = mean(t.hybrid_values);
  t.W3 = mean(t.parabola_values);
  t.hybrid_spread = spread(t.hybrid_values);
  t.parabola_spread = spread(t.parabola_values);
  return t;
}

void write_series_csv(std::ostream& os, const WeissSeries& s) {
  os << "r,value,kind\n";
  for (std::size_t i = 0; i < s.radii.size(); ++i)
    os << format_number(s.radii[i]) << ',' << format_number(s.values[i]) << ',' << kind_name(s.kind) << '\n';
}

}  // namespace membrane
