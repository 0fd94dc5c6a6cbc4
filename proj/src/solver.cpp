#include "membrane/solver.hpp"
#include "membrane/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace membrane {

ScalarField MembraneStack::u() const { return fields.front(); }

ScalarField MembraneStack::w() const {
  ScalarField out = fields.back();
  for (double& v : out.values) v = -v;
  return out;
}

MembraneStack sample_stack(const ProfileSpec& spec, const Lattice& lat, std::vector<std::uint8_t> mask) {
  const ValidationReport r = validate_spec(spec);
  if (!r.ok()) throw std::invalid_argument("invalid " + profile_name(spec) + " profile: " + r.failures());
  if (!is_triple(spec)) throw std::invalid_argument(profile_name(spec) + " is not a membrane triple");
  MembraneStack s;
  s.forces = {1.0, 0.0, -1.0};
  for (int m = 0; m < 3; ++m) s.fields.emplace_back(lat, std::vector<double>(lat.node_count()), mask);
  for (std::size_t k = 0; k < lat.node_count(); ++k) {
    const Point p = lat.point(k);
    const Triple t = eval_triple(spec, std::span<const double>(p.data(), static_cast<std::size_t>(lat.dim())));
    s.fields[0].values[k] = t.u1;
    s.fields[1].values[k] = t.u2;
    s.fields[2].values[k] = t.u3;
  }
  return s;
}

MembraneStack sample_stack(const ProfileSpec& spec, const Lattice& lat) {
  return sample_stack(spec, lat, ball_mask(lat, lat.half_width()));
}

MembraneProblem MembraneProblem::from_stack(const MembraneStack& data) {
  MembraneProblem p{data.forces, data.lattice(), data.mask(), {}};
  for (const auto& f : data.fields) p.boundary.push_back(f.values);
  return p;
}

std::vector<double> pava_decreasing(std::span<const double> values, std::span<const double> weights) {
  if (values.empty() || values.size() != weights.size())
    throw std::invalid_argument("pava needs equal, non-zero lengths");
  for (double w : weights)
    if (!(w > 0.0)) throw std::invalid_argument("pava weights must be positive");
  struct Block {
    double sum, weight;
    std::size_t len;
  };
  std::vector<Block> blocks;
  for (std::size_t i = 0; i < values.size(); ++i) {
    blocks.push_back({values[i] * weights[i], weights[i], 1});
    // Pool while the previous block mean is below the new one.
    while (blocks.size() > 1) {
      const Block& b = blocks.back();
      const Block& a = blocks[blocks.size() - 2];
      if (a.sum / a.weight >= b.sum / b.weight) break;
      const Block merged{a.sum + b.sum, a.weight + b.weight, a.len + b.len};
      blocks.pop_back();
      blocks.back() = merged;
    }
  }
  std::vector<double> out;
  out.reserve(values.size());
  for (const Block& b : blocks) out.insert(out.end(), b.len, b.sum / b.weight);
  return out;
}

namespace {

// Equal-weight PAVA in place; `sum` and `len` are scratch of size >= n.
void pava_inplace(double* x, int n, double* sum, int* len) {
  int top = 0;
  for (int i = 0; i < n; ++i) {
    sum[top] = x[i];
    len[top] = 1;
    ++top;
    while (top > 1 && sum[top - 2] * len[top - 1] < sum[top - 1] * len[top - 2]) {
      sum[top - 2] += sum[top - 1];
      len[top - 2] += len[top - 1];
      --top;
    }
  }
  int pos = 0;
  for (int b = 0; b < top; ++b) {
    const double mean = sum[b] / len[b];
    for (int r = 0; r < len[b]; ++r) x[pos++] = mean;
  }
}

bool on_lattice_edge(const Lattice& lat, std::size_t k) {
  const auto [i, j] = lat.unflat(k);
  const int n = lat.nodes_per_axis();
  if (i == 0 || i == n - 1) return true;
  return lat.dim() == 2 && (j == 0 || j == n - 1);
}

// Fills masked nodes by linear interpolation between the nearest exterior nodes
// along rows (and columns in 2D, averaged).
void interpolate_interior(const Lattice& lat, const std::vector<std::uint8_t>& mask, std::vector<double>& v) {
  const int n = lat.nodes_per_axis();
  const int rows = lat.dim() == 2 ? n : 1;
  std::vector<double> row_fill(v.size(), 0.0), col_fill(v.size(), 0.0);
  auto fill_line = [&](auto index, std::vector<double>& out) {
    int i = 0;
    while (i < n) {
      if (!mask[index(i)]) {
        ++i;
        continue;
      }
      int e = i;
      while (e + 1 < n && mask[index(e + 1)]) ++e;
      const double lo = v[index(i - 1)], hi = v[index(e + 1)];
      const double span = static_cast<double>(e + 2 - i);
      for (int q = i; q <= e; ++q) {
        const double t = static_cast<double>(q - i + 1) / span;
        out[index(q)] = (1.0 - t) * lo + t * hi;
      }
      i = e + 1;
    }
  };
  for (int j = 0; j < rows; ++j) fill_line([&](int i) { return lat.flat(i, j); }, row_fill);
  if (lat.dim() == 2)
    for (int i = 0; i < n; ++i) fill_line([&](int j) { return lat.flat(i, j); }, col_fill);
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!mask[k]) continue;
    v[k] = lat.dim() == 2 ? 0.5 * (row_fill[k] + col_fill[k]) : row_fill[k];
  }
}

double default_omega(const Lattice& lat) {
  const double r = lat.half_width();
  const double lambda = lat.dim() == 1 ? std::pow(M_PI / (2.0 * r), 2) : std::pow(2.404825557695773 / r, 2);
  return 2.0 / (1.0 + lat.spacing() * std::sqrt(lambda / lat.dim()));
}

constexpr std::size_t kBlock1d = 512;

// Chunks: lattice rows in 2D, fixed-size blocks in 1D. Never depends on workers.
struct Chunks {
  std::vector<std::size_t> begin, end;
};

Chunks make_chunks(const Lattice& lat) {
  Chunks c;
  const std::size_t total = lat.node_count();
  const std::size_t step = lat.dim() == 2 ? static_cast<std::size_t>(lat.nodes_per_axis()) : kBlock1d;
  for (std::size_t b = 0; b < total; b += step) {
    c.begin.push_back(b);
    c.end.push_back(std::min(total, b + step));
  }
  return c;
}

// Shared red-black engine. `project` maps N candidate node values onto the
// feasible set in place (PAVA for ordered stacks, clamp for the obstacle).
class Engine {
 public:
  Engine(const Lattice& lat, const std::vector<std::uint8_t>& mask, std::vector<double> forces,
         std::vector<std::vector<double>>& u, int workers)
      : lat_(lat), mask_(mask), forces_(std::move(forces)), u_(u), pool_(workers), chunks_(make_chunks(lat)) {
    const int n = lat.nodes_per_axis();
    for (std::size_t c = 0; c < chunks_.begin.size(); ++c)
      for (int color = 0; color < 2; ++color) {
        std::vector<std::size_t> nodes;
        for (std::size_t k = chunks_.begin[c]; k < chunks_.end[c]; ++k) {
          if (!mask[k]) continue;
          const auto [i, j] = lat.unflat(k);
          if ((i + j) % 2 == color) nodes.push_back(k);
        }
        color_nodes_[color].push_back(std::move(nodes));
      }
    stride_ = static_cast<std::size_t>(n);
  }

  template <class Project>
  double sweep(double omega, Project project) {
    const int nchunks = static_cast<int>(chunks_.begin.size());
    std::vector<double> chunk_max(static_cast<std::size_t>(nchunks), 0.0);
    const int N = static_cast<int>(forces_.size());
    const int d = lat_.dim();
    const double h2 = lat_.spacing() * lat_.spacing();
    for (int color = 0; color < 2; ++color) {
      pool_.run(nchunks, [&](int c) {
        std::vector<double> vstar(N), old(N), p(N), x(N), sum(N);
        std::vector<int> len(N);
        double local = chunk_max[static_cast<std::size_t>(c)];
        for (std::size_t k : color_nodes_[color][static_cast<std::size_t>(c)]) {
          for (int m = 0; m < N; ++m) {
            const std::vector<double>& v = u_[static_cast<std::size_t>(m)];
            double s = v[k - 1] + v[k + 1];
            if (d == 2) s += v[k - stride_] + v[k + stride_];
            vstar[m] = (s - h2 * forces_[static_cast<std::size_t>(m)]) / (2.0 * d);
            old[m] = v[k];
            p[m] = vstar[m];
          }
          project(p.data(), N, sum.data(), len.data());
          if (omega != 1.0) {
            double dx = 0.0, dv = 0.0;
            for (int m = 0; m < N; ++m) x[m] = old[m] + omega * (p[m] - old[m]);
            project(x.data(), N, sum.data(), len.data());
            for (int m = 0; m < N; ++m) {
              dx += (x[m] - vstar[m]) * (x[m] - vstar[m]);
              dv += (old[m] - vstar[m]) * (old[m] - vstar[m]);
            }
            // The node energy is a multiple of |x - v*|^2, so this keeps it monotone.
            if (dx <= dv) p = x;
          }
          for (int m = 0; m < N; ++m) {
            local = std::max(local, std::abs(p[m] - old[m]));
            u_[static_cast<std::size_t>(m)][k] = p[m];
          }
        }
        chunk_max[static_cast<std::size_t>(c)] = local;
      });
    }
    return *std::max_element(chunk_max.begin(), chunk_max.end());
  }

  double energy() {
    const int nchunks = static_cast<int>(chunks_.begin.size());
    std::vector<double> grad(static_cast<std::size_t>(nchunks), 0.0), force(static_cast<std::size_t>(nchunks), 0.0);
    pool_.run(nchunks, [&](int c) {
      chunk_energy(c, grad[static_cast<std::size_t>(c)], force[static_cast<std::size_t>(c)]);
    });
    return combine(grad, force);
  }

  void chunk_energy(int c, double& grad, double& force) const {
    const int n = lat_.nodes_per_axis();
    const int d = lat_.dim();
    for (std::size_t k = chunks_.begin[static_cast<std::size_t>(c)]; k < chunks_.end[static_cast<std::size_t>(c)]; ++k) {
      const auto [i, j] = lat_.unflat(k);
      const bool in = mask_[k] != 0;
      for (std::size_t m = 0; m < forces_.size(); ++m) {
        const std::vector<double>& v = u_[m];
        if (i + 1 < n && (in || mask_[k + 1])) grad += 0.5 * (v[k + 1] - v[k]) * (v[k + 1] - v[k]);
        if (d == 2 && j + 1 < n && (in || mask_[k + stride_]))
          grad += 0.5 * (v[k + stride_] - v[k]) * (v[k + stride_] - v[k]);
        if (in) force += forces_[m] * v[k];
      }
    }
  }

  double combine(const std::vector<double>& grad, const std::vector<double>& force) const {
    double g = 0.0, f = 0.0;
    for (double x : grad) g += x;
    for (double x : force) f += x;
    const double h = lat_.spacing();
    return std::pow(h, lat_.dim() - 2) * g + std::pow(h, lat_.dim()) * f;
  }

  std::size_t chunk_count() const { return chunks_.begin.size(); }

 private:
  const Lattice& lat_;
  const std::vector<std::uint8_t>& mask_;
  std::vector<double> forces_;
  std::vector<std::vector<double>>& u_;
  WorkerPool pool_;
  Chunks chunks_;
  std::vector<std::vector<std::size_t>> color_nodes_[2];
  std::size_t stride_ = 0;
};

template <class Project>
SolveReport iterate(Engine& engine, const Lattice& lat, double tolerance, int max_sweeps, double omega,
                    Project project) {
  SolveReport rep;
  rep.omega = omega > 0.0 ? omega : default_omega(lat);
  if (max_sweeps < 0) max_sweeps = 200 * lat.nodes_per_axis();
  rep.max_update = std::numeric_limits<double>::infinity();
  while (rep.sweeps < max_sweeps) {
    rep.max_update = engine.sweep(rep.omega, project);
    ++rep.sweeps;
    rep.energy_history.push_back(engine.energy());
    if (rep.max_update < tolerance) {
      rep.converged = true;
      break;
    }
  }
  rep.energy = engine.energy();
  return rep;
}

void check_mask(const Lattice& lat, const std::vector<std::uint8_t>& mask) {
  if (mask.size() != lat.node_count()) throw std::invalid_argument("mask size does not match the lattice");
  for (std::size_t k = 0; k < mask.size(); ++k)
    if (mask[k] && on_lattice_edge(lat, k)) throw std::invalid_argument("masked node on the lattice edge");
}

}  // namespace

void validate_problem(const MembraneProblem& pb) {
  const std::size_t N = pb.forces.size();
  if (N < 2) throw std::invalid_argument("need at least two membranes");
  for (std::size_t m = 0; m + 1 < N; ++m)
    if (!(pb.forces[m] > pb.forces[m + 1])) throw std::invalid_argument("forces must be strictly decreasing");
  if (pb.boundary.size() != N) throw std::invalid_argument("one boundary field per membrane required");
  for (const auto& b : pb.boundary)
    if (b.size() != pb.lattice.node_count()) throw std::invalid_argument("boundary field size mismatch");
  check_mask(pb.lattice, pb.mask);
  if (!(pb.tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
  const auto layer = boundary_layer(pb.lattice, pb.mask);
  for (std::size_t k = 0; k < layer.size(); ++k) {
    if (!layer[k]) continue;
    for (std::size_t m = 0; m < N; ++m) {
      if (!std::isfinite(pb.boundary[m][k])) throw std::invalid_argument("boundary data must be finite");
      if (m + 1 < N && pb.boundary[m][k] < pb.boundary[m + 1][k] - 1e-12)
        throw std::invalid_argument("boundary data violate the membrane ordering");
    }
  }
}

SolveResult solve_membranes(const MembraneProblem& pb) {
  validate_problem(pb);
  const std::size_t N = pb.forces.size();
  std::vector<std::vector<double>> u = pb.boundary;
  for (auto& v : u) interpolate_interior(pb.lattice, pb.mask, v);
  {
    std::vector<double> x(N), sum(N);
    std::vector<int> len(N);
    for (std::size_t k = 0; k < pb.lattice.node_count(); ++k) {
      if (!pb.mask[k]) continue;
      for (std::size_t m = 0; m < N; ++m) x[m] = u[m][k];
      pava_inplace(x.data(), static_cast<int>(N), sum.data(), len.data());
      for (std::size_t m = 0; m < N; ++m) u[m][k] = x[m];
    }
  }
  SolveReport rep;
  {
    Engine engine(pb.lattice, pb.mask, pb.forces, u, pb.workers > 0 ? pb.workers : configured_workers());
    rep = iterate(engine, pb.lattice, pb.tolerance, pb.max_sweeps, pb.omega,
                  [](double* x, int n, double* s, int* l) { pava_inplace(x, n, s, l); });
  }
  SolveResult out;
  out.stack.forces = pb.forces;
  for (auto& v : u) out.stack.fields.emplace_back(pb.lattice, std::move(v), pb.mask);
  out.report = std::move(rep);
  return out;
}

double discrete_energy(const MembraneStack& stack) {
  std::vector<std::vector<double>> u;
  for (const auto& f : stack.fields) u.push_back(f.values);
  Engine engine(stack.lattice(), stack.mask(), stack.forces, u, 1);
  return engine.energy();
}

ObstacleResult solve_obstacle(const ScalarField& boundary, double tolerance, int max_sweeps, double omega) {
  const Lattice& lat = boundary.lattice;
  check_mask(lat, boundary.mask);
  if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
  const auto layer = boundary_layer(lat, boundary.mask);
  for (std::size_t k = 0; k < layer.size(); ++k)
    if (layer[k] && !(boundary.values[k] >= 0.0)) throw std::invalid_argument("obstacle boundary data must be >= 0");
  std::vector<std::vector<double>> u{boundary.values};
  interpolate_interior(lat, boundary.mask, u[0]);
  for (std::size_t k = 0; k < u[0].size(); ++k)
    if (boundary.mask[k]) u[0][k] = std::max(u[0][k], 0.0);
  SolveReport rep;
  {
    Engine engine(lat, boundary.mask, {1.0}, u, configured_workers());
    rep = iterate(engine, lat, tolerance, max_sweeps, omega, [](double* x, int, double*, int*) {
      x[0] = std::max(x[0], 0.0);
    });
  }
  return {ScalarField(lat, std::move(u[0]), boundary.mask), std::move(rep)};
}

double discrete_laplacian(const ScalarField& f, std::size_t k) {
  const Lattice& lat = f.lattice;
  const auto stride = static_cast<std::size_t>(lat.nodes_per_axis());
  const auto& v = f.values;
  double s = v[k - 1] + v[k + 1] - 2.0 * v[k];
  if (lat.dim() == 2) s += v[k - stride] + v[k + stride] - 2.0 * v[k];
  return s / (lat.spacing() * lat.spacing());
}

std::vector<std::uint8_t> change_band(const Lattice& lat, std::span<const std::uint8_t> mask,
                                      std::span<const std::uint32_t> label, double radius) {
  const int n = lat.nodes_per_axis();
  const int reach = static_cast<int>(std::floor(radius + 1e-9));
  const int jmax = lat.dim() == 2 ? n : 1;
  // Mark nodes adjacent to a label change first, then dilate by the radius.
  std::vector<std::uint8_t> edge(lat.node_count(), 0), band(lat.node_count(), 0);
  for (int j = 0; j < jmax; ++j)
    for (int i = 0; i < n; ++i) {
      const std::size_t k = lat.flat(i, j);
      if (!mask[k]) continue;
      if (i + 1 < n && mask[k + 1] && label[k + 1] != label[k]) edge[k] = edge[k + 1] = 1;
      if (lat.dim() == 2 && j + 1 < n) {
        const std::size_t up = lat.flat(i, j + 1);
        if (mask[up] && label[up] != label[k]) edge[k] = edge[up] = 1;
      }
    }
  for (int j = 0; j < jmax; ++j)
    for (int i = 0; i < n; ++i) {
      if (!edge[lat.flat(i, j)]) continue;
      for (int dj = -reach; dj <= reach; ++dj) {
        if (lat.dim() == 1 && dj != 0) continue;
        for (int di = -reach; di <= reach; ++di) {
          if (di * di + dj * dj > radius * radius + 1e-9) continue;
          const int ii = i + di, jj = j + dj;
          if (ii < 0 || ii >= n || jj < 0 || jj >= jmax) continue;
          band[lat.flat(ii, jj)] = 1;
        }
      }
    }
  return band;
}

ResidualReport residual_report(const MembraneStack& stack, double contact_tolerance) {
  const Lattice& lat = stack.lattice();
  const auto& mask = stack.mask();
  const int N = stack.count();
  if (N > 32) throw std::invalid_argument("at most 32 membranes supported");
  std::vector<std::uint32_t> pattern(lat.node_count(), 0);
  for (std::size_t k = 0; k < lat.node_count(); ++k) {
    if (!mask[k]) continue;
    for (int m = 0; m + 1 < N; ++m) {
      const double gap = stack.fields[static_cast<std::size_t>(m)].values[k] -
                         stack.fields[static_cast<std::size_t>(m + 1)].values[k];
      if (gap < -1e-9) throw std::invalid_argument("membrane ordering violated");
      if (gap <= contact_tolerance) pattern[k] |= 1u << m;
    }
  }
  const auto band = change_band(lat, mask, pattern, 2.0);
  ResidualReport rep;
  rep.residual.assign(lat.node_count(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t k = 0; k < lat.node_count(); ++k) {
    if (!mask[k]) continue;
    if (band[k]) {
      ++rep.excluded;
      continue;
    }
    double worst = 0.0;
    int m = 0;
    while (m < N) {
      int e = m;
      double fsum = stack.forces[static_cast<std::size_t>(m)];
      while (e + 1 < N && (pattern[k] >> e & 1u)) fsum += stack.forces[static_cast<std::size_t>(++e)];
      const double rhs = fsum / (e - m + 1);
      for (int q = m; q <= e; ++q)
        worst = std::max(worst, std::abs(discrete_laplacian(stack.fields[static_cast<std::size_t>(q)], k) - rhs));
      m = e + 1;
    }
    rep.residual[k] = worst;
    rep.max_residual = std::max(rep.max_residual, worst);
    ++rep.checked;
  }
  return rep;
}

MembershipReport pair_membership(const ScalarField& u, const ScalarField& w, const MembershipOptions& opt) {
  if (!(u.lattice == w.lattice)) throw std::invalid_argument("pair fields live on different lattices");
  const Lattice& lat = u.lattice;
  check_mask(lat, u.mask);
  std::vector<std::uint32_t> label(lat.node_count(), 0);
  for (std::size_t k = 0; k < lat.node_count(); ++k) {
    if (u.values[k] - 0.5 * w.values[k] > opt.indicator_tolerance) label[k] |= 1u;
    if (w.values[k] - 0.5 * u.values[k] > opt.indicator_tolerance) label[k] |= 2u;
  }
  const auto band = change_band(lat, u.mask, label, opt.band);
  MembershipReport rep;
  rep.sub_margin = rep.super_margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < lat.node_count(); ++k) {
    if (!u.mask[k] || band[k]) continue;
    if (opt.exclude && (*opt.exclude)[k]) continue;
    const double lu = discrete_laplacian(u, k), lw = discrete_laplacian(w, k);
    const double cu = (label[k] & 1u) ? 1.0 : 0.0, cw = (label[k] & 2u) ? 1.0 : 0.0;
    rep.sub_margin = std::min({rep.sub_margin, lu - cu, lw - cw});
    rep.super_margin = std::min({rep.super_margin, 1.0 - lu, 1.0 - lw});
    ++rep.checked;
  }
  rep.subsolution = rep.sub_margin >= -opt.laplacian_tolerance;
  rep.supersolution = rep.super_margin >= -opt.laplacian_tolerance;
  return rep;
}

}  // namespace membrane
