#include "membrane/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace membrane {

Lattice::Lattice(int dim, double half_width, double spacing)
    : dim_(dim), half_width_(half_width), spacing_(spacing), n_(0) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("lattice dimension must be 1 or 2");
  if (!(spacing > 0.0)) throw std::invalid_argument("lattice spacing must be positive");
  if (!(half_width > 0.0)) throw std::invalid_argument("lattice half width must be positive");
  const double cells = 2.0 * half_width / spacing;
  const double rounded = std::round(cells);
  if (std::abs(cells - rounded) > 1e-9 * std::max(1.0, cells) || rounded < 2.0)
    throw std::invalid_argument("2*half_width/spacing must be an even integer");
  const auto c = static_cast<long long>(rounded);
  if (c % 2 != 0) throw std::invalid_argument("2*half_width/spacing must be an even integer");
  n_ = static_cast<int>(c) + 1;
}

std::size_t Lattice::node_count() const {
  const auto n = static_cast<std::size_t>(n_);
  return dim_ == 1 ? n : n * n;
}

double Lattice::coordinate(int i) const {
  const int c = center_index();
  return half_width_ * static_cast<double>(i - c) / static_cast<double>(c);
}

int Lattice::nearest_index(double x) const {
  return static_cast<int>(std::lround(x / spacing_)) + center_index();
}

std::array<int, 2> Lattice::unflat(std::size_t k) const {
  const auto n = static_cast<std::size_t>(n_);
  return {static_cast<int>(k % n), static_cast<int>(k / n)};
}

Point Lattice::point(std::size_t k) const {
  const auto [i, j] = unflat(k);
  return {coordinate(i), dim_ == 2 ? coordinate(j) : 0.0};
}

bool Lattice::contains(const Point& p) const {
  const double lim = half_width_ * (1.0 + 1e-12);
  if (std::abs(p[0]) > lim) return false;
  return dim_ == 1 || std::abs(p[1]) <= lim;
}

Lattice make_lattice(int dim, double half_width, double spacing) { return Lattice(dim, half_width, spacing); }

ScalarField::ScalarField(const Lattice& lat, double fill)
    : lattice(lat), values(lat.node_count(), fill), mask(ball_mask(lat, lat.half_width())) {}

ScalarField::ScalarField(const Lattice& lat, std::vector<double> vals, std::vector<std::uint8_t> m)
    : lattice(lat), values(std::move(vals)), mask(std::move(m)) {
  if (values.size() != lat.node_count() || mask.size() != lat.node_count())
    throw std::invalid_argument("field storage does not match lattice node count");
}

std::vector<std::uint8_t> ball_mask(const Lattice& lat, double radius, const Point& center) {
  std::vector<std::uint8_t> m(lat.node_count(), 0);
  for (std::size_t k = 0; k < m.size(); ++k) {
    const Point p = lat.point(k);
    const double dx = p[0] - center[0];
    const double dy = lat.dim() == 2 ? p[1] - center[1] : 0.0;
    // Nodes that sit on the sphere up to rounding belong to the boundary layer.
    m[k] = std::sqrt(dx * dx + dy * dy) < radius * (1.0 - 1e-12) ? 1 : 0;
  }
  return m;
}

std::vector<std::uint8_t> boundary_layer(const Lattice& lat, std::span<const std::uint8_t> mask) {
  const int n = lat.nodes_per_axis();
  std::vector<std::uint8_t> layer(lat.node_count(), 0);
  const int jmax = lat.dim() == 2 ? n : 1;
  for (int j = 0; j < jmax; ++j) {
    for (int i = 0; i < n; ++i) {
      const std::size_t k = lat.flat(i, j);
      if (mask[k]) continue;
      bool near = false;
      for (int dj = -1; dj <= 1 && !near; ++dj) {
        if (lat.dim() == 1 && dj != 0) continue;
        for (int di = -1; di <= 1 && !near; ++di) {
          const int ii = i + di, jj = j + dj;
          if (ii < 0 || ii >= n || jj < 0 || jj >= jmax) continue;
          near = mask[lat.flat(ii, jj)] != 0;
        }
      }
      layer[k] = near ? 1 : 0;
    }
  }
  return layer;
}

namespace {

// Cell index and local coordinate in [0, 1] along one axis.
std::pair<int, double> locate(const Lattice& lat, double x) {
  const int n = lat.nodes_per_axis();
  const double s = (x + lat.half_width()) / lat.spacing();
  int i = static_cast<int>(std::floor(s));
  i = std::clamp(i, 0, n - 2);
  double t = s - static_cast<double>(i);
  t = std::clamp(t, 0.0, 1.0);
  return {i, t};
}

}  // namespace

double interpolate(const ScalarField& field, const Point& p) {
  const Lattice& lat = field.lattice;
  if (!lat.contains(p)) throw std::out_of_range("interpolation point outside the lattice hull");
  const auto [i, tx] = locate(lat, p[0]);
  if (lat.dim() == 1) {
    return (1.0 - tx) * field.values[lat.flat(i)] + tx * field.values[lat.flat(i + 1)];
  }
  const auto [j, ty] = locate(lat, p[1]);
  const double v00 = field.values[lat.flat(i, j)];
  const double v10 = field.values[lat.flat(i + 1, j)];
  const double v01 = field.values[lat.flat(i, j + 1)];
  const double v11 = field.values[lat.flat(i + 1, j + 1)];
  return (1.0 - ty) * ((1.0 - tx) * v00 + tx * v10) + ty * ((1.0 - tx) * v01 + tx * v11);
}

double trace_angle(int j, int samples) {
  return 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(samples);
}

std::vector<double> circle_trace(const ScalarField& field, const Point& center, double radius, int samples) {
  const Lattice& lat = field.lattice;
  if (!(radius > 0.0)) throw std::invalid_argument("trace radius must be positive");
  std::vector<double> out;
  if (lat.dim() == 1) {
    if (samples != 2) throw std::invalid_argument("1D traces have exactly two samples");
    const Point lo{center[0] - radius, 0.0}, hi{center[0] + radius, 0.0};
    if (!lat.contains(lo) || !lat.contains(hi)) throw std::out_of_range("trace leaves the lattice hull");
    out = {interpolate(field, lo), interpolate(field, hi)};
    return out;
  }
  if (samples < 4) throw std::invalid_argument("2D traces need at least 4 samples");
  const double lim = lat.half_width() * (1.0 + 1e-12);
  if (std::abs(center[0]) + radius > lim || std::abs(center[1]) + radius > lim)
    throw std::out_of_range("trace leaves the lattice hull");
  out.reserve(static_cast<std::size_t>(samples));
  for (int j = 0; j < samples; ++j) {
    const double th = trace_angle(j, samples);
    out.push_back(interpolate(field, {center[0] + radius * std::cos(th), center[1] + radius * std::sin(th)}));
  }
  return out;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (v == 0.0) return "0";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void write_field_csv(std::ostream& os, const ScalarField& field) {
  const Lattice& lat = field.lattice;
  os << (lat.dim() == 2 ? "x1,x2,v\n" : "x1,v\n");
  for (std::size_t k = 0; k < field.size(); ++k) {
    if (!field.inside(k)) continue;
    const Point p = lat.point(k);
    os << format_number(p[0]) << ',';
    if (lat.dim() == 2) os << format_number(p[1]) << ',';
    os << format_number(field.values[k]) << '\n';
  }
}

}  // namespace membrane
