#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace membrane {

/// Coordinates in the plane; the second entry is ignored on 1D lattices.
using Point = std::array<double, 2>;

/// Uniform node lattice on the cube [-R, R]^d, d in {1, 2}.
///
/// The node count per axis is always odd so that the origin is a node, and
/// the coordinates of the first, middle and last node are exactly -R, 0, R.
class Lattice {
 public:
  Lattice(int dim, double half_width, double spacing);

  int dim() const { return dim_; }
  double half_width() const { return half_width_; }
  double spacing() const { return spacing_; }
  int nodes_per_axis() const { return n_; }
  std::size_t node_count() const;
  int center_index() const { return n_ / 2; }

  double coordinate(int i) const;
  /// Nearest axis index for a coordinate; no bounds check.
  int nearest_index(double x) const;

  std::size_t flat(int i, int j = 0) const {
    return static_cast<std::size_t>(i) + static_cast<std::size_t>(n_) * static_cast<std::size_t>(j);
  }
  std::array<int, 2> unflat(std::size_t k) const;
  Point point(std::size_t k) const;

  /// Inclusive hull test with a relative tolerance of 1e-12.
  bool contains(const Point& p) const;

  bool operator==(const Lattice& o) const {
    return dim_ == o.dim_ && n_ == o.n_ && half_width_ == o.half_width_;
  }

 private:
  int dim_;
  double half_width_;
  double spacing_;
  int n_;
};

Lattice make_lattice(int dim, double half_width, double spacing);

/// Node values on a lattice plus an interior mask.
///
/// Values exist on every node. Nodes outside the mask carry Dirichlet data
/// (solver inputs) or exact samples; only masked nodes are unknowns.
struct ScalarField {
  Lattice lattice;
  std::vector<double> values;
  std::vector<std::uint8_t> mask;

  explicit ScalarField(const Lattice& lat, double fill = 0.0);
  ScalarField(const Lattice& lat, std::vector<double> vals, std::vector<std::uint8_t> m);

  double& operator[](std::size_t k) { return values[k]; }
  double operator[](std::size_t k) const { return values[k]; }
  bool inside(std::size_t k) const { return mask[k] != 0; }
  std::size_t size() const { return values.size(); }
};

/// Discrete ball {|x - center| < radius} as a node mask.
std::vector<std::uint8_t> ball_mask(const Lattice& lat, double radius, const Point& center = {0.0, 0.0});

/// Nodes outside the mask with a (diagonal included) neighbour inside it.
std::vector<std::uint8_t> boundary_layer(const Lattice& lat, std::span<const std::uint8_t> mask);

template <class F>
ScalarField sample(const Lattice& lat, F&& f) {
  ScalarField out(lat);
  for (std::size_t k = 0; k < out.size(); ++k) out.values[k] = f(lat.point(k));
  return out;
}

/// Multilinear interpolation; throws std::out_of_range outside the hull.
double interpolate(const ScalarField& field, const Point& p);

/// Samples on the circle |x - center| = radius at equispaced angles (d = 2),
/// or at center -/+ radius (d = 1, `samples` must then be 2).
std::vector<double> circle_trace(const ScalarField& field, const Point& center, double radius, int samples);

/// Angles used by circle_trace for a given sample count.
double trace_angle(int j, int samples);

/// CSV dump `x1[,x2],v` over masked nodes in row-major order.
void write_field_csv(std::ostream& os, const ScalarField& field);

/// Shared number formatting for every CSV/JSON report (12 significant digits).
std::string format_number(double v);

}  // namespace membrane
