#include "membrane/grid.hpp"

#include "doctest.h"

#include <cmath>
#include <sstream>
#include <stdexcept>

using namespace membrane;

TEST_CASE("lattice enumeration") {
  const Lattice l1(1, 1.0, 0.5);
  CHECK(l1.node_count() == 5);
  CHECK(l1.coordinate(0) == -1.0);
  CHECK(l1.coordinate(1) == -0.5);
  CHECK(l1.coordinate(2) == 0.0);
  CHECK(l1.coordinate(4) == 1.0);
  CHECK(Lattice(2, 1.0, 0.5).node_count() == 25);
  CHECK_THROWS_AS(Lattice(2, 1.0, 0.3), std::invalid_argument);
  CHECK_THROWS_AS(Lattice(3, 1.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(Lattice(2, 1.0, -0.5), std::invalid_argument);
}

TEST_CASE("lattice endpoints are exact at fine spacing") {
  const Lattice l(2, 1.0, 1.0 / 128);
  CHECK(l.coordinate(0) == -1.0);
  CHECK(l.coordinate(l.center_index()) == 0.0);
  CHECK(l.coordinate(l.nodes_per_axis() - 1) == 1.0);
  const auto ij = l.unflat(l.flat(3, 7));
  CHECK(ij[0] == 3);
  CHECK(ij[1] == 7);
}

TEST_CASE("interpolation") {
  const Lattice l(2, 1.0, 0.5);
  const ScalarField x1 = sample(l, [](const Point& p) { return p[0]; });
  CHECK(interpolate(x1, {0.25, 0.0}) == doctest::Approx(0.25).epsilon(1e-15));
  const ScalarField prod = sample(l, [](const Point& p) { return p[0] * p[1]; });
  CHECK(interpolate(prod, {0.25, 0.25}) == doctest::Approx(0.0625).epsilon(1e-15));
  CHECK_THROWS_AS(interpolate(x1, {2.0, 0.0}), std::out_of_range);
}

TEST_CASE("interpolation reproduces node values exactly") {
  const Lattice l(2, 1.0, 1.0 / 16);
  const ScalarField f = sample(l, [](const Point& p) { return std::sin(3.0 * p[0]) * std::exp(p[1]); });
  for (std::size_t k = 0; k < l.node_count(); k += 7) CHECK(interpolate(f, l.point(k)) == f[k]);
}

TEST_CASE("circle traces") {
  const Lattice l(2, 1.0, 0.25);
  const ScalarField r2 = sample(l, [](const Point& p) { return p[0] * p[0] + p[1] * p[1]; });
  // Samples at 0, pi/2, pi, 3pi/2 land on nodes.
  for (double v : circle_trace(r2, {0.0, 0.0}, 0.5, 4)) CHECK(v == doctest::Approx(0.25).epsilon(1e-14));
  CHECK_THROWS_AS(circle_trace(r2, {0.0, 0.0}, 2.0, 8), std::out_of_range);

  const Lattice l1(1, 1.0, 0.25);
  const auto t = circle_trace(sample(l1, [](const Point& p) { return p[0]; }), {0.0, 0.0}, 0.5, 2);
  REQUIRE(t.size() == 2);
  CHECK(t[0] == doctest::Approx(-0.5));
  CHECK(t[1] == doctest::Approx(0.5));
  CHECK_THROWS(circle_trace(sample(l1, [](const Point& p) { return p[0]; }), {0.0, 0.0}, 0.5, 3));
}

TEST_CASE("ball mask and boundary layer") {
  const Lattice l(2, 1.0, 0.25);
  const auto m = ball_mask(l, 1.0);
  std::size_t inside = 0;
  for (auto v : m) inside += v;
  // Nodes strictly inside the unit disc on the 9x9 lattice of spacing 1/4.
  CHECK(inside == 45);
  const auto layer = boundary_layer(l, m);
  for (std::size_t k = 0; k < l.node_count(); ++k)
    if (layer[k]) CHECK(!m[k]);
}

TEST_CASE("number formatting keeps 12 significant digits") {
  CHECK(format_number(1.0 / 3.0) == "0.333333333333");
  CHECK(format_number(0.5) == "0.5");
  CHECK(format_number(-2.0) == "-2");
}

TEST_CASE("field csv dump lists masked nodes") {
  const Lattice l(1, 1.0, 0.5);
  ScalarField f = sample(l, [](const Point& p) { return 2.0 * p[0]; });
  f.mask = ball_mask(l, 1.0);
  std::ostringstream os;
  write_field_csv(os, f);
  CHECK(os.str() == "x1,v\n-0.5,-1\n0,0\n0.5,1\n");
}
