#include "membrane/classify.hpp"

#include "doctest.h"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

using namespace membrane;

namespace {

const Direction e1({1.0, 0.0});

MembraneStack solved(const ProfileSpec& spec, double h) {
  const Lattice lat(2, 1.0, h);
  return solve_membranes(MembraneProblem::from_stack(sample_stack(spec, lat, ball_mask(lat, 1.0)))).stack;
}

}  // namespace

TEST_CASE("reference energies") {
  CHECK(reference_w0(1) == doctest::Approx(1.0 / 6.0));
  CHECK(reference_w0(2) == doctest::Approx(std::numbers::pi / 16.0));
  CHECK(reference_energy(Verdict::Sing1, 2) == doctest::Approx(1.5 * std::numbers::pi / 16.0));
  CHECK(reference_energy(Verdict::Hybrid, 1) == doctest::Approx(1.75 / 6.0));
  CHECK(reference_energy(Verdict::Sing2, 1) == doctest::Approx(2.0 / 6.0));
  CHECK_THROWS_AS(reference_energy(Verdict::Undetermined, 2), std::invalid_argument);
}

TEST_CASE("rescaling") {
  const Lattice lat(2, 1.0, 1.0 / 32);
  const MembraneStack sh = sample_stack(StableHalf{Direction::angle(0.4)}, lat);
  SUBCASE("unit radius is the identity") {
    const MembraneStack r = rescale_at(sh, {0.0, 0.0}, 1.0);
    for (int m = 0; m < 3; ++m)
      for (std::size_t k = 0; k < lat.node_count(); ++k) CHECK(r.fields[m][k] == doctest::Approx(sh.fields[m][k]));
  }
  SUBCASE("homogeneous profiles are invariant") {
    const MembraneStack r = rescale_at(sh, {0.0, 0.0}, 0.5);
    const Lattice& rl = r.lattice();
    for (std::size_t k = 0; k < rl.node_count(); k += 5) {
      const Point y = rl.point(k);
      const double exact = eval_triple(StableHalf{Direction::angle(0.4)}, std::span<const double>(y.data(), 2)).u1;
      CHECK(r.fields[0][k] == doctest::Approx(exact).epsilon(1e-2).scale(1.0));
    }
  }
  SUBCASE("generic field") {
    MembraneStack g = sh;
    for (std::size_t k = 0; k < lat.node_count(); ++k) {
      const Point x = lat.point(k);
      g.fields[0][k] = x[0] + 2.0 * x[1];  // linear: interpolation is exact
    }
    const MembraneStack r = rescale_at(g, {0.0, 0.0}, 0.25);
    const Lattice& rl = r.lattice();
    for (std::size_t k = 0; k < rl.node_count(); k += 3) {
      const Point y = rl.point(k);
      CHECK(r.fields[0][k] == doctest::Approx((0.25 * y[0] + 0.5 * y[1]) / 0.0625).scale(1.0));
    }
  }
  SUBCASE("ball outside the hull") { CHECK_THROWS_AS(rescale_at(sh, {0.6, 0.0}, 0.5), std::out_of_range); }
}

TEST_CASE("canonical boundary data classify at the center") {
  for (double h : {1.0 / 32, 1.0 / 64}) {
    CAPTURE(h);
    CHECK(classify_point(solved(StableHalf{e1}, h), {0.0, 0.0}, {}).verdict == Verdict::Reg);
    CHECK(classify_point(solved(UnstableHalf{e1}, h), {0.0, 0.0}, {}).verdict == Verdict::Sing1);
    CHECK(classify_point(solved(Parabola{SymMatrix::identity(2, 0.5), SymMatrix::identity(2, -0.5)}, h), {0.0, 0.0}, {})
              .verdict == Verdict::Sing2);
    CHECK(classify_point(solved(HybridEB{e1, SymMatrix::identity(2, 0.5)}, h), {0.0, 0.0}, {}).verdict == Verdict::Hybrid);
  }
}

TEST_CASE("classification needs a point on both free boundaries") {
  const MembraneStack sh = solved(StableHalf{e1}, 1.0 / 32);
  CHECK(on_both_free_boundaries(sh, {0.0, 0.0}));
  CHECK_FALSE(on_both_free_boundaries(sh, {0.5, 0.0}));
  CHECK_THROWS_AS(classify_point(sh, {0.5, 0.0}, {}), std::invalid_argument);
}

TEST_CASE("intersection points of the SH solution lie on the common free boundary") {
  const MembraneStack sh = solved(StableHalf{e1}, 1.0 / 32);
  const auto pts = intersection_points(sh, 0.25);
  REQUIRE(!pts.empty());
  for (const Point& p : pts) {
    CHECK(std::abs(p[0]) <= 1.0 / 32 + 1e-12);
    CHECK(std::hypot(p[0], p[1]) < 0.25);
  }
}

TEST_CASE("parabola fit recovers the coefficient matrices") {
  const Lattice lat(2, 1.0, 1.0 / 32);
  SymMatrix A(2), B(2);
  A.set(0, 0, 0.6);
  A.set(1, 1, 0.4);
  A.set(0, 1, 0.05);
  B.set(0, 0, -0.4);
  B.set(1, 1, -0.6);
  B.set(0, 1, -0.05);
  const ParabolaFit f = fit_parabola(sample_stack(Parabola{A, B}, lat), {0.0, 0.0}, 0.5);
  CHECK(f.A(0, 0) == doctest::Approx(0.6));
  CHECK(f.A(0, 1) == doctest::Approx(0.05));
  CHECK(f.B(1, 1) == doctest::Approx(-0.6));
  CHECK(f.epsilon <= 1e-10);
}

TEST_CASE("hybrid fit picks the right ordering") {
  const Lattice lat(2, 1.0, 1.0 / 32);
  const HybridFit f = fit_hybrid(sample_stack(HybridBE{SymMatrix::identity(2, 0.5), Direction::angle(0.3)}, lat), {0.0, 0.0}, 0.5);
  CHECK(std::holds_alternative<HybridBE>(f.spec));
  CHECK(f.epsilon <= 1e-6);
}

TEST_CASE("angle dynamics on the exact SH stack") {
  const Lattice lat(2, 1.0, 1.0 / 64);
  const AngleSeries a = angle_dynamics(sample_stack(StableHalf{e1}, lat, ball_mask(lat, 1.0)), {0.0, 0.0},
                                       {0.5, 0.25, 0.125}, FitMode::R);
  CHECK_FALSE(a.truncated);
  for (double g : a.angle_gap) CHECK(g <= 1e-6);
  CHECK_THROWS_AS(angle_dynamics(sample_stack(StableHalf{e1}, lat), {0.0, 0.0}, {0.25, 0.5}, FitMode::R),
                  std::invalid_argument);
}

TEST_CASE("classes csv") {
  PointClass p;
  p.verdict = Verdict::Reg;
  p.energy = 0.25;
  std::ostringstream os;
  write_classes_csv(os, {p}, 2);
  CHECK(os.str() == "x1,x2,verdict,energy,eps\n0,0,Reg,0.25,0\n");
}
