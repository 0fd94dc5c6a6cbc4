#include "membrane/solver.hpp"

#include "doctest.h"

#include <cmath>
#include <random>
#include <stdexcept>

using namespace membrane;

namespace {

double max_error(const MembraneStack& a, const MembraneStack& b) {
  double e = 0.0;
  for (int m = 0; m < a.count(); ++m)
    for (std::size_t k = 0; k < a.fields[m].size(); ++k)
      if (a.mask()[k]) e = std::max(e, std::abs(a.fields[m][k] - b.fields[m][k]));
  return e;
}

MembraneProblem zero_problem(const Lattice& lat) {
  MembraneProblem p{{1.0, 0.0, -1.0}, lat, ball_mask(lat, lat.half_width()), {}};
  p.boundary.assign(3, std::vector<double>(lat.node_count(), 0.0));
  return p;
}

}  // namespace

TEST_CASE("pool adjacent violators") {
  auto pava = [](std::vector<double> v, std::vector<double> w) { return pava_decreasing(v, w); };
  const auto a = pava({1, 3, 2}, {1, 1, 1});
  CHECK(a == std::vector<double>{2, 2, 2});
  CHECK(pava({3, 2, 1}, {1, 1, 1}) == std::vector<double>{3, 2, 1});
  CHECK(pava({0, 4}, {1, 1}) == std::vector<double>{2, 2});
  const auto w = pava({0, 4}, {3, 1});
  CHECK(w[0] == doctest::Approx(1.0));
  CHECK(w[1] == doctest::Approx(1.0));
  CHECK_THROWS_AS(pava({1, 2}, {1, 0}), std::invalid_argument);
}

TEST_CASE("SH boundary data in 1D recover the stable half-space profile") {
  const Lattice lat(1, 1.0, 1.0 / 128);
  const MembraneStack exact = sample_stack(StableHalf{Direction({1.0})}, lat, ball_mask(lat, 1.0));
  const SolveResult r = solve_membranes(MembraneProblem::from_stack(exact));
  CHECK(r.report.converged);
  CHECK(max_error(r.stack, exact) <= 1e-3);
}

TEST_CASE("zero boundary data give zero membranes") {
  const Lattice lat(1, 1.0, 1.0 / 64);
  const SolveResult r = solve_membranes(zero_problem(lat));
  CHECK(r.report.converged);
  for (const auto& f : r.stack.fields)
    for (double v : f.values) CHECK(std::abs(v) <= 1e-9);
}

TEST_CASE("max_sweeps = 0 returns the projected initial guess unconverged") {
  const Lattice lat(2, 1.0, 1.0 / 16);
  MembraneProblem p = MembraneProblem::from_stack(sample_stack(UnstableHalf{Direction({1.0, 0.0})}, lat, ball_mask(lat, 1.0)));
  p.max_sweeps = 0;
  const SolveResult r = solve_membranes(p);
  CHECK_FALSE(r.report.converged);
  CHECK(r.report.sweeps == 0);
  for (std::size_t k = 0; k < lat.node_count(); ++k) {
    CHECK(r.stack.fields[0][k] >= r.stack.fields[1][k]);
    CHECK(r.stack.fields[1][k] >= r.stack.fields[2][k]);
  }
}

TEST_CASE("malformed problems are rejected") {
  const Lattice lat(2, 1.0, 1.0 / 8);
  MembraneProblem p = zero_problem(lat);
  p.forces = {0.0, 1.0, -1.0};
  CHECK_THROWS_AS(validate_problem(p), std::invalid_argument);
  p = zero_problem(lat);
  p.boundary[2][lat.flat(0, lat.center_index())] = 1.0;  // boundary layer node, above u2
  CHECK_THROWS_AS(validate_problem(p), std::invalid_argument);
  p = zero_problem(lat);
  p.mask.assign(lat.node_count(), 1);
  CHECK_THROWS_AS(validate_problem(p), std::invalid_argument);
}

TEST_CASE("obstacle problem closed forms") {
  const Lattice lat(1, 1.0, 1.0 / 128);
  const double h2 = lat.spacing() * lat.spacing();
  SUBCASE("one-sided data") {
    ScalarField data = sample(lat, [](const Point& x) { return 0.5 * std::pow(std::max(x[0], 0.0), 2); });
    const ScalarField exact = data;
    data.mask = ball_mask(lat, 1.0);
    const ObstacleResult r = solve_obstacle(data);
    CHECK(r.report.converged);
    for (std::size_t k = 0; k < lat.node_count(); ++k) CHECK(std::abs(r.field[k] - exact[k]) <= 5.0 * h2);
  }
  SUBCASE("symmetric data") {
    ScalarField data = sample(lat, [](const Point& x) { return 0.5 * x[0] * x[0]; });
    const ScalarField exact = data;
    data.mask = ball_mask(lat, 1.0);
    const ObstacleResult r = solve_obstacle(data);
    for (std::size_t k = 0; k < lat.node_count(); ++k) CHECK(std::abs(r.field[k] - exact[k]) <= 5.0 * h2);
  }
  SUBCASE("zero data") {
    ScalarField data(lat);
    data.mask = ball_mask(lat, 1.0);
    const ObstacleResult r = solve_obstacle(data);
    for (double v : r.field.values) CHECK(v == 0.0);
  }
  SUBCASE("negative data") {
    ScalarField data(lat, -1.0);
    data.mask = ball_mask(lat, 1.0);
    CHECK_THROWS_AS(solve_obstacle(data), std::invalid_argument);
  }
}

TEST_CASE("residual of exact SH samples away from the kink") {
  const Lattice lat(2, 1.0, 1.0 / 32);
  const MembraneStack s = sample_stack(StableHalf{Direction({1.0, 0.0})}, lat, ball_mask(lat, 1.0));
  const ResidualReport r = residual_report(s, 0.25 * lat.spacing() * lat.spacing());
  CHECK(r.checked > 0);
  CHECK(r.max_residual <= 1e-9);

  MembraneStack bad = s;
  bad.fields[1][lat.flat(16, 32)] = 10.0;
  CHECK_THROWS_AS(residual_report(bad, 1e-6), std::invalid_argument);
}

TEST_CASE("zero pair is both a sub- and a supersolution") {
  const Lattice lat(2, 1.0, 1.0 / 16);
  ScalarField u(lat), w(lat);
  u.mask = w.mask = ball_mask(lat, 1.0);
  const MembershipReport r = pair_membership(u, w);
  CHECK(r.subsolution);
  CHECK(r.supersolution);
}

TEST_CASE("comparison principle on random ordered data") {
  const Lattice lat(2, 1.0, 1.0 / 16);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int n = 0; n < 5; ++n) {
    MembraneProblem p = zero_problem(lat);
    const double c[3][3] = {{U(rng), U(rng), U(rng)}, {U(rng), U(rng), U(rng)}, {U(rng), U(rng), U(rng)}};
    for (std::size_t k = 0; k < lat.node_count(); ++k) {
      const Point x = lat.point(k);
      const double t = std::atan2(x[1], x[0]);
      double v[3], w[3] = {1, 1, 1};
      for (int m = 0; m < 3; ++m) v[m] = c[m][0] + c[m][1] * std::cos(t) + c[m][2] * std::sin(2 * t);
      const auto q = pava_decreasing(v, w);
      for (int m = 0; m < 3; ++m) p.boundary[m][k] = q[m];
    }
    const SolveResult r = solve_membranes(p);
    CHECK(r.report.converged);
    for (std::size_t k = 0; k < lat.node_count(); ++k) {
      CHECK(r.stack.fields[0][k] - r.stack.fields[1][k] >= -1e-8);
      CHECK(r.stack.fields[1][k] - r.stack.fields[2][k] >= -1e-8);
    }
  }
}

TEST_CASE("energy decreases along the sweeps") {
  const Lattice lat(2, 1.0, 1.0 / 16);
  const SolveResult r =
      solve_membranes(MembraneProblem::from_stack(sample_stack(UnstableHalf{Direction::angle(0.4)}, lat, ball_mask(lat, 1.0))));
  for (std::size_t i = 1; i < r.report.energy_history.size(); ++i)
    CHECK(r.report.energy_history[i] <= r.report.energy_history[i - 1] + 1e-12);
}

TEST_CASE("results do not depend on the worker count") {
  const Lattice lat(2, 1.0, 1.0 / 32);
  MembraneProblem p = MembraneProblem::from_stack(sample_stack(StableHalf{Direction::angle(0.3)}, lat, ball_mask(lat, 1.0)));
  p.workers = 1;
  const SolveResult a = solve_membranes(p);
  p.workers = 3;
  const SolveResult b = solve_membranes(p);
  CHECK(a.report.sweeps == b.report.sweeps);
  CHECK(a.report.energy == b.report.energy);
  for (int m = 0; m < 3; ++m) CHECK(a.stack.fields[m].values == b.stack.fields[m].values);
}

TEST_CASE("plain Gauss-Seidel reaches the same solution") {
  const Lattice lat(1, 1.0, 1.0 / 32);
  MembraneProblem p = MembraneProblem::from_stack(sample_stack(UnstableHalf{Direction({1.0})}, lat, ball_mask(lat, 1.0)));
  const SolveResult sor = solve_membranes(p);
  p.omega = 1.0;
  p.max_sweeps = 200000;
  const SolveResult gs = solve_membranes(p);
  CHECK(gs.report.converged);
  CHECK(max_error(sor.stack, gs.stack) <= 1e-7);
}

TEST_CASE("four membranes stay ordered") {
  const Lattice lat(1, 1.0, 1.0 / 64);
  MembraneProblem p{{1.5, 0.5, -0.5, -1.5}, lat, ball_mask(lat, 1.0), {}};
  p.boundary.assign(4, std::vector<double>(lat.node_count(), 0.0));
  const std::size_t last = lat.node_count() - 1;
  p.boundary[0][0] = 1.0;
  p.boundary[3][last] = -1.0;
  const SolveResult r = solve_membranes(p);
  CHECK(r.report.converged);
  for (std::size_t k = 0; k < lat.node_count(); ++k)
    for (int m = 0; m < 3; ++m) CHECK(r.stack.fields[m][k] >= r.stack.fields[m + 1][k] - 1e-10);
}
