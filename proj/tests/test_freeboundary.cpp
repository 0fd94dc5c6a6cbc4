#include "membrane/freeboundary.hpp"

#include "doctest.h"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

using namespace membrane;

namespace {

const Direction e1({1.0, 0.0});

std::pair<ScalarField, ScalarField> pair_of(const ProfileSpec& spec, const Lattice& lat) {
  ScalarField u(lat), w(lat);
  u.mask = w.mask = ball_mask(lat, lat.half_width());
  for (std::size_t k = 0; k < lat.node_count(); ++k) {
    const Point x = lat.point(k);
    const std::span<const double> xs(x.data(), static_cast<std::size_t>(lat.dim()));
    if (is_triple(spec)) {
      const auto p = eval_triple(spec, xs).pair();
      u[k] = p[0];
      w[k] = p[1];
    } else {
      const Pair p = eval_pair(spec, xs);
      u[k] = p.p;
      w[k] = p.q;
    }
  }
  return {u, w};
}

}  // namespace

TEST_CASE("contact sets of closed-form stacks") {
  const Lattice lat(2, 1.0, 1.0 / 32);
  const double h = lat.spacing();
  const MembraneStack sh = sample_stack(StableHalf{e1}, lat, ball_mask(lat, 1.0));
  const auto c = contact_sets(sh, 0.5 * h * h);
  for (std::size_t k = 0; k < lat.node_count(); ++k) {
    const double x1 = lat.point(k)[0];
    if (x1 <= 0.0) CHECK(c[0][k] == 1);
    if (x1 > h) CHECK(c[0][k] == 0);
  }
  const MembraneStack pa = sample_stack(Parabola{SymMatrix::identity(2, 0.5), SymMatrix::identity(2, -0.5)}, lat);
  const auto cp = contact_sets(pa, 0.5 * h * h);
  for (std::size_t k = 0; k < lat.node_count(); ++k) {
    const Point x = lat.point(k);
    if (cp[0][k] || cp[1][k]) CHECK(std::hypot(x[0], x[1]) <= std::sqrt(2.0) * h * 1.0001);
  }
  const auto all = contact_sets(sh, std::numeric_limits<double>::infinity());
  for (auto v : all[0]) CHECK(v == 1);
}

TEST_CASE("free boundary extraction") {
  const Lattice lat(2, 1.0, 1.0 / 32);
  const double h = lat.spacing();
  const auto mask = ball_mask(lat, 1.0);
  const MembraneStack sh = sample_stack(StableHalf{e1}, lat, mask);
  const GammaSet g = extract_gamma(lat, contact_sets(sh, 0.25 * h * h)[0], mask, GammaLabel::Gamma1);
  REQUIRE(!g.points.empty());
  double far = 0.0, cover = 0.0;
  for (const Point& p : g.points) far = std::max(far, std::abs(p[0]));
  // Hausdorff in the other direction: every point of {x1 = 0} in B_{0.9} is near a sample.
  for (int j = -28; j <= 28; ++j) {
    double best = 1e9;
    for (const Point& p : g.points) best = std::min(best, std::hypot(p[0], p[1] - j * h));
    cover = std::max(cover, best);
  }
  CHECK(far <= h);
  CHECK(cover <= h);

  std::vector<std::uint8_t> ones(lat.node_count(), 1);
  CHECK(extract_gamma(lat, ones, mask, GammaLabel::Gamma1).points.empty());

  const MembraneStack uh = sample_stack(UnstableHalf{e1}, lat, mask);
  const auto cu = contact_sets(uh, 0.25 * h * h);
  for (int m = 0; m < 2; ++m) {
    const GammaSet gu = extract_gamma(lat, cu[m], mask, m == 0 ? GammaLabel::Gamma1 : GammaLabel::Gamma2);
    REQUIRE(!gu.points.empty());
    for (const Point& p : gu.points) CHECK(std::abs(p[0]) <= h);
  }

  std::ostringstream os;
  write_gamma_csv(os, g);
  CHECK(os.str().rfind("x1,x2", 0) == 0);
}

TEST_CASE("flatness fits recover exact profiles") {
  const Lattice lat(2, 1.0, 1.0 / 32);
  SUBCASE("half-space pair, mode R") {
    const auto [u, w] = pair_of(HalfPairR{e1, e1, 0.0, 0.0}, lat);
    const FlatnessFit f = fit_flatness(u, w, {0.0, 0.0}, 0.5, FitMode::R);
    CHECK(f.epsilon <= 1e-8);
    CHECK(distance(f.alpha, e1) <= 1e-6);
    CHECK(distance(f.beta, e1) <= 1e-6);
    CHECK(std::abs(f.a) <= 1e-6);
    CHECK(std::abs(f.b) <= 1e-6);
  }
  SUBCASE("rotated SH, mode R") {
    const auto [u, w] = pair_of(StableHalf{Direction::angle(0.1)}, lat);
    const FlatnessFit f = fit_flatness(u, w, {0.0, 0.0}, 0.5, FitMode::R);
    CHECK(distance(f.alpha, Direction::angle(0.1)) <= 1e-3);
    CHECK(distance(f.beta, Direction::angle(0.1)) <= 1e-3);
    CHECK(f.epsilon <= 1e-6);
  }
  SUBCASE("UH pair, mode S") {
    const auto [u, w] = pair_of(UnstableHalf{e1}, lat);
    const FlatnessFit f = fit_flatness(u, w, {0.0, 0.0}, 0.5, FitMode::S);
    CHECK(f.epsilon <= 1e-8);
    CHECK(distance(f.alpha, e1) <= 1e-6);
    CHECK(distance(f.beta, e1) <= 1e-6);
  }
  SUBCASE("zero pair is degenerate") {
    ScalarField u(lat), w(lat);
    u.mask = w.mask = ball_mask(lat, 1.0);
    CHECK(fit_flatness(u, w, {0.0, 0.0}, 0.5, FitMode::R).degenerate);
  }
  SUBCASE("ball outside the hull") {
    const auto [u, w] = pair_of(StableHalf{e1}, lat);
    CHECK_THROWS_AS(fit_flatness(u, w, {0.8, 0.0}, 0.5, FitMode::R), std::out_of_range);
  }
}

TEST_CASE("width profiles") {
  const std::vector<double> radii{0.125, 0.25, 0.5};
  GammaSet line;
  for (int j = -64; j <= 64; ++j) line.points.push_back({0.0, j / 64.0});
  for (const auto& row : width_profile(line, e1, 0.0, radii)) CHECK(row.width == 0.0);

  GammaSet graph;
  for (int j = -256; j <= 256; ++j) {
    const double y = j / 256.0;
    graph.points.push_back({0.3 * y * y, y});
  }
  for (const auto& row : width_profile(graph, e1, 0.0, radii)) {
    CHECK(row.width == doctest::Approx(0.3 * row.r * row.r).epsilon(0.05));
    CHECK(row.linear_ratio == doctest::Approx(row.width / row.r));
    CHECK(row.log_ratio == doctest::Approx(row.width * -std::log(row.r) / row.r));
  }

  for (const auto& row : width_profile(GammaSet{}, e1, 0.0, radii)) {
    CHECK(std::isnan(row.width));
    CHECK(row.points == 0);
  }
  CHECK_THROWS_AS(width_profile(line, e1, 0.0, {0.5, 0.25}), std::invalid_argument);
}

TEST_CASE("symmetric frame map") {
  const FrameMap f = symmetric_frame(Direction::angle(0.5), Direction::angle(0.3), 2);
  CHECK(in_symmetric_frame(f.alpha, f.beta));
  CHECK(f.alpha[0] == doctest::Approx(std::cos(0.1)));
  CHECK_THROWS_AS(symmetric_frame(e1, Direction({-1.0, 0.0}), 2), std::invalid_argument);
}

TEST_CASE("trapping between translated approximate solutions") {
  const Lattice lat(2, 1.0, 1.0 / 32);
  const auto [u, w] = pair_of(HalfPairR{e1, e1, 0.0, 0.0}, lat);
  FlatnessFit fit = fit_flatness(u, w, {0.0, 0.0}, 0.5, FitMode::R);
  const TrappingResult ok = check_trapping(u, w, fit, 1.0);
  CHECK(ok.trapped);
  CHECK(ok.margin >= -1e-8);

  fit.a = -0.2;  // shifts Phi towards the contact side
  fit.epsilon = 0.01;
  const TrappingResult bad = check_trapping(u, w, fit, 1.0);
  CHECK_FALSE(bad.trapped);

  fit.epsilon = 0.2;
  CHECK_THROWS_AS(check_trapping(u, w, fit, 1.0), std::invalid_argument);
}

TEST_CASE("trapping of a solved perturbed SH pair") {
  const Lattice lat(2, 1.0, 1.0 / 32);
  MembraneStack data = sample_stack(StableHalf{e1}, lat, ball_mask(lat, 1.0));
  for (std::size_t k = 0; k < lat.node_count(); ++k) {
    const Point x = lat.point(k);
    data.fields[0][k] += 1e-3 * (1.0 + x[1]);
    data.fields[2][k] -= 1e-3 * (1.0 + x[1]);
  }
  const SolveResult r = solve_membranes(MembraneProblem::from_stack(data));
  const FlatnessFit fit = fit_flatness(r.stack.u(), r.stack.w(), {0.0, 0.0}, 1.0, FitMode::R);
  REQUIRE(fit.epsilon < kFlatRegime);
  CHECK(check_trapping(r.stack.u(), r.stack.w(), fit, 20.0).trapped);
}
