#include "membrane/profiles.hpp"

#include "doctest.h"

#include <cmath>
#include <random>
#include <stdexcept>

using namespace membrane;

namespace {
const Direction e1({1.0, 0.0});
const Direction e1d1({1.0});
std::span<const double> at(const std::vector<double>& x) { return {x.data(), x.size()}; }
}  // namespace

TEST_CASE("validation of profile parameters") {
  CHECK(validate_spec(StableHalf{e1}).ok());
  CHECK_FALSE(validate_spec(StableHalf{Direction({1.0, 1.0})}).ok());
  const ValidationReport bad = validate_spec(Parabola{SymMatrix::identity(2, 0.5), SymMatrix(2)});
  CHECK_FALSE(bad.ok());
  CHECK(bad.failures().find("trace(B)") != std::string::npos);
  // B = I/3 satisfies 3B - e(x)e >= 0 but has trace 2/3 in the plane, so only the PSD part holds.
  const ValidationReport third = validate_spec(HybridEB{Direction::angle(0.7), SymMatrix::identity(2, 1.0 / 3.0)});
  CHECK_FALSE(third.ok());
  CHECK(third.failures().find("trace(B)=1") != std::string::npos);
  CHECK(third.failures().find("3B") == std::string::npos);
  CHECK(validate_spec(HybridEB{Direction::angle(0.7), SymMatrix::identity(2, 0.5)}).ok());
  CHECK(validate_spec(Parabola{SymMatrix::identity(2, 0.5), SymMatrix::identity(2, -0.5)}).ok());
}

TEST_CASE("closed-form profile values") {
  const Triple sh = eval_triple(StableHalf{e1}, at({1.0, 0.0}));
  CHECK(sh.u1 == doctest::Approx(0.5));
  CHECK(sh.u2 == doctest::Approx(0.0));
  CHECK(sh.u3 == doctest::Approx(-0.5));
  const Triple uh = eval_triple(UnstableHalf{e1}, at({1.0, 0.0}));
  CHECK(uh.u1 == doctest::Approx(0.25));
  CHECK(uh.u2 == doctest::Approx(0.25));
  CHECK(uh.u3 == doctest::Approx(-0.5));
  const Triple pa = eval_triple(Parabola{SymMatrix::identity(2, 0.5), SymMatrix::identity(2, -0.5)}, at({1.0, 1.0}));
  CHECK(pa.u1 == doctest::Approx(0.5));
  CHECK(pa.u2 == doctest::Approx(0.0));
  CHECK(pa.u3 == doctest::Approx(-0.5));
  CHECK_THROWS_AS(eval_profile(StableHalf{Direction({2.0, 0.0})}, at({1.0, 0.0})), std::invalid_argument);
}

TEST_CASE("profile triples sum to zero and stay ordered") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const std::vector<ProfileSpec> specs{StableHalf{Direction::angle(0.3)}, UnstableHalf{Direction::angle(-1.1)},
                                       HybridEB{e1, SymMatrix::identity(2, 0.5)},
                                       Parabola{SymMatrix::identity(2, 0.5), SymMatrix::identity(2, -0.5)}};
  for (const auto& s : specs)
    for (int n = 0; n < 200; ++n) {
      const Triple t = eval_triple(s, at({U(rng), U(rng)}));
      CHECK(t.u1 + t.u2 + t.u3 == doctest::Approx(0.0).scale(1.0));
      CHECK(t.u1 >= t.u2 - 1e-14);
      CHECK(t.u2 >= t.u3 - 1e-14);
    }
}

TEST_CASE("approximate solutions at the kinks") {
  // Both branches of Psi meet at 2b - a = 0.2.
  const Pair c1 = eval_approx(1, e1d1, e1d1, 0.0, 0.1, at({0.2}));
  CHECK(c1.p == doctest::Approx(0.02));
  CHECK(c1.q == doctest::Approx(0.01));
  const Pair c2 = eval_approx(2, e1d1, e1d1, 0.1, 0.0, at({0.2}));
  CHECK(c2.p == doctest::Approx(0.015));
}

TEST_CASE("approximate solution degenerates to the half-space pair") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int which : {1, 2})
    for (int n = 0; n < 100; ++n) {
      const std::vector<double> x{U(rng), U(rng)};
      const Pair p = eval_approx(which, e1, e1, 0.05, 0.05, at(x));
      const Pair q = eval_halfpair(which, e1, e1, 0.05, 0.05, at(x));
      CHECK(p.p == doctest::Approx(q.p));
      CHECK(p.q == doctest::Approx(q.q));
    }
}

TEST_CASE("approximate solutions are C^{1,1} across region interfaces") {
  // Values and first differences across a step h differ by O(h) everywhere.
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const double h = 1e-4;
  for (int which : {1, 2})
    for (int n = 0; n < 20; ++n) {
      const double th = std::asin(0.1 * U(rng));
      const Direction al({std::cos(th), std::sin(th)}), be({std::cos(th), -std::sin(th)});
      const double a = 0.1 * U(rng) - 0.05, b = which == 2 ? a - 0.1 * U(rng) : a + 0.2 * U(rng) - 0.1;
      double worst = 0.0;
      for (int k = 0; k < 400; ++k) {
        const double x = 2.0 * U(rng) - 1.0, y = 2.0 * U(rng) - 1.0;
        auto f = [&](double dx, double dy) { return eval_approx(which, al, be, a, b, at({x + dx, y + dy})); };
        const Pair c = f(0, 0), r = f(h, 0), l = f(-h, 0), u = f(0, h), d = f(0, -h);
        // Second differences stay bounded by a constant (no gradient jumps).
        worst = std::max({worst, std::abs(r.p - 2 * c.p + l.p) / (h * h), std::abs(u.p - 2 * c.p + d.p) / (h * h),
                          std::abs(r.q - 2 * c.q + l.q) / (h * h), std::abs(u.q - 2 * c.q + d.q) / (h * h)});
      }
      CHECK(worst < 10.0);
    }
}

TEST_CASE("symmetric frame test") {
  CHECK(in_symmetric_frame(Direction::angle(0.1), Direction::angle(-0.1)));
  CHECK_FALSE(in_symmetric_frame(Direction::angle(-0.1), Direction::angle(0.1)));
}

TEST_CASE("symmetric matrix algebra") {
  const SymMatrix m = SymMatrix::from_rows(2, std::vector<double>{2.0, 1.0, 1.0, 2.0});
  CHECK(m.trace() == doctest::Approx(4.0));
  CHECK(m.min_eigenvalue() == doctest::Approx(1.0));
  CHECK(m.max_eigenvalue() == doctest::Approx(3.0));
  CHECK(m.quad(std::vector<double>{1.0, -1.0}) == doctest::Approx(2.0));
  const SymMatrix o = SymMatrix::outer(e1);
  CHECK(o(0, 0) == 1.0);
  CHECK(o(1, 1) == 0.0);
}
