#pragma once

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace membrane {

/// Unit vector in R^d. Construct through `unit()` to normalise; the raw
/// constructor keeps the components as given so validation can report them.
struct Direction {
  std::vector<double> components;

  Direction() = default;
  explicit Direction(std::vector<double> c) : components(std::move(c)) {}
  static Direction unit(std::vector<double> c);
  static Direction angle(double theta) { return Direction({std::cos(theta), std::sin(theta)}); }

  int dim() const { return static_cast<int>(components.size()); }
  double operator[](int i) const { return i < dim() ? components[static_cast<std::size_t>(i)] : 0.0; }
  double dot(std::span<const double> x) const;
  double norm() const;
};

double distance(const Direction& a, const Direction& b);

/// Symmetric d x d matrix, upper triangle stored once.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(int dim);
  static SymMatrix identity(int dim, double scale = 1.0);
  /// Row-major full matrix; the lower triangle is ignored.
  static SymMatrix from_rows(int dim, std::span<const double> rows);
  static SymMatrix outer(const Direction& e);

  int dim() const { return dim_; }
  double operator()(int i, int j) const;
  void set(int i, int j, double v);

  double trace() const;
  /// x . A x
  double quad(std::span<const double> x) const;
  /// A x
  std::vector<double> apply(std::span<const double> x) const;
  double min_eigenvalue() const;
  double max_eigenvalue() const;

  SymMatrix operator+(const SymMatrix& o) const;
  SymMatrix operator*(double s) const;
  SymMatrix operator-(const SymMatrix& o) const { return *this + o * -1.0; }

 private:
  int dim_ = 0;
  std::vector<double> upper_;
  std::size_t slot(int i, int j) const;
};

// Profile variants. u2 of every triple is -u1-u3.
struct StableHalf { Direction e; };
struct UnstableHalf { Direction e; };
struct HybridEB { Direction e; SymMatrix B; };
struct HybridBE { SymMatrix B; Direction e; };
struct Parabola { SymMatrix A; SymMatrix B; };
/// Pair of one-sided half-space profiles, class R.
struct HalfPairR { Direction alpha, beta; double a = 0.0, b = 0.0; };
/// Pair of unstable half-space profiles, class S.
struct HalfPairS { Direction alpha, beta; double a = 0.0, b = 0.0; };
struct Approx1 { Direction alpha, beta; double a = 0.0, b = 0.0; };
struct Approx2 { Direction alpha, beta; double a = 0.0, b = 0.0; };
/// Half-space solution of the single obstacle problem.
struct ObstacleHalf { Direction alpha; double a = 0.0; };

using ProfileSpec = std::variant<StableHalf, UnstableHalf, HybridEB, HybridBE, Parabola, HalfPairR, HalfPairS,
                                 Approx1, Approx2, ObstacleHalf>;

std::string profile_name(const ProfileSpec& spec);

struct ConstraintCheck {
  std::string name;
  bool passed = true;
  double margin = 0.0;  // signed; negative means violated by that much
};

struct ValidationReport {
  std::vector<ConstraintCheck> checks;
  bool ok() const;
  std::string failures() const;
};

inline constexpr double kPsdTolerance = 1e-10;
inline constexpr double kUnitTolerance = 1e-12;
inline constexpr double kFrameTolerance = 1e-10;

ValidationReport validate_spec(const ProfileSpec& spec);

struct Triple {
  double u1 = 0.0, u2 = 0.0, u3 = 0.0;
  /// The obstacle-system view (u, w) = (u1, -u3).
  std::array<double, 2> pair() const { return {u1, -u3}; }
};
struct Pair {
  double p = 0.0, q = 0.0;
};

using ProfileValue = std::variant<Triple, Pair, double>;

/// Closed-form evaluation; throws std::invalid_argument when validate_spec fails.
ProfileValue eval_profile(const ProfileSpec& spec, std::span<const double> x);

/// Same without re-validating: hot loops validate once up front.
ProfileValue eval_profile_unchecked(const ProfileSpec& spec, std::span<const double> x);

/// Convenience accessors for callers that know the arity.
Triple eval_triple(const ProfileSpec& spec, std::span<const double> x);
Pair eval_pair(const ProfileSpec& spec, std::span<const double> x);
bool is_triple(const ProfileSpec& spec);

/// True when alpha, beta satisfy alpha_1 = beta_1 > 0, alpha_2 = -beta_2 >= 0
/// and vanish beyond the second component (1D inputs have alpha_2 = 0).
bool in_symmetric_frame(const Direction& alpha, const Direction& beta, double tol = kFrameTolerance);

/// Approximate solutions built from the half-space pairs. `which_case` is 1
/// (one-sided profiles) or 2 (unstable profiles).
Pair eval_approx(int which_case, const Direction& alpha, const Direction& beta, double a, double b,
                 std::span<const double> x);

/// The underlying half-space pair (P, Q) for the same parameters.
Pair eval_halfpair(int which_case, const Direction& alpha, const Direction& beta, double a, double b,
                   std::span<const double> x);

}  // namespace membrane
