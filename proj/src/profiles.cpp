#include "membrane/profiles.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace membrane {

namespace {

double pos(double s) { return s > 0.0 ? s : 0.0; }
double neg(double s) { return s < 0.0 ? s : 0.0; }
double sq(double s) { return s * s; }

double coord(std::span<const double> x, int i) {
  return static_cast<std::size_t>(i) < x.size() ? x[static_cast<std::size_t>(i)] : 0.0;
}

Eigen::MatrixXd dense(const SymMatrix& m) {
  Eigen::MatrixXd out(m.dim(), m.dim());
  for (int i = 0; i < m.dim(); ++i)
    for (int j = 0; j < m.dim(); ++j) out(i, j) = m(i, j);
  return out;
}

ConstraintCheck unit_check(const std::string& name, const Direction& e) {
  const double err = std::abs(e.norm() - 1.0);
  return {name + " is a unit vector", err <= kUnitTolerance, kUnitTolerance - err};
}

ConstraintCheck equality_check(const std::string& name, double value, double target) {
  const double err = std::abs(value - target);
  return {name, err <= kPsdTolerance, kPsdTolerance - err};
}

ConstraintCheck dim_check(const std::string& name, int a, int b) {
  return {name, a == b, a == b ? 0.0 : -1.0};
}

}  // namespace

Direction Direction::unit(std::vector<double> c) {
  double n = 0.0;
  for (double v : c) n += v * v;
  n = std::sqrt(n);
  if (!(n > 0.0)) throw std::invalid_argument("cannot normalise a zero vector");
  for (double& v : c) v /= n;
  return Direction(std::move(c));
}

double Direction::dot(std::span<const double> x) const {
  double s = 0.0;
  const std::size_t m = std::min(components.size(), x.size());
  for (std::size_t i = 0; i < m; ++i) s += components[i] * x[i];
  return s;
}

double Direction::norm() const {
  double s = 0.0;
  for (double v : components) s += v * v;
  return std::sqrt(s);
}

double distance(const Direction& a, const Direction& b) {
  const int d = std::max(a.dim(), b.dim());
  double s = 0.0;
  for (int i = 0; i < d; ++i) s += sq(a[i] - b[i]);
  return std::sqrt(s);
}

SymMatrix::SymMatrix(int dim) : dim_(dim), upper_(static_cast<std::size_t>(dim * (dim + 1) / 2), 0.0) {
  if (dim < 1) throw std::invalid_argument("matrix dimension must be positive");
}

SymMatrix SymMatrix::identity(int dim, double scale) {
  SymMatrix m(dim);
  for (int i = 0; i < dim; ++i) m.set(i, i, scale);
  return m;
}

SymMatrix SymMatrix::from_rows(int dim, std::span<const double> rows) {
  if (rows.size() != static_cast<std::size_t>(dim * dim)) throw std::invalid_argument("matrix entry count mismatch");
  SymMatrix m(dim);
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j) m.set(i, j, rows[static_cast<std::size_t>(i * dim + j)]);
  return m;
}

SymMatrix SymMatrix::outer(const Direction& e) {
  SymMatrix m(e.dim());
  for (int i = 0; i < e.dim(); ++i)
    for (int j = i; j < e.dim(); ++j) m.set(i, j, e[i] * e[j]);
  return m;
}

std::size_t SymMatrix::slot(int i, int j) const {
  if (i > j) std::swap(i, j);
  if (i < 0 || j >= dim_) throw std::out_of_range("matrix index out of range");
  // Row i of the upper triangle starts after rows 0..i-1.
  return static_cast<std::size_t>(i * dim_ - i * (i - 1) / 2 + (j - i));
}

double SymMatrix::operator()(int i, int j) const { return upper_[slot(i, j)]; }
void SymMatrix::set(int i, int j, double v) { upper_[slot(i, j)] = v; }

double SymMatrix::trace() const {
  double t = 0.0;
  for (int i = 0; i < dim_; ++i) t += (*this)(i, i);
  return t;
}

double SymMatrix::quad(std::span<const double> x) const {
  double s = 0.0;
  for (int i = 0; i < dim_; ++i) {
    const double xi = coord(x, i);
    s += (*this)(i, i) * xi * xi;
    for (int j = i + 1; j < dim_; ++j) s += 2.0 * (*this)(i, j) * xi * coord(x, j);
  }
  return s;
}

std::vector<double> SymMatrix::apply(std::span<const double> x) const {
  std::vector<double> out(static_cast<std::size_t>(dim_), 0.0);
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j) out[static_cast<std::size_t>(i)] += (*this)(i, j) * coord(x, j);
  return out;
}

double SymMatrix::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense(*this), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double SymMatrix::max_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense(*this), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

SymMatrix SymMatrix::operator+(const SymMatrix& o) const {
  if (o.dim_ != dim_) throw std::invalid_argument("matrix dimension mismatch");
  SymMatrix m = *this;
  for (std::size_t k = 0; k < upper_.size(); ++k) m.upper_[k] += o.upper_[k];
  return m;
}

SymMatrix SymMatrix::operator*(double s) const {
  SymMatrix m = *this;
  for (double& v : m.upper_) v *= s;
  return m;
}

std::string profile_name(const ProfileSpec& spec) {
  static const char* names[] = {"SH", "UH", "HybridEB", "HybridBE", "Parabola", "HalfPairR", "HalfPairS",
                                "Approx1", "Approx2", "ObstacleHalf"};
  return names[spec.index()];
}

bool ValidationReport::ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const ConstraintCheck& c) { return c.passed; });
}

std::string ValidationReport::failures() const {
  std::ostringstream os;
  bool first = true;
  for (const auto& c : checks) {
    if (c.passed) continue;
    if (!first) os << "; ";
    os << c.name << " violated (margin " << c.margin << ")";
    first = false;
  }
  return os.str();
}

bool in_symmetric_frame(const Direction& alpha, const Direction& beta, double tol) {
  if (!(alpha[0] > 0.0)) return false;
  if (std::abs(alpha[0] - beta[0]) > tol) return false;
  if (std::abs(alpha[1] + beta[1]) > tol) return false;
  if (alpha[1] < -tol) return false;
  const int d = std::max(alpha.dim(), beta.dim());
  for (int k = 2; k < d; ++k)
    if (std::abs(alpha[k]) > tol || std::abs(beta[k]) > tol) return false;
  return true;
}

ValidationReport validate_spec(const ProfileSpec& spec) {
  ValidationReport r;
  auto& c = r.checks;
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, StableHalf> || std::is_same_v<T, UnstableHalf>) {
          c.push_back(unit_check("e", s.e));
        } else if constexpr (std::is_same_v<T, HybridEB> || std::is_same_v<T, HybridBE>) {
          c.push_back(unit_check("e", s.e));
          c.push_back(dim_check("dim(B) = dim(e)", s.B.dim(), s.e.dim()));
          if (s.B.dim() == s.e.dim()) {
            c.push_back(equality_check("trace(B)=1", s.B.trace(), 1.0));
            const double lam = (s.B * 3.0 - SymMatrix::outer(s.e)).min_eigenvalue();
            c.push_back({"3B - e(x)e >= 0", lam >= -kPsdTolerance, lam + kPsdTolerance});
          }
        } else if constexpr (std::is_same_v<T, Parabola>) {
          c.push_back(dim_check("dim(A) = dim(B)", s.A.dim(), s.B.dim()));
          if (s.A.dim() == s.B.dim()) {
            c.push_back(equality_check("trace(A)=1", s.A.trace(), 1.0));
            c.push_back(equality_check("trace(B)=-1", s.B.trace(), -1.0));
            const double lo = (s.A * 2.0 + s.B).min_eigenvalue();
            const double hi = (s.A + s.B * 2.0).max_eigenvalue();
            c.push_back({"2A+B >= 0", lo >= -kPsdTolerance, lo + kPsdTolerance});
            c.push_back({"A+2B <= 0", hi <= kPsdTolerance, kPsdTolerance - hi});
          }
        } else if constexpr (std::is_same_v<T, ObstacleHalf>) {
          c.push_back(unit_check("alpha", s.alpha));
        } else {
          c.push_back(unit_check("alpha", s.alpha));
          c.push_back(unit_check("beta", s.beta));
          if constexpr (std::is_same_v<T, Approx1> || std::is_same_v<T, Approx2>) {
            const bool frame = in_symmetric_frame(s.alpha, s.beta);
            c.push_back({"symmetric frame alpha_1=beta_1>0, alpha_2=-beta_2>=0", frame, frame ? 0.0 : -1.0});
          }
        }
      },
      spec);
  return r;
}

Pair eval_halfpair(int which_case, const Direction& alpha, const Direction& beta, double a, double b,
                   std::span<const double> x) {
  const double s = alpha.dot(x) - a;
  const double t = beta.dot(x) - b;
  if (which_case == 1) return {0.5 * sq(pos(s)), 0.5 * sq(pos(t))};
  if (which_case == 2) return {0.5 * sq(neg(s)) + 0.25 * sq(pos(t)), 0.25 * sq(neg(s)) + 0.5 * sq(pos(t))};
  throw std::invalid_argument("approximate solution case must be 1 or 2");
}

Pair eval_approx(int which_case, const Direction& alpha, const Direction& beta, double a, double b,
                 std::span<const double> x) {
  if (which_case != 1 && which_case != 2) throw std::invalid_argument("approximate solution case must be 1 or 2");
  if (!in_symmetric_frame(alpha, beta))
    throw std::invalid_argument("approximate solutions need alpha_1=beta_1>0, alpha_2=-beta_2>=0");
  const double s = alpha.dot(x) - a;  // x.alpha - a
  const double t = beta.dot(x) - b;   // x.beta - b
  // 2 alpha_2 x_2 - a + b, which equals s - t in the symmetric frame.
  const double gap = 2.0 * alpha[1] * coord(x, 1) - a + b;
  const bool upper = alpha[1] * coord(x, 1) >= 0.5 * (a - b);
  const bool phi_kink = 2.0 * s - t < 0.0;  // (2 alpha - beta).x < 2a - b
  const bool psi_kink = 2.0 * t - s < 0.0;  // (2 beta - alpha).x < 2b - a
  Pair out;
  if (which_case == 1) {
    if (upper) {
      out.p = 0.5 * sq(pos(s));
      out.q = psi_kink ? 0.25 * sq(pos(s)) : 0.5 * sq(t) + 0.5 * sq(gap);
    } else {
      out.p = phi_kink ? 0.25 * sq(pos(t)) : 0.5 * sq(s) + 0.5 * sq(gap);
      out.q = 0.5 * sq(pos(t));
    }
    return out;
  }
  if (upper) return eval_halfpair(2, alpha, beta, a, b, x);
  out.p = phi_kink ? 0.5 * sq(s) + sq(gap) : 0.25 * sq(t) + 0.5 * sq(gap);
  out.q = psi_kink ? 0.25 * sq(s) + 0.5 * sq(gap) : 0.5 * sq(t) + sq(gap);
  return out;
}

ProfileValue eval_profile_unchecked(const ProfileSpec& spec, std::span<const double> x) {
  return std::visit(
      [&](const auto& s) -> ProfileValue {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, StableHalf>) {
          const double u1 = 0.5 * sq(pos(s.e.dot(x)));
          return Triple{u1, 0.0, -u1};
        } else if constexpr (std::is_same_v<T, UnstableHalf>) {
          const double y = s.e.dot(x);
          const double u1 = 0.5 * sq(neg(y)) + 0.25 * sq(pos(y));
          const double u3 = -0.25 * sq(neg(y)) - 0.5 * sq(pos(y));
          return Triple{u1, -u1 - u3, u3};
        } else if constexpr (std::is_same_v<T, HybridEB>) {
          const double bx = s.B.quad(x);
          const double u1 = 0.25 * sq(pos(s.e.dot(x))) + 0.25 * bx;
          const double u3 = -0.5 * bx;
          return Triple{u1, -u1 - u3, u3};
        } else if constexpr (std::is_same_v<T, HybridBE>) {
          const double bx = s.B.quad(x);
          const double u1 = 0.5 * bx;
          const double u3 = -0.25 * sq(pos(s.e.dot(x))) - 0.25 * bx;
          return Triple{u1, -u1 - u3, u3};
        } else if constexpr (std::is_same_v<T, Parabola>) {
          const double u1 = 0.5 * s.A.quad(x);
          const double u3 = 0.5 * s.B.quad(x);
          return Triple{u1, -u1 - u3, u3};
        } else if constexpr (std::is_same_v<T, HalfPairR>) {
          return eval_halfpair(1, s.alpha, s.beta, s.a, s.b, x);
        } else if constexpr (std::is_same_v<T, HalfPairS>) {
          return eval_halfpair(2, s.alpha, s.beta, s.a, s.b, x);
        } else if constexpr (std::is_same_v<T, Approx1>) {
          return eval_approx(1, s.alpha, s.beta, s.a, s.b, x);
        } else if constexpr (std::is_same_v<T, Approx2>) {
          return eval_approx(2, s.alpha, s.beta, s.a, s.b, x);
        } else {
          return 0.5 * sq(pos(s.alpha.dot(x) - s.a));
        }
      },
      spec);
}

ProfileValue eval_profile(const ProfileSpec& spec, std::span<const double> x) {
  const ValidationReport r = validate_spec(spec);
  if (!r.ok()) throw std::invalid_argument("invalid " + profile_name(spec) + " profile: " + r.failures());
  return eval_profile_unchecked(spec, x);
}

bool is_triple(const ProfileSpec& spec) { return spec.index() <= 4; }

Triple eval_triple(const ProfileSpec& spec, std::span<const double> x) {
  const ProfileValue v = eval_profile_unchecked(spec, x);
  if (const auto* t = std::get_if<Triple>(&v)) return *t;
  throw std::invalid_argument(profile_name(spec) + " is not a membrane triple");
}

Pair eval_pair(const ProfileSpec& spec, std::span<const double> x) {
  const ProfileValue v = eval_profile_unchecked(spec, x);
  if (const auto* p = std::get_if<Pair>(&v)) return *p;
  if (const auto* t = std::get_if<Triple>(&v)) return {t->u1, -t->u3};
  throw std::invalid_argument(profile_name(spec) + " has no pair view");
}

}  // namespace membrane
