#include "membrane/classify.hpp"
#include "membrane/energy.hpp"
#include "membrane/freeboundary.hpp"
#include "membrane/lab.hpp"
#include "membrane/thresholds.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <stdexcept>

namespace membrane::lab {

using json = nlohmann::ordered_json;

namespace {

std::string num(double v) { return std::isfinite(v) ? format_number(v) : "nan"; }
std::string flag(bool b) { return b ? "true" : "false"; }
json jnum(double v) { return std::isfinite(v) ? json(report_number(v)) : json(nullptr); }

ReportBundle start(const ExperimentConfig& c) {
  ReportBundle b;
  b.experiment = c.experiment;
  b.summary["experiment"] = c.experiment;
  json cfg = json::object();
  for (const auto& [k, v] : c.echo()) cfg[k] = v;
  b.summary["config"] = cfg;
  b.summary["constants"] = json::object();
  return b;
}

void finish(ReportBundle& b, const json& verdicts) {
  bool pass = true;
  for (const auto& [k, v] : verdicts.items()) pass = pass && v.get<bool>();
  b.summary["verdicts"] = verdicts;
  b.summary["pass"] = pass;
  b.pass = pass;
}

double max_over_min(const std::vector<double>& v) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (double x : v) {
    if (!std::isfinite(x) || x <= 0.0) return std::numeric_limits<double>::infinity();
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  return v.empty() ? std::numeric_limits<double>::infinity() : hi / lo;
}

// ---------------------------------------------------------------- perturbations

constexpr int kLocalPower = 4;
constexpr int kFourierSamples = 64;

double local_envelope(double t) { return std::pow(0.5 * (1.0 + std::cos(t)), kLocalPower); }

FourierSeries to_fourier(const std::function<double(double)>& f, int degree) {
  FourierSeries s;
  std::vector<double> v(kFourierSamples);
  for (int j = 0; j < kFourierSamples; ++j) v[static_cast<std::size_t>(j)] = f(2.0 * std::numbers::pi * j / kFourierSamples);
  auto clean = [](double x) { return std::abs(x) < 1e-14 ? 0.0 : x; };
  double m = 0.0;
  for (double x : v) m += x;
  s.a0 = clean(m / kFourierSamples);
  for (int k = 1; k <= degree; ++k) {
    double c = 0.0, d = 0.0;
    for (int j = 0; j < kFourierSamples; ++j) {
      const double t = 2.0 * std::numbers::pi * j / kFourierSamples;
      c += v[static_cast<std::size_t>(j)] * std::cos(k * t);
      d += v[static_cast<std::size_t>(j)] * std::sin(k * t);
    }
    s.a.push_back(clean(2.0 * c / kFourierSamples));
    s.b.push_back(clean(2.0 * d / kFourierSamples));
  }
  return s;
}

// Ratio gamma1(F) / gamma1(F cos): the cosine weight that cancels gamma1.
double balancing_weight() {
  static const double k = [] {
    const GammaValues g0 = gamma_functionals({local_envelope, 1.0});
    const GammaValues gc = gamma_functionals({[](double t) { return local_envelope(t) * std::cos(t); }, 1.0});
    return g0.gamma1 / gc.gamma1;
  }();
  return k;
}

struct LocalDesign {
  double a, b, a2, kphi, kpsi;
};

std::pair<FourierSeries, FourierSeries> localized(const LocalDesign& d) {
  auto phi = [d](double t) { return local_envelope(t) * (d.a + d.b * std::sin(t) - d.kphi * d.a * std::cos(t)); };
  auto psi = [d](double t) { return local_envelope(t) * (d.a2 - d.b * std::sin(t) - d.kpsi * d.a2 * std::cos(t)); };
  double peak = 0.0;
  for (int j = 0; j < 4096; ++j) {
    const double t = 2.0 * std::numbers::pi * j / 4096.0;
    peak = std::max(peak, std::abs(phi(t)) + std::abs(psi(t)));
  }
  const double s = 1.0 / peak;
  return {to_fourier([&](double t) { return s * phi(t); }, kLocalPower + 1),
          to_fourier([&](double t) { return s * psi(t); }, kLocalPower + 1)};
}

// ---------------------------------------------------------------- shared steps

ClassifyOptions classify_options() { return {}; }

json solve_json(const SolveReport& r) {
  return json{{"sweeps", r.sweeps}, {"converged", r.converged}, {"max_update", jnum(r.max_update)},
              {"energy", jnum(r.energy)}, {"omega", jnum(r.omega)}};
}

Table classes_table(const std::vector<PointClass>& classes) {
  Table t{"classes", {"x1", "x2", "verdict", "energy", "eps"}, {}};
  for (const auto& pc : classes)
    t.rows.push_back({num(pc.center[0]), num(pc.center[1]), verdict_name(pc.verdict), num(pc.energy), num(pc.epsilon)});
  return t;
}

std::vector<PointClass> classify_all(const MembraneStack& stack, const std::vector<Point>& points) {
  std::vector<PointClass> out;
  for (const Point& p : points) out.push_back(classify_point(stack, p, {}, classify_options()));
  return out;
}

std::vector<Point> within(const std::vector<Point>& pts, double r) {
  std::vector<Point> out;
  for (const Point& p : pts)
    if (std::hypot(p[0], p[1]) < r) out.push_back(p);
  return out;
}

struct GammaPair {
  GammaValues phi, psi;
  double d1() const { return phi.gamma1 - psi.gamma1; }
  double d2() const { return phi.gamma2 - psi.gamma2; }
};

GammaPair gammas_of(const FourierSeries& phi, const FourierSeries& psi) {
  return {gamma_functionals(phi.as_boundary()), gamma_functionals(psi.as_boundary())};
}

void record_perturbation(ReportBundle& b, const FourierSeries& phi, const FourierSeries& psi, const GammaPair* g) {
  auto series = [](const FourierSeries& f) {
    json c = json::array(), s = json::array();
    for (double x : f.a) c.push_back(jnum(x));
    for (double x : f.b) s.push_back(jnum(x));
    return json{{"a0", jnum(f.a0)}, {"cos", c}, {"sin", s}};
  };
  json& k = b.summary["constants"];
  k["phi"] = series(phi);
  k["psi"] = series(psi);
  k["left_arc_slack"] = jnum(left_arc_slack(phi, psi));
  k["sup_abs_phi_plus_abs_psi"] = jnum(phi.bound() + psi.bound());
  if (g) {
    k["gamma1_phi"] = jnum(g->phi.gamma1);
    k["gamma2_phi"] = jnum(g->phi.gamma2);
    k["gamma1_psi"] = jnum(g->psi.gamma1);
    k["gamma2_psi"] = jnum(g->psi.gamma2);
  }
}

std::vector<double> usable_radii(const ExperimentConfig& c) {
  std::vector<double> r = c.radii;
  std::sort(r.begin(), r.end());
  std::vector<double> out;
  for (double x : r)
    if (x >= thresholds::kMinRadiusCells * c.spacing * (1.0 - 1e-12)) out.push_back(x);
  if (static_cast<int>(out.size()) < thresholds::kMinScales)
    throw std::invalid_argument("key 'radii' needs at least " + std::to_string(thresholds::kMinScales) +
                                " values of at least 8 h");
  return out;
}

// Width decay of both free boundaries at an intersection point.
struct WidthAnalysis {
  Point x0{0.0, 0.0};
  FlatnessFit fit;
  std::vector<WidthRow> g1, g2;
  double log_band1 = 0.0, log_band2 = 0.0, lin_band1 = 0.0, lin_band2 = 0.0, constant_band = 0.0;
  bool log_bounded = false, linear_not_constant = false;
};

WidthAnalysis analyse_width(const MembraneStack& stack, const std::vector<Point>& points, const std::vector<double>& radii) {
  WidthAnalysis w;
  double cx = 0.0, cy = 0.0;
  for (const Point& p : points) {
    cx += p[0];
    cy += p[1];
  }
  cx /= static_cast<double>(points.size());
  cy /= static_cast<double>(points.size());
  double best = std::numeric_limits<double>::infinity();
  for (const Point& p : points) {
    const double d = std::hypot(p[0] - cx, p[1] - cy);
    if (d < best) {
      best = d;
      w.x0 = p;
    }
  }
  const Lattice& lat = stack.lattice();
  const double tol = 0.25 * lat.spacing() * lat.spacing();
  const auto contact = contact_sets(stack, tol);
  const GammaSet g1 = extract_gamma(lat, contact[0], stack.mask(), GammaLabel::Gamma1);
  const GammaSet g2 = extract_gamma(lat, contact[1], stack.mask(), GammaLabel::Gamma2);
  w.fit = fit_flatness(stack.u(), stack.w(), w.x0, radii.back(), FitMode::R);
  auto offset = [&](const Direction& d) { return d[0] * w.x0[0] + d[1] * w.x0[1]; };
  w.g1 = width_profile(g1, w.fit.alpha, offset(w.fit.alpha), radii, w.x0);
  w.g2 = width_profile(g2, w.fit.beta, offset(w.fit.beta), radii, w.x0);
  auto col = [](const std::vector<WidthRow>& rows, double WidthRow::*f) {
    std::vector<double> v;
    for (const auto& r : rows) v.push_back(r.*f);
    return v;
  };
  w.log_band1 = max_over_min(col(w.g1, &WidthRow::log_ratio));
  w.log_band2 = max_over_min(col(w.g2, &WidthRow::log_ratio));
  w.lin_band1 = max_over_min(col(w.g1, &WidthRow::linear_ratio));
  w.lin_band2 = max_over_min(col(w.g2, &WidthRow::linear_ratio));
  w.constant_band = thresholds::constant_band(radii.front(), radii.back());
  w.log_bounded = w.log_band1 <= thresholds::kLogBand && w.log_band2 <= thresholds::kLogBand;
  w.linear_not_constant = w.lin_band1 > w.constant_band && w.lin_band2 > w.constant_band;
  return w;
}

// Weiss series at the intersection point over the radii that stay inside the domain.
WeissSeries weiss_at_point(const MembraneStack& stack, const Point& x0, const std::vector<double>& radii) {
  const Lattice& lat = stack.lattice();
  std::vector<double> usable;
  for (double r : radii)
    if (r + std::hypot(x0[0], x0[1]) <= lat.half_width() - 2.0 * lat.spacing()) usable.push_back(r);
  return weiss_series(stack, x0, usable);
}

Table series_table(const std::string& name, const WeissSeries& s) {
  Table t{name, {"r", "value", "kind"}, {}};
  for (std::size_t i = 0; i < s.radii.size(); ++i) t.rows.push_back({num(s.radii[i]), num(s.values[i]), kind_name(s.kind)});
  return t;
}

Table width_table(const WidthAnalysis& w) {
  Table t{"width", {"gamma", "r", "width", "width_log_ratio", "width_over_r", "points"}, {}};
  for (const auto* rows : {&w.g1, &w.g2})
    for (const auto& r : *rows)
      t.rows.push_back({rows == &w.g1 ? "gamma1" : "gamma2", num(r.r), num(r.width), num(r.log_ratio),
                        num(r.linear_ratio), std::to_string(r.points)});
  return t;
}

void record_width(ReportBundle& b, const WidthAnalysis& w) {
  json& k = b.summary["constants"];
  k["width_center"] = json::array({jnum(w.x0[0]), jnum(w.x0[1])});
  k["fit_alpha"] = json::array({jnum(w.fit.alpha[0]), jnum(w.fit.alpha[1])});
  k["fit_beta"] = json::array({jnum(w.fit.beta[0]), jnum(w.fit.beta[1])});
  k["fit_epsilon"] = jnum(w.fit.epsilon);
  k["log_band_gamma1"] = jnum(w.log_band1);
  k["log_band_gamma2"] = jnum(w.log_band2);
  k["linear_band_gamma1"] = jnum(w.lin_band1);
  k["linear_band_gamma2"] = jnum(w.lin_band2);
  k["constant_band_threshold"] = jnum(w.constant_band);
}

// ---------------------------------------------------------------- experiments

ReportBundle run_energy_table(const ExperimentConfig& c) {
  ReportBundle b = start(c);
  const EnergyTable t = energy_table(c.dim, c.spacing, c.seed, c.draws);
  const double expected[] = {1.0, 1.5, 1.75, 2.0};
  const double values[] = {t.W0, t.W1, t.W2, t.W3};
  const char* names[] = {"W0", "W1", "W2", "W3"};
  Table tab{"table", {"family", "value", "ratio", "expected_ratio"}, {}};
  json verdicts = json::object();
  for (int k = 0; k < 4; ++k) {
    tab.rows.push_back({names[k], num(values[k]), num(t.ratio(k)), num(expected[k])});
    if (k > 0)
      verdicts[std::string("ratio_") + names[k]] = std::abs(t.ratio(k) - expected[k]) <= thresholds::kRatioTolerance;
  }
  Table draws{"draws", {"family", "index", "value"}, {}};
  for (std::size_t i = 0; i < t.hybrid_values.size(); ++i) draws.rows.push_back({"hybrid", std::to_string(i), num(t.hybrid_values[i])});
  for (std::size_t i = 0; i < t.parabola_values.size(); ++i)
    draws.rows.push_back({"parabola", std::to_string(i), num(t.parabola_values[i])});
  json& k = b.summary["constants"];
  for (int i = 0; i < 4; ++i) k[names[i]] = jnum(values[i]);
  k["hybrid_spread"] = jnum(t.hybrid_spread);
  k["parabola_spread"] = jnum(t.parabola_spread);
  verdicts["hybrid_spread"] = t.hybrid_spread <= thresholds::kSpreadTolerance;
  verdicts["parabola_spread"] = t.parabola_spread <= thresholds::kSpreadTolerance;
  if (c.dim == 1) verdicts["w0_anchor"] = std::abs(t.W0 - 1.0 / 6.0) <= thresholds::kW0AnchorTolerance;
  b.tables = {tab, draws};
  finish(b, verdicts);
  return b;
}

struct Solved {
  FourierSeries phi, psi;
  SolveResult result;
};

Solved solve_perturbed(const ExperimentConfig& c) {
  auto [phi, psi] = make_perturbation(c);
  MembraneProblem p = perturbed_problem(c, phi, psi);
  return {phi, psi, solve_membranes(p)};
}

ReportBundle run_clog_width(const ExperimentConfig& c) {
  ReportBundle b = start(c);
  const std::vector<double> radii = usable_radii(c);
  Solved s = solve_perturbed(c);
  const GammaPair g = gammas_of(s.phi, s.psi);
  record_perturbation(b, s.phi, s.psi, &g);
  b.summary["solve"] = solve_json(s.result.report);
  const auto pts = intersection_points(s.result.stack, c.inner_radius, classify_options());
  b.summary["constants"]["intersection_points"] = pts.size();
  json verdicts{{"solver_converged", s.result.report.converged}, {"intersection_nonempty", !pts.empty()}};
  if (!pts.empty()) {
    const WidthAnalysis w = analyse_width(s.result.stack, pts, radii);
    record_width(b, w);
    b.tables.push_back(width_table(w));
    const WeissSeries ws = weiss_at_point(s.result.stack, w.x0, radii);
    b.tables.push_back(series_table("weiss", ws));
    verdicts["log_band_bounded"] = w.log_bounded;
    verdicts["width_over_r_not_constant"] = w.linear_not_constant;
    verdicts["weiss_monotone"] = ws.monotone;
  }
  finish(b, verdicts);
  return b;
}

ReportBundle run_generic_regular(const ExperimentConfig& c) {
  ReportBundle b = start(c);
  const std::vector<double> radii = usable_radii(c);
  Solved s = solve_perturbed(c);
  const GammaPair g = gammas_of(s.phi, s.psi);
  record_perturbation(b, s.phi, s.psi, &g);
  b.summary["solve"] = solve_json(s.result.report);
  const MembraneStack& stack = s.result.stack;
  const auto all = intersection_points(stack, c.half_width, classify_options());

  // Alternative 1 holds at r0 when B_{r0/4} has no intersection point,
  // alternative 2 when B_{r0} has one; r0 is swept rather than fixed.
  Table alt{"alternatives", {"r0", "predicted", "quarter_ball_empty", "ball_nonempty", "predicted_holds"}, {}};
  double first1 = std::numeric_limits<double>::quiet_NaN(), first2 = first1;
  for (double r0 : {1.0 / 16, 1.0 / 8, 1.0 / 4, 1.0 / 2, 1.0}) {
    if (r0 > c.half_width) break;
    const int predicted = std::abs(g.d1()) >= 0.5 * r0 * std::abs(g.d2()) ? 1 : 2;
    const bool empty_quarter = within(all, 0.25 * r0).empty();
    const bool nonempty = !within(all, r0).empty();
    if (empty_quarter && std::isnan(first1)) first1 = r0;
    if (nonempty && std::isnan(first2)) first2 = r0;
    alt.rows.push_back({num(r0), std::to_string(predicted), flag(empty_quarter), flag(nonempty),
                        flag(predicted == 1 ? empty_quarter : nonempty)});
  }
  json& k = b.summary["constants"];
  k["smallest_r0_alternative1"] = jnum(first1);
  k["smallest_r0_alternative2"] = jnum(first2);

  const int regime = std::abs(g.d1()) >= 0.5 * c.inner_radius * std::abs(g.d2()) ? 1 : 2;
  k["regime"] = regime;
  const auto inner = within(all, c.inner_radius);
  const auto classes = classify_all(stack, inner);
  k["intersection_points"] = inner.size();
  b.tables = {alt, classes_table(classes)};
  json verdicts{{"solver_converged", s.result.report.converged}, {"gamma2_differs", std::abs(g.d2()) > 1e-6}};
  if (regime == 1) {
    verdicts["intersection_empty"] = inner.empty();
  } else {
    verdicts["intersection_nonempty"] = !inner.empty();
    if (!inner.empty()) {
      const WidthAnalysis w = analyse_width(stack, inner, radii);
      record_width(b, w);
      b.tables.push_back(width_table(w));
      const WeissSeries ws = weiss_at_point(stack, w.x0, radii);
      b.tables.push_back(series_table("weiss", ws));
      verdicts["log_band_bounded"] = w.log_bounded;
      verdicts["width_over_r_not_constant"] = w.linear_not_constant;
      verdicts["weiss_monotone"] = ws.monotone;
    }
  }
  finish(b, verdicts);
  return b;
}

ReportBundle run_sing1_instability(const ExperimentConfig& c) {
  ReportBundle b = start(c);
  Solved s = solve_perturbed(c);
  b.summary["solve"] = solve_json(s.result.report);
  const MembraneStack& stack = s.result.stack;
  const bool control = c.amplitude == 0.0 || c.perturbation == "none";
  json verdicts{{"solver_converged", s.result.report.converged}};
  if (control) {
    record_perturbation(b, s.phi, s.psi, nullptr);
    const ClassifyOptions opt = classify_options();
    const bool on = on_both_free_boundaries(stack, {0.0, 0.0}, opt);
    std::vector<PointClass> classes;
    if (on) classes.push_back(classify_point(stack, {0.0, 0.0}, {}, opt));
    b.tables = {classes_table(classes)};
    verdicts["center_on_both_free_boundaries"] = on;
    verdicts["center_is_sing1"] = on && classes.front().verdict == Verdict::Sing1;
    finish(b, verdicts);
    return b;
  }
  const GammaPair g = gammas_of(s.phi, s.psi);
  record_perturbation(b, s.phi, s.psi, &g);
  const auto pts = intersection_points(stack, c.inner_radius, classify_options());
  const auto classes = classify_all(stack, pts);
  std::map<Verdict, int> counts;
  for (Verdict v : {Verdict::Reg, Verdict::Sing1, Verdict::Sing2, Verdict::Hybrid, Verdict::Undetermined}) counts[v] = 0;
  for (const auto& pc : classes) ++counts[pc.verdict];
  Table ct{"counts", {"verdict", "count"}, {}};
  for (const auto& [v, n] : counts) ct.rows.push_back({verdict_name(v), std::to_string(n)});
  b.tables = {ct, classes_table(classes)};
  b.summary["constants"]["intersection_points"] = pts.size();
  verdicts["gamma2_differs"] = std::abs(g.d2()) > 1e-6;
  verdicts["no_sing1"] = counts[Verdict::Sing1] == 0;
  finish(b, verdicts);
  return b;
}

SymMatrix diag_matrix(const std::vector<double>& d) {
  SymMatrix m(static_cast<int>(d.size()));
  for (std::size_t i = 0; i < d.size(); ++i) m.set(static_cast<int>(i), static_cast<int>(i), d[i]);
  return m;
}

ReportBundle run_monneau_sing2(const ExperimentConfig& c) {
  ReportBundle b = start(c);
  std::vector<double> radii = c.radii;
  std::sort(radii.begin(), radii.end());
  const Lattice lat(c.dim, c.half_width, c.spacing);
  const auto mask = ball_mask(lat, c.half_width);
  const int d = c.dim;
  const SymMatrix A = d == 2 ? diag_matrix({0.6, 0.4}) : diag_matrix({1.0});
  const SymMatrix B = d == 2 ? diag_matrix({-0.4, -0.6}) : diag_matrix({-1.0});

  // Three membranes: boundary data from the parabola stack (plus an optional
  // perturbation of u1 and u3 along the boundary).
  MembraneStack data = sample_stack(Parabola{A, B}, lat, mask);
  auto [phi, psi] = make_perturbation(c);
  if (c.amplitude > 0.0) {
    for (std::size_t k = 0; k < lat.node_count(); ++k) {
      if (mask[k]) continue;
      const Point x = lat.point(k);
      const double th = std::atan2(x[1], x[0]);
      const double u1 = data.fields[0][k] + c.amplitude * phi(th), u3 = data.fields[2][k] - c.amplitude * psi(th);
      const double v[3] = {u1, -u1 - u3, u3}, w[3] = {1.0, 1.0, 1.0};
      const auto p = pava_decreasing(v, w);
      for (int m = 0; m < 3; ++m) data.fields[static_cast<std::size_t>(m)][k] = p[static_cast<std::size_t>(m)];
    }
  }
  record_perturbation(b, phi, psi, nullptr);
  const SolveResult r3 = solve_membranes(MembraneProblem::from_stack(data));
  const WeissSeries m3 = monneau_series(r3.stack, {A, (A + B) * -1.0, B}, {0.0, 0.0}, radii);
  const WeissSeries w3 = weiss_series(r3.stack, {0.0, 0.0}, radii);

  // Four membranes with forces (1.5, 0.5, -0.5, -1.5) and A_k = f_k I / d.
  const std::vector<double> f4{1.5, 0.5, -0.5, -1.5};
  std::vector<SymMatrix> par4;
  MembraneStack s4;
  s4.forces = f4;
  for (double f : f4) {
    par4.push_back(SymMatrix::identity(d, f / d));
    const SymMatrix& P = par4.back();
    s4.fields.push_back(sample(lat, [&](const Point& x) {
      return 0.5 * P.quad(std::span<const double>(x.data(), static_cast<std::size_t>(d)));
    }));
    s4.fields.back().mask = mask;
  }
  const SolveResult r4 = solve_membranes(MembraneProblem::from_stack(s4));
  const WeissSeries m4 = monneau_series(r4.stack, par4, {0.0, 0.0}, radii);

  b.summary["solve_n3"] = solve_json(r3.report);
  b.summary["solve_n4"] = solve_json(r4.report);
  json& k = b.summary["constants"];
  k["monneau_n3_worst_drop"] = jnum(m3.worst_drop);
  k["monneau_n4_worst_drop"] = jnum(m4.worst_drop);
  k["weiss_n3_worst_drop"] = jnum(w3.worst_drop);
  k["slack"] = jnum(m3.slack);
  b.tables = {series_table("monneau_n3", m3), series_table("monneau_n4", m4), series_table("weiss_n3", w3)};
  finish(b, json{{"solver_converged", r3.report.converged && r4.report.converged},
                 {"monneau_n3_monotone", m3.monotone},
                 {"monneau_n4_monotone", m4.monotone},
                 {"weiss_n3_monotone", w3.monotone}});
  return b;
}

// Free-boundary crossing of row j nearest to x_target, located to sub-cell
// accuracy through the linear profile of sqrt(2u) next to the boundary.
double row_crossing(const ScalarField& u, int j, double x_target) {
  const Lattice& lat = u.lattice;
  const int n = lat.nodes_per_axis();
  const double h = lat.spacing();
  double best = std::numeric_limits<double>::quiet_NaN(), dist = std::numeric_limits<double>::infinity();
  for (int i = 0; i + 2 < n; ++i) {
    const std::size_t k0 = lat.flat(i, j), k1 = lat.flat(i + 1, j), k2 = lat.flat(i + 2, j);
    if (!u.mask[k0] || !u.mask[k1] || !u.mask[k2]) continue;
    if (!(u.values[k0] == 0.0 && u.values[k1] > 0.0)) continue;
    const double s1 = std::sqrt(2.0 * u.values[k1]), s2 = std::sqrt(2.0 * u.values[k2]);
    const double x1 = lat.coordinate(i + 1);
    const double x = s2 > s1 ? x1 - s1 * h / (s2 - s1) : x1 - 0.5 * h;
    if (std::abs(x - x_target) < dist) {
      dist = std::abs(x - x_target);
      best = x;
    }
  }
  return best;
}

ReportBundle run_obstacle_flatness(const ExperimentConfig& c) {
  ReportBundle b = start(c);
  const std::vector<double> radii = usable_radii(c);
  auto [phi, psi] = make_perturbation(c);
  record_perturbation(b, phi, psi, nullptr);
  const Lattice lat(2, c.half_width, c.spacing);
  ScalarField data(lat);
  data.mask = ball_mask(lat, c.half_width);
  for (std::size_t k = 0; k < lat.node_count(); ++k) {
    const Point x = lat.point(k);
    const double base = 0.5 * std::pow(std::max(x[0], 0.0), 2);
    data.values[k] = std::max(0.0, base + c.amplitude * phi(std::atan2(x[1], x[0])));
  }
  const ObstacleResult res = solve_obstacle(data);
  b.summary["solve"] = solve_json(res.report);
  const int cidx = lat.center_index();
  const double x0 = row_crossing(res.field, cidx, 0.0);
  if (std::isnan(x0)) throw std::runtime_error("no free boundary crossing on the center row");
  const double h = lat.spacing();
  Table t{"flatness", {"r", "flatness", "rows"}, {}};
  std::vector<double> lr, lf;
  bool all_found = true;
  for (double r : radii) {
    std::vector<double> ys, xs;
    const int span = static_cast<int>(std::floor(r / h + 1e-9));
    for (int dj = -span; dj <= span; ++dj) {
      const double x = row_crossing(res.field, cidx + dj, x0);
      if (std::isnan(x)) {
        all_found = false;
        continue;
      }
      ys.push_back(dj * h);
      xs.push_back(x);
    }
    // Least-squares line x = p + q y; flatness = sup residual / r.
    double my = 0.0, mx = 0.0;
    for (std::size_t i = 0; i < ys.size(); ++i) {
      my += ys[i];
      mx += xs[i];
    }
    my /= static_cast<double>(ys.size());
    mx /= static_cast<double>(ys.size());
    double sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < ys.size(); ++i) {
      sxy += (ys[i] - my) * (xs[i] - mx);
      syy += (ys[i] - my) * (ys[i] - my);
    }
    const double q = syy > 0.0 ? sxy / syy : 0.0;
    double worst = 0.0;
    for (std::size_t i = 0; i < ys.size(); ++i) worst = std::max(worst, std::abs(xs[i] - (mx + q * (ys[i] - my))));
    const double flat = worst / r;
    t.rows.push_back({num(r), num(flat), std::to_string(ys.size())});
    lr.push_back(std::log(r));
    lf.push_back(std::log(std::max(flat, 1e-300)));
  }
  double mr = 0.0, mf = 0.0;
  for (std::size_t i = 0; i < lr.size(); ++i) {
    mr += lr[i];
    mf += lf[i];
  }
  mr /= static_cast<double>(lr.size());
  mf /= static_cast<double>(lr.size());
  double num_s = 0.0, den = 0.0;
  for (std::size_t i = 0; i < lr.size(); ++i) {
    num_s += (lr[i] - mr) * (lf[i] - mf);
    den += (lr[i] - mr) * (lr[i] - mr);
  }
  const double exponent = num_s / den;
  b.summary["constants"]["free_boundary_x0"] = jnum(x0);
  b.summary["constants"]["decay_exponent"] = jnum(exponent);
  b.tables = {t};
  finish(b, json{{"solver_converged", res.report.converged},
                 {"graph_found_on_every_row", all_found},
                 {"flatness_decays", exponent > thresholds::kObstacleMinExponent}});
  return b;
}

ReportBundle run_aux_function(const ExperimentConfig& c) {
  ReportBundle b = start(c);
  const AuxConstants k = aux_constants();
  const double A1 = 1.0 / std::numbers::pi, d12 = 2.0 * std::numbers::ln2 / std::numbers::pi;
  Table ct{"constants", {"name", "value", "closed_form"}, {}};
  ct.rows = {{"A1", num(k.A1), num(A1)}, {"d12h0", num(k.d12), num(d12)}, {"A2", num(k.A2), num(d12 / std::numbers::ln2)}};
  const RemainderCheck stated = aux_remainder_check(c.radii, 1);
  const RemainderCheck flipped = aux_remainder_check(c.radii, -1);
  const RemainderCheck nolog = aux_remainder_check(c.radii, 0);
  auto table = [](const std::string& name, const RemainderCheck& r) {
    Table t{name, {"r", "C"}, {}};
    for (const auto& row : r.rows) t.rows.push_back({num(row.r), num(row.C)});
    return t;
  };
  b.tables = {ct, table("remainder", stated), table("remainder_flipped_sign", flipped), table("remainder_without_log", nolog)};
  json& j = b.summary["constants"];
  j["A1"] = jnum(k.A1);
  j["d12h0"] = jnum(k.d12);
  j["A2"] = jnum(k.A2);
  j["band_stated"] = jnum(stated.band_ratio);
  j["band_flipped_sign"] = jnum(flipped.band_ratio);
  j["band_without_log"] = jnum(nolog.band_ratio);
  finish(b, json{{"A1_closed_form", std::abs(k.A1 - A1) <= thresholds::kAuxConstantTolerance},
                 {"d12_closed_form", std::abs(k.d12 - d12) <= thresholds::kAuxConstantTolerance},
                 {"positive_constants", k.A1 > 0.0 && k.A2 > 0.0},
                 {"stated_sign_bounded", stated.pass},
                 {"log_term_detected", !nolog.pass}});
  return b;
}

}  // namespace

double left_arc_slack(const FourierSeries& phi, const FourierSeries& psi) {
  double worst = std::numeric_limits<double>::infinity();
  for (int j = 0; j <= 4096; ++j) {
    const double t = 0.5 * std::numbers::pi + std::numbers::pi * j / 4096.0;
    const double f = phi(t), g = psi(t);
    worst = std::min({worst, g - f, 2.0 * f - g});
  }
  return worst;
}

std::pair<FourierSeries, FourierSeries> make_perturbation(const ExperimentConfig& c) {
  if (c.perturbation == "none") return {FourierSeries{}, FourierSeries{}};
  if (c.perturbation == "fourier") return {c.phi, c.psi};
  const double k = balancing_weight();
  if (c.perturbation == "balanced") return localized({1.0, 0.2, 1.4, k, k});
  // 1.4 k_psi must stay within [k_phi, 2 k_phi] for phi <= psi <= 2 phi on the left arc.
  if (c.perturbation == "split") return localized({1.0, 0.2, 1.4, 2.0, 2.5});
  // random: b in [0.1, 0.2] with a random sign, a2 in [1 + 2|b|, 2 - 3|b|].
  std::mt19937_64 rng(c.seed);
  std::uniform_real_distribution<double> ub(0.1, 0.2), u01(0.0, 1.0);
  const double mag = ub(rng);
  const double sign = u01(rng) < 0.5 ? -1.0 : 1.0;
  const double a2 = 1.0 + 2.0 * mag + u01(rng) * (1.0 - 5.0 * mag);
  return localized({1.0, sign * mag, a2, k, k});
}

MembraneProblem perturbed_problem(const ExperimentConfig& c, const FourierSeries& phi, const FourierSeries& psi) {
  if (c.dim != 2) throw std::invalid_argument("perturbed problems are planar");
  if (c.profile != "sh" && c.profile != "uh") throw std::invalid_argument("perturbed problems need profile sh or uh");
  const Lattice lat(2, c.half_width, c.spacing);
  const ProfileSpec base = c.profile == "sh" ? ProfileSpec(StableHalf{Direction({1.0, 0.0})})
                                             : ProfileSpec(UnstableHalf{Direction({1.0, 0.0})});
  MembraneProblem p{{1.0, 0.0, -1.0}, lat, ball_mask(lat, c.half_width), {}};
  p.boundary.assign(3, std::vector<double>(lat.node_count(), 0.0));
  for (std::size_t k = 0; k < lat.node_count(); ++k) {
    if (p.mask[k]) continue;
    const Point x = lat.point(k);
    const double th = std::atan2(x[1], x[0]);
    const Triple t = eval_triple(base, std::span<const double>(x.data(), 2));
    const double u1 = t.u1 + c.amplitude * phi(th), u3 = t.u3 - c.amplitude * psi(th);
    const double v[3] = {u1, -u1 - u3, u3}, w[3] = {1.0, 1.0, 1.0};
    const auto q = pava_decreasing(v, w);
    for (int m = 0; m < 3; ++m) p.boundary[static_cast<std::size_t>(m)][k] = q[static_cast<std::size_t>(m)];
  }
  return p;
}

ReportBundle run_experiment(const ExperimentConfig& c) {
  if (c.experiment == "energy-table") return run_energy_table(c);
  if (c.experiment == "clog-width") return run_clog_width(c);
  if (c.experiment == "generic-regular") return run_generic_regular(c);
  if (c.experiment == "sing1-instability") return run_sing1_instability(c);
  if (c.experiment == "monneau-sing2") return run_monneau_sing2(c);
  if (c.experiment == "obstacle-flatness") return run_obstacle_flatness(c);
  if (c.experiment == "aux-function") return run_aux_function(c);
  std::string list;
  for (const auto& n : registered_experiments()) list += (list.empty() ? "" : ", ") + n;
  throw std::invalid_argument("unknown experiment '" + c.experiment + "'; registered: " + list);
}

}  // namespace membrane::lab
