#pragma once

#include "membrane/grid.hpp"
#include "membrane/profiles.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace membrane {

/// Ordered stack (u_1, ..., u_N) on a shared lattice and mask.
struct MembraneStack {
  std::vector<ScalarField> fields;
  std::vector<double> forces;

  int count() const { return static_cast<int>(fields.size()); }
  const Lattice& lattice() const { return fields.front().lattice; }
  const std::vector<std::uint8_t>& mask() const { return fields.front().mask; }

  /// Pair view (u, w) = (u_1, -u_N); meaningful for N = 3.
  ScalarField u() const;
  ScalarField w() const;
};

/// Samples a three-membrane profile on every lattice node; forces (1, 0, -1).
MembraneStack sample_stack(const ProfileSpec& spec, const Lattice& lat, std::vector<std::uint8_t> mask);
MembraneStack sample_stack(const ProfileSpec& spec, const Lattice& lat);

/// Ordered-membrane minimization problem. `boundary[k]` holds values on every
/// node; entries outside the mask are the Dirichlet data, the rest is ignored.
struct MembraneProblem {
  std::vector<double> forces;
  Lattice lattice;
  std::vector<std::uint8_t> mask;
  std::vector<std::vector<double>> boundary;
  double tolerance = 1e-10;
  int max_sweeps = -1;  // negative: 200 * nodes per axis
  double omega = 0.0;   // 0: automatic over-relaxation; 1: plain Gauss-Seidel
  int workers = 0;      // 0: from the environment

  /// Boundary data taken from a sampled stack (values outside its mask).
  static MembraneProblem from_stack(const MembraneStack& data);
};

struct SolveReport {
  int sweeps = 0;
  double max_update = 0.0;
  double energy = 0.0;
  std::vector<double> energy_history;  // after each sweep
  bool converged = false;
  double omega = 1.0;
};

struct SolveResult {
  MembraneStack stack;
  SolveReport report;
};

/// Weighted least-squares projection onto non-increasing sequences.
std::vector<double> pava_decreasing(std::span<const double> values, std::span<const double> weights);

/// Throws std::invalid_argument on malformed problems (ordering of boundary
/// data, forces not strictly decreasing, mask touching the lattice edge).
void validate_problem(const MembraneProblem& problem);

SolveResult solve_membranes(const MembraneProblem& problem);

/// Discrete energy h^d * sum(1/2 |grad u_k|^2 + f_k u_k) over masked nodes and
/// every lattice edge touching the mask.
double discrete_energy(const MembraneStack& stack);

struct ObstacleResult {
  ScalarField field;
  SolveReport report;
};

/// Single obstacle problem Delta u = 1 on {u > 0}, u >= 0. Boundary data are
/// the values of `boundary` outside its mask.
ObstacleResult solve_obstacle(const ScalarField& boundary, double tolerance = 1e-10, int max_sweeps = -1,
                              double omega = 0.0);

struct ResidualReport {
  double max_residual = 0.0;
  std::size_t checked = 0;
  std::size_t excluded = 0;
  /// Per node residual; NaN where not checked.
  std::vector<double> residual;
};

/// Euler-Lagrange residual of the contact-block system. Nodes within 2h of a
/// change in the contact pattern are skipped.
ResidualReport residual_report(const MembraneStack& stack, double contact_tolerance);

struct MembershipOptions {
  double laplacian_tolerance = 1e-8;
  /// u > w/2 is decided as u - w/2 > indicator_tolerance.
  double indicator_tolerance = 0.0;
  /// Exclusion radius around indicator changes, in units of h.
  double band = 2.0;
  /// Optional extra exclusion (same lattice), e.g. known kink lines.
  const std::vector<std::uint8_t>* exclude = nullptr;
};

struct MembershipReport {
  bool subsolution = true;
  bool supersolution = true;
  /// min over checked nodes of the slack; negative means violated.
  double sub_margin = 0.0;
  double super_margin = 0.0;
  std::size_t checked = 0;
};

/// Discrete sub/supersolution tests for the pair system:
/// sub: Delta u >= 1{u > w/2}, Delta w >= 1{w > u/2}; super: Delta u, Delta w <= 1.
MembershipReport pair_membership(const ScalarField& u, const ScalarField& w, const MembershipOptions& opt = {});

/// Five-point Laplacian at a node with all four neighbours on the lattice.
double discrete_laplacian(const ScalarField& f, std::size_t k);

/// Nodes within `radius` (Euclidean, in lattice units) of a node whose label
/// differs; labels only compared between masked nodes.
std::vector<std::uint8_t> change_band(const Lattice& lat, std::span<const std::uint8_t> mask,
                                      std::span<const std::uint32_t> label, double radius);

}  // namespace membrane
