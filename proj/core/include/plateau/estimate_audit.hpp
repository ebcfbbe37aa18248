#pragma once

// Estimate quantities evaluated on solved fields: curvature maxima, the
// vertical normal component, the test function Q = ln kappa_1 - N ln nu, the
// Ren-Wang minimal constant, and structure-identity residuals on interpolated
// solutions.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "plateau/graph_geometry.hpp"
#include "plateau/plateau_solver.hpp"

namespace plateau::audit {

using solver::SolutionField;
using geometry::Vec;
using geometry::Mat;

struct AuditConfig {
  double N = 50.0;
  double eps_rw = 0.1;
  int rw_sample_cap = 64;
  double fd_step = 1e-3;
  std::uint64_t seed = 0;
  int workers = 1;
};

/// Throws invalid_argument unless N > 0, eps_rw > 0, rw_sample_cap >= 1 and fd_step > 0.
void validate(const AuditConfig& config);

/// The exponents swept by audit(): 5, 50, 500.
std::vector<double> default_N_sweep();

/// Boundary nodes and the first interior ring: the discrete stand-in for the
/// boundary of the graph.
bool boundary_adjacent(const SolutionField& field, const solver::NodeData& node);

struct QField {
  double N = 0.0;
  std::vector<double> q;  // per node
  double max = 0.0;
  int argmax = -1;
  bool argmax_on_boundary = false;
  double interior_max = 0.0;  // over non-boundary nodes
  double boundary_max = 0.0;  // over the boundary ring
};

/// Throws audit_precondition when the field is not cone_ok or kappa_1 <= 0 at a node.
QField test_function_field(const SolutionField& field, const AuditConfig& config);

struct NuBoundReport {
  std::vector<double> eps;
  std::vector<double> nu_min;
  std::vector<double> boundary_slope_max;  // max |Du| on the boundary ring, per eps
  double schedule_min = 0.0;
  std::optional<double> oracle_lambda;     // balls only
  double lower_bound = 0.0;                // 0.5 lambda on balls, else the observed minimum
  bool passed = false;
};

/// Requires a non-empty sequence sharing (n, domain, sigma).
NuBoundReport nu_lower_bound_check(std::span<const SolutionField> solutions);

struct BoundConstants {
  double c1 = 0.0;
  double c2 = 1.0;
};

struct BoundRow {
  std::string domain;
  double sigma = 0.0;
  double eps = 0.0;
  double max_kappa_interior = 0.0;
  double max_kappa_boundary = 0.0;
};

struct TheoremBoundReport {
  std::vector<BoundRow> rows;
  BoundConstants constants;
  bool bound_holds = false;
  double worst_margin = 0.0;       // min over rows of c1 + c2 B - I
  double max_variation = 0.0;      // worst relative spread over the last two eps decades
  bool stable = false;             // max_variation < 0.1
  bool passed = false;
};

/// Least-squares slope (clamped at 0) and the tightest intercept over `solutions`.
BoundConstants fit_bound_constants(std::span<const SolutionField> solutions);

/// Checks I <= c1 + c2 B with the frozen constants (fitted from `solutions`
/// when absent) and the stability of I over the last two eps decades of each
/// (domain, sigma) group. Throws audit_precondition on unconverged input.
TheoremBoundReport theorem_bound_check(std::span<const SolutionField> solutions,
                                       std::optional<BoundConstants> frozen = std::nullopt,
                                       double residual_tol = 1e-8);

struct RWReport {
  std::vector<int> nodes;      // sampled node indices
  std::vector<double> min_K;   // per sampled node
  double max_K = 0.0;
  double median_K = 0.0;
  double min_K_min = 0.0;
  bool certified_at_max = false;
  int eps_monotone_violations = 0;  // nodes where doubling eps_rw raised min K
};

RWReport rw_on_solution(const SolutionField& field, const AuditConfig& config);

struct Lemma21Report {
  int sampled = 0;
  int skipped = 0;
  int frame_free_only = 0;  // samples whose frame was ambiguous
  double sup_residual = 0.0;       // at fd_step
  double sup_residual_half = 0.0;  // at fd_step / 2
  double order = 0.0;
};

/// Height field of a solution: a clamped cubic spline of u(r) for radial
/// solves, a local least-squares cubic around `centre` for mapped grids.
geometry::HeightField interpolate(const SolutionField& field, const Vec& centre);

Lemma21Report lemma21_on_solution(const SolutionField& field, const AuditConfig& config);

struct QStats {
  double N = 0.0;
  double max = 0.0;
  double interior_max = 0.0;
  double boundary_max = 0.0;
  bool argmax_on_boundary = false;
};

struct EstimateReport {
  double max_kappa_interior = 0.0;
  double max_kappa_boundary = 0.0;
  double nu_min = 0.0;
  double Q_max = 0.0;
  Vec Q_argmax;
  bool Q_argmax_on_boundary = false;
  double Q_boundary_max = 0.0;
  double rw_minK_max = 0.0;
  double bound_constant_witness = 0.0;  // max_kappa_interior - c2 * max_kappa_boundary
  std::vector<QStats> q_sweep;
};

/// Pointwise report for one field; c2 enters only the witness.
EstimateReport audit(const SolutionField& field, const AuditConfig& config, double c2 = 1.0);

/// max_i |kappa_i| over interior / boundary-adjacent nodes.
double max_kappa_interior(const SolutionField& field);
double max_kappa_boundary(const SolutionField& field);
double nu_min(const SolutionField& field);

}  // namespace plateau::audit
