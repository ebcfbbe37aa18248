#pragma once

// CSV emission for solution fields and sweeps. Floats are written as the
// shortest decimal string that round-trips.

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "plateau/plateau_solver.hpp"

namespace plateau::output {

/// Per-node audit values appended to a solution CSV. rw_minK is empty for
/// nodes that were not sampled.
struct AuditColumns {
  std::vector<double> Q;
  std::vector<std::optional<double>> rw_minK;
};

std::vector<std::string> solution_header(const solver::SolutionField& field, bool with_audit);

/// Radial: r,u,du,d2u,kappa_rad,kappa_ang,nu_vertical,residual.
/// Grid: x_1..x_n,u,grad_norm,kappa_1..kappa_n,nu_vertical,residual.
/// With audit columns: ,Q,rw_minK at the end.
void write_solution_csv(std::ostream& out, const solver::SolutionField& field,
                        const AuditColumns* audit = nullptr);

struct SweepRow {
  std::string domain;
  int n = 0;
  double sigma = 0.0;
  double eps = 0.0;
  double max_kappa_interior = 0.0;
  double max_kappa_boundary = 0.0;
  double nu_min = 0.0;
  double Q_max = 0.0;
  double rw_minK_max = 0.0;
  int iterations = 0;
  double residual = 0.0;
  std::string status = "ok";
};

/// Fixed column order of sweep CSVs.
const std::vector<std::string>& sweep_header();

/// Rows are written sorted by (domain, n, sigma, descending eps).
void write_sweep_csv(std::ostream& out, std::vector<SweepRow> rows);

}  // namespace plateau::output
