#pragma once

// Batch front end: run configuration, subcommand dispatch and the exit-code
// contract.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "plateau/estimate_audit.hpp"
#include "plateau/output.hpp"
#include "plateau/plateau_solver.hpp"

namespace plateau::cli {

enum ExitCode : int {
  exit_ok = 0,
  exit_invalid_config = 2,
  exit_no_convergence = 3,
  exit_cone_guard = 4,
  exit_violation = 5,
};

struct DomainChoice {
  std::string kind = "ball";    // ball, ellipsoid, star_shaped
  std::vector<double> params;   // radius; semi-axes; radial samples
};

enum class MeshChoice { automatic, radial, grid };

struct SamplingParams {
  int k = 2;
  std::int64_t samples = 100000;
  double eps_rw = 0.1;
  int spot_checks = 100;
  int xi_per_check = 10000;
};

struct SweepAxes {
  std::vector<double> sigmas;
  std::vector<DomainChoice> domains;
};

struct OutPaths {
  std::string csv;
  std::string json;
};

struct RunConfig {
  std::string subcommand;
  solver::SolveConfig solve;
  DomainChoice domain;
  MeshChoice mesh_kind = MeshChoice::automatic;
  audit::AuditConfig audit;
  SamplingParams sampling;
  SweepAxes sweep;
  std::optional<audit::BoundConstants> frozen;
  OutPaths out;
};

solver::DomainSpec make_domain(const DomainChoice& choice, int n);

/// Fills `config` from a JSON document; unknown keys are rejected.
void apply_json(RunConfig& config, const std::string& json_text);

/// Throws invalid_argument when a parameter violates its type invariant.
void validate(const RunConfig& config);

/// Eps schedule ending at `eps`: the default entries above it, then eps.
std::vector<double> schedule_ending_at(double eps);

struct ConeCheckReport {
  int n = 0;
  int k = 0;
  std::int64_t samples = 0;
  std::int64_t quadratic_violations = 0;
  std::int64_t negative_part_violations = 0;
  double worst_quadratic = 0.0;      // min slack / (1 + |sigma_1 sigma_k|)
  double worst_negative_part = 0.0;  // min finite slack
};

/// Both cone-lemma inequalities over seeded samples of Gamma_k. A sample
/// violates the quadratic one below -1e-10 (1 + |sigma_1 sigma_k|) and the
/// negative-part one below -1e-12.
ConeCheckReport verify_cone(int n, int k, std::int64_t samples, std::uint64_t seed,
                            int workers = 1);

struct RenWangCheckReport {
  int n = 0;
  std::int64_t samples = 0;
  int non_finite = 0;
  double max_K = 0.0;
  double median_K = 0.0;
  int spot_checks = 0;
  std::int64_t xi_evaluated = 0;
  std::int64_t negative_values = 0;  // below -1e-9 * scale on unit xi
  double worst_value = 0.0;          // min value / scale
};

/// min K over spectra normalised to sigma_{n-1} = 1, then random unit xi
/// against the form at the observed max K.
RenWangCheckReport renwang_check(int n, double eps_rw, std::int64_t samples, int spot_checks,
                                 int xi_per_check, std::uint64_t seed, int workers = 1);

struct SweepResult {
  std::vector<output::SweepRow> rows;
  int exit_code = exit_ok;
};

SweepResult run_sweep(const RunConfig& config);

/// The full CLI: args exclude the program name. Data goes to `out` unless an
/// output path is configured; error records go to `err` as one JSON line.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace plateau::cli
