#pragma once

// Dirichlet approximations sigma_{n-1}(kappa[u]) = sigma, u = eps on the
// boundary, solved by guarded Newton iteration with continuation in eps and sigma.

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "plateau/discrete_problem.hpp"
#include "plateau/domain.hpp"
#include "plateau/error.hpp"

namespace plateau::solver {

struct ContinuationOptions {
  /// Intermediate sigma values visited at the first eps before sigma_target.
  std::vector<double> sigma_path;
  /// How many times a failed eps step may be split geometrically in two.
  int max_refinements = 6;
};

struct SolveConfig {
  int n = 3;
  double sigma_target = 1.5;
  std::vector<double> eps_schedule{0.1, 0.01, 0.001, 0.0001};
  MeshSpec mesh;
  NewtonOptions newton;
  ContinuationOptions continuation;
  std::uint64_t seed = 0;
  int workers = 1;
};

/// Throws invalid_argument unless sigma_target in (0, n), the schedule is
/// non-empty, positive and strictly decreasing, and the Newton options are sane.
void validate(const SolveConfig& config);

/// The eps schedule 10^-1, ..., 10^-4.
std::vector<double> default_eps_schedule();

enum class MeshKind { radial, mapped_grid };

struct Convergence {
  int iterations = 0;
  double residual = 0.0;  // sup norm at the last iterate
  double eps_bdry = 0.0;
  double sigma = 0.0;
  std::vector<double> history;
};

struct SolutionField {
  explicit SolutionField(DomainSpec d) : domain(std::move(d)) {}

  DomainSpec domain;
  MeshKind mesh_kind = MeshKind::radial;
  MeshSpec mesh;
  std::vector<NodeData> nodes;  // interior nodes first, boundary ring last
  Convergence convergence;
  bool cone_ok = false;

  int n() const noexcept { return domain.n(); }
  int boundary_ring() const;
  /// Heights of the interior nodes, in unknown order.
  Vec interior_values() const;
};

/// Problem matching the mesh and parameters recorded in `field`.
std::unique_ptr<DiscreteProblem> discretize(const DomainSpec& domain, MeshKind kind,
                                            const MeshSpec& mesh, double sigma, double eps);

/// Assembles node data and cone flag for the iterate `u` of problem `p`.
SolutionField make_field(const DomainSpec& domain, MeshKind kind, const MeshSpec& mesh,
                         const DiscreteProblem& p, const Vec& u);

/// sigma_{n-1}(kappa) - sigma at each interior node of `field`, recomputed
/// from its heights. Throws invalid_state on a non-positive height.
Vec pde_residual(const SolutionField& field);

/// Starting field: the exact eps-cap on balls; the cap of mean radius
/// stretched along rays on other domains.
SolutionField initial_guess(const DomainSpec& domain, double sigma, double eps_bdry,
                            const MeshSpec& mesh, MeshKind kind);

/// Failure of a solve, with the last accepted iterate.
class SolveError : public Error {
 public:
  SolveError(ErrorKind kind, const std::string& message, std::shared_ptr<const SolutionField> last)
      : Error(kind, message), last_(std::move(last)) {}
  const SolutionField* last_iterate() const noexcept { return last_.get(); }

 private:
  std::shared_ptr<const SolutionField> last_;
};

/// One converged field per entry of the eps schedule (same order).
std::vector<SolutionField> solve_radial_path(const SolveConfig& config, const DomainSpec& domain);
SolutionField solve_radial(const SolveConfig& config, const DomainSpec& domain);

std::vector<SolutionField> solve_graph_path(const SolveConfig& config, const DomainSpec& domain);
SolutionField solve_graph(const SolveConfig& config, const DomainSpec& domain);

/// Newton from an explicit start at fixed (sigma, eps). Throws SolveError.
SolutionField solve_from(const DomainSpec& domain, MeshKind kind, const MeshSpec& mesh,
                         double sigma, double eps, const Vec& start, const NewtonOptions& newton,
                         int workers = 1);

}  // namespace plateau::solver
