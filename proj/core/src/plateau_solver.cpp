#include "plateau/plateau_solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "plateau/graph_geometry.hpp"

namespace plateau::solver {

namespace {

void require_arg(bool ok, const std::string& msg) {
  if (!ok) fail(ErrorKind::invalid_argument, msg);
}

double ball_radius(const DomainSpec& d) { return d.parameters().front(); }

// Cap over the ball of radius `radius`, evaluated at fraction `tau` of the way out.
double cap_height(const geometry::CapSolution& cap, double tau) {
  return cap.height(std::min(1.0, tau) * cap.R);
}

struct PathState {
  const DomainSpec& domain;
  MeshKind kind;
  const SolveConfig& config;
  Vec u;
  double sigma = 0.0;
  double eps = 0.0;
  int iterations = 0;
  std::vector<double> history;
};

[[noreturn]] void rethrow_solve(const Error& e, const PathState& s, const DiscreteProblem& p,
                                const Vec& u) {
  auto last = std::make_shared<SolutionField>(make_field(s.domain, s.kind, s.config.mesh, p, u));
  last->convergence.sigma = p.sigma();
  last->convergence.eps_bdry = p.eps();
  std::ostringstream msg;
  msg << e.what() << " (sigma " << p.sigma() << ", eps " << p.eps() << ")";
  throw SolveError(e.kind(), msg.str(), std::move(last));
}

bool recoverable(ErrorKind k) {
  return k == ErrorKind::newton_divergence || k == ErrorKind::cone_violation;
}

// Newton at (sigma, eps) from `start`; on success the state moves there.
bool try_solve(PathState& s, double sigma, double eps, const Vec& start, bool throw_on_failure) {
  auto p = discretize(s.domain, s.kind, s.config.mesh, sigma, eps);
  Vec u = start;
  try {
    NewtonTrace t = newton_solve(*p, u, s.config.newton, s.config.workers);
    s.u = std::move(u);
    s.sigma = sigma;
    s.eps = eps;
    s.iterations += t.iterations;
    s.history = std::move(t.history);
    return true;
  } catch (const Error& e) {
    if (!recoverable(e.kind())) throw;
    if (throw_on_failure) rethrow_solve(e, s, *p, u);
    return false;
  }
}

void advance_eps(PathState& s, double target, int depth) {
  const double from = s.eps;
  const Vec shifted = (s.u.array() + (target - from)).matrix();
  const bool last_chance = depth >= s.config.continuation.max_refinements;
  if (try_solve(s, s.sigma, target, shifted, last_chance)) return;
  const double mid = std::sqrt(from * target);
  advance_eps(s, mid, depth + 1);
  advance_eps(s, target, depth + 1);
}

SolutionField snapshot(const PathState& s) {
  auto p = discretize(s.domain, s.kind, s.config.mesh, s.sigma, s.eps);
  SolutionField f = make_field(s.domain, s.kind, s.config.mesh, *p, s.u);
  f.convergence.iterations = s.iterations;
  f.convergence.history = s.history;
  return f;
}

std::vector<SolutionField> solve_path(const SolveConfig& config, const DomainSpec& domain,
                                      MeshKind kind) {
  validate(config);
  require_arg(domain.n() == config.n, "domain dimension does not match n");
  if (kind == MeshKind::radial)
    require_arg(domain.kind() == DomainKind::ball, "radial solves need a ball domain");
  require_arg(domain.boundary_mean_curvature_min() >= -1e-9,
              "boundary mean curvature must be nonnegative");

  std::vector<double> stages = config.continuation.sigma_path;
  stages.push_back(config.sigma_target);
  const double eps0 = config.eps_schedule.front();

  // When the starting guess leaves the cone, start higher up in sigma where
  // it does not and walk down by halving.
  SolutionField guess = initial_guess(domain, stages.front(), eps0, config.mesh, kind);
  if (!guess.cone_ok) {
    std::vector<double> ladder;
    double sig = stages.front();
    for (int tries = 0; !guess.cone_ok; ++tries) {
      if (tries == 12)
        fail(ErrorKind::cone_violation, "no sigma found where the initial guess is elliptic");
      sig = std::min(2.0 * sig, 0.5 * (sig + config.n));
      ladder.push_back(sig);
      guess = initial_guess(domain, sig, eps0, config.mesh, kind);
    }
    std::reverse(ladder.begin(), ladder.end());
    stages.insert(stages.begin(), ladder.begin(), ladder.end());
  }

  PathState s{domain, kind, config, guess.interior_values(), stages.front(), eps0, 0, {}};
  for (double sigma : stages) try_solve(s, sigma, eps0, s.u, true);

  std::vector<SolutionField> out;
  out.push_back(snapshot(s));
  for (std::size_t j = 1; j < config.eps_schedule.size(); ++j) {
    s.iterations = 0;
    advance_eps(s, config.eps_schedule[j], 0);
    out.push_back(snapshot(s));
  }
  return out;
}

}  // namespace

std::vector<double> default_eps_schedule() { return {1e-1, 1e-2, 1e-3, 1e-4}; }

void validate(const SolveConfig& c) {
  require_arg(c.n >= 2, "n must be >= 2");
  require_arg(c.sigma_target > 0.0 && c.sigma_target < c.n, "sigma must lie in (0, n)");
  require_arg(!c.eps_schedule.empty(), "eps schedule is empty");
  for (std::size_t j = 0; j < c.eps_schedule.size(); ++j) {
    require_arg(c.eps_schedule[j] > 0.0 && std::isfinite(c.eps_schedule[j]),
                "eps schedule entries must be positive");
    if (j > 0)
      require_arg(c.eps_schedule[j] < c.eps_schedule[j - 1],
                  "eps schedule must be strictly decreasing");
  }
  for (double s : c.continuation.sigma_path)
    require_arg(s > 0.0 && s < c.n, "sigma path entries must lie in (0, n)");
  require_arg(c.continuation.max_refinements >= 0, "max_refinements must be >= 0");
  require_arg(c.newton.max_iters >= 1, "max_iters must be >= 1");
  require_arg(c.newton.residual_tol > 0.0, "residual_tol must be positive");
  require_arg(c.newton.step_damping > 0.0 && c.newton.step_damping <= 1.0,
              "step_damping must lie in (0, 1]");
  require_arg(c.newton.min_step > 0.0 && c.newton.min_step <= c.newton.step_damping,
              "min_step must lie in (0, step_damping]");
  require_arg(c.mesh.radial_nodes >= 5, "radial mesh needs at least 5 nodes");
  require_arg(c.mesh.ns >= 4, "mapped grid needs ns >= 4");
  require_arg(c.mesh.clustering >= 0.0 && c.mesh.clustering < 1.0,
              "mesh clustering must lie in [0, 1)");
  require_arg(c.workers >= 1, "workers must be >= 1");
}

int SolutionField::boundary_ring() const {
  int r = 0;
  for (const auto& nd : nodes) r = std::max(r, nd.ring);
  return r;
}

Vec SolutionField::interior_values() const {
  std::vector<double> v;
  for (const auto& nd : nodes)
    if (!nd.boundary) v.push_back(nd.u);
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::unique_ptr<DiscreteProblem> discretize(const DomainSpec& domain, MeshKind kind,
                                            const MeshSpec& mesh, double sigma, double eps) {
  if (kind == MeshKind::radial) {
    require_arg(domain.kind() == DomainKind::ball, "radial mesh needs a ball domain");
    return make_radial_problem(domain.n(), sigma, ball_radius(domain), eps, mesh.radial_nodes,
                               mesh.clustering);
  }
  return make_grid_problem(domain, sigma, eps, mesh);
}

SolutionField make_field(const DomainSpec& domain, MeshKind kind, const MeshSpec& mesh,
                         const DiscreteProblem& p, const Vec& u) {
  SolutionField f(domain);
  f.mesh_kind = kind;
  f.mesh = mesh;
  f.nodes.reserve(p.nodes());
  for (int i = 0; i < p.nodes(); ++i) f.nodes.push_back(p.node(u, i));
  Vec r;
  const ResidualNorms norms = evaluate_residual(p, u, r);
  f.cone_ok = norms.guard;
  f.convergence.residual = norms.sup;
  f.convergence.sigma = p.sigma();
  f.convergence.eps_bdry = p.eps();
  return f;
}

Vec pde_residual(const SolutionField& field) {
  for (const auto& nd : field.nodes)
    if (!(nd.u > 0.0)) fail(ErrorKind::invalid_state, "field has a non-positive height");
  auto p = discretize(field.domain, field.mesh_kind, field.mesh, field.convergence.sigma,
                      field.convergence.eps_bdry);
  const Vec u = field.interior_values();
  if (u.size() != p->unknowns())
    fail(ErrorKind::invalid_state, "field does not match its recorded mesh");
  Vec r;
  evaluate_residual(*p, u, r);
  return r;
}

SolutionField initial_guess(const DomainSpec& domain, double sigma, double eps_bdry,
                            const MeshSpec& mesh, MeshKind kind) {
  auto p = discretize(domain, kind, mesh, sigma, eps_bdry);
  const bool ball = domain.kind() == DomainKind::ball;
  const double radius =
      ball ? ball_radius(domain) : 0.5 * (domain.min_support() + domain.max_support());
  const geometry::CapSolution cap = geometry::exact_cap(domain.n(), sigma, radius, eps_bdry);
  Vec u(p->unknowns());
  for (int i = 0; i < p->unknowns(); ++i)
    u[i] = ball ? cap.height(std::min(radius, p->point(i).norm()))
                : cap_height(cap, p->ray_fraction(i));
  return make_field(domain, kind, mesh, *p, u);
}

SolutionField solve_from(const DomainSpec& domain, MeshKind kind, const MeshSpec& mesh,
                         double sigma, double eps, const Vec& start, const NewtonOptions& newton,
                         int workers) {
  auto p = discretize(domain, kind, mesh, sigma, eps);
  Vec u = start;
  NewtonTrace t;
  try {
    t = newton_solve(*p, u, newton, workers);
  } catch (const Error& e) {
    if (!recoverable(e.kind())) throw;
    auto last = std::make_shared<SolutionField>(make_field(domain, kind, mesh, *p, u));
    throw SolveError(e.kind(), e.what(), std::move(last));
  }
  SolutionField f = make_field(domain, kind, mesh, *p, u);
  f.convergence.iterations = t.iterations;
  f.convergence.history = std::move(t.history);
  return f;
}

std::vector<SolutionField> solve_radial_path(const SolveConfig& config, const DomainSpec& domain) {
  return solve_path(config, domain, MeshKind::radial);
}

SolutionField solve_radial(const SolveConfig& config, const DomainSpec& domain) {
  return std::move(solve_radial_path(config, domain).back());
}

std::vector<SolutionField> solve_graph_path(const SolveConfig& config, const DomainSpec& domain) {
  return solve_path(config, domain, MeshKind::mapped_grid);
}

SolutionField solve_graph(const SolveConfig& config, const DomainSpec& domain) {
  return std::move(solve_graph_path(config, domain).back());
}

}  // namespace plateau::solver
