#pragma once

// Finite-difference discretisations of sigma_{n-1}(kappa[u]) = sigma with
// Dirichlet data, and the damped Newton iteration that solves them.

#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "plateau/domain.hpp"

namespace plateau::solver {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct MeshSpec {
  int radial_nodes = 401;   // radial solves: nodes on [0, R], both ends included
  int ns = 24;              // mapped grid: interior rings
  int ntheta = 0;           // n = 2: angular nodes (even); n = 3: polar nodes. 0 = default
  int nphi = 0;             // n = 3: azimuthal nodes (even). 0 = default
  double clustering = 0.0;  // in [0, 1); node spacing at the boundary shrinks by (1 - clustering)
};

struct NewtonOptions {
  int max_iters = 50;
  double residual_tol = 1e-9;  // sup norm of the PDE residual
  double step_damping = 1.0;   // initial step length
  double min_step = 1e-6;
};

/// Stretching s -> T(s) of the reference radial coordinate. Odd in s, T(1) = 1.
struct Stretch {
  double t = 0.0;
  double dt = 1.0;
  double ddt = 0.0;
};
Stretch radial_stretch(double clustering, double s);

/// Pointwise data at one mesh node.
struct NodeData {
  Vec x;
  double u = 0.0;
  bool boundary = false;
  int ring = 0;  // radial index; the boundary ring is the largest
  Vec grad_u;
  Mat hess_u;
  double nu_vertical = 1.0;
  Vec kappa;              // hyperbolic principal curvatures, descending
  double residual = 0.0;  // 0 on boundary nodes
};

/// A square nonlinear system F(u) = 0 over the interior nodes. Nodes are
/// numbered interior first (those are the unknowns), boundary nodes last.
class DiscreteProblem {
 public:
  virtual ~DiscreteProblem() = default;

  virtual int dimension() const = 0;
  virtual int unknowns() const = 0;
  virtual int nodes() const = 0;
  virtual double sigma() const = 0;
  virtual double eps() const = 0;

  /// Residual of row `row`. If `guard` is non-null it receives whether u > 0
  /// at the node and the discrete spectrum lies in Gamma_{n-1}.
  virtual double residual_at(const Vec& u, int row, bool* guard) const = 0;
  /// Unknowns the residual of `row` depends on (sorted, unique).
  virtual std::span<const int> stencil(int row) const = 0;

  virtual NodeData node(const Vec& u, int index) const = 0;
  virtual Vec point(int index) const = 0;
  /// Position along the ray from the centre: 0 at the centre, 1 on the boundary.
  virtual double ray_fraction(int index) const = 0;
  virtual int ring(int index) const = 0;
  virtual int boundary_ring() const = 0;
};

/// Rotational ansatz u = u(r) on the ball of radius R.
std::unique_ptr<DiscreteProblem> make_radial_problem(int n, double sigma, double radius,
                                                     double eps, int nodes,
                                                     double clustering = 0.0);

/// Polar (n = 2) or spherical (n = 3) grid mapped onto a star-shaped domain.
std::unique_ptr<DiscreteProblem> make_grid_problem(const DomainSpec& domain, double sigma,
                                                   double eps, const MeshSpec& mesh);

struct ResidualNorms {
  double sup = 0.0;
  double l2 = 0.0;
  bool guard = true;
};

ResidualNorms evaluate_residual(const DiscreteProblem& p, const Vec& u, Vec& f, int workers = 1);

/// Greedy colouring of the unknowns so that no two columns of one colour
/// share a row.
std::vector<int> color_columns(const DiscreteProblem& p);

/// Central finite-difference Jacobian at u.
Eigen::SparseMatrix<double> fd_jacobian(const DiscreteProblem& p, const Vec& u,
                                        const std::vector<int>& colors, int workers = 1);

struct StepOutcome {
  Vec u;
  ResidualNorms before;
  ResidualNorms after;
  double damping = 0.0;  // accepted step length
  int halvings = 0;
  double step_norm = 0.0;  // sup norm of the accepted update
};

/// One guarded, backtracked Newton update. Throws cone_violation when the
/// guard fails for every step length down to min_step, newton_divergence when
/// the guard passes but the residual never decreases.
StepOutcome newton_step(const DiscreteProblem& p, const Vec& u, double damping,
                        const NewtonOptions& options, int workers = 1);

struct NewtonTrace {
  int iterations = 0;
  ResidualNorms final;
  std::vector<double> history;  // sup norm before each step, then the final one
};

/// Iterates newton_step until the residual sup norm is below tolerance. On
/// failure `u` holds the last accepted iterate.
NewtonTrace newton_solve(const DiscreteProblem& p, Vec& u, const NewtonOptions& options,
                         int workers = 1);

}  // namespace plateau::solver
