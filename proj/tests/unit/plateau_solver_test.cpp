#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "plateau/error.hpp"
#include "plateau/graph_geometry.hpp"
#include "plateau/plateau_solver.hpp"

using namespace plateau;
using solver::DomainSpec;
using solver::MeshKind;
using solver::SolutionField;
using solver::SolveConfig;
using Vec = Eigen::VectorXd;

namespace {

double cap_error(const SolutionField& f, const geometry::CapSolution& cap) {
  double e = 0.0;
  for (const auto& nd : f.nodes) e = std::max(e, std::abs(nd.u - cap.height(nd.x.norm())));
  return e;
}

SolveConfig radial_config(double sigma, std::vector<double> schedule) {
  SolveConfig c;
  c.n = 3;
  c.sigma_target = sigma;
  c.eps_schedule = std::move(schedule);
  return c;
}

Vec cap_guess(const solver::DiscreteProblem& p, const geometry::CapSolution& cap) {
  Vec u(p.unknowns());
  for (int i = 0; i < p.unknowns(); ++i) u[i] = cap.height(p.point(i).norm());
  return u;
}

}  // namespace

TEST(SolveConfig, Validation) {
  SolveConfig c;
  EXPECT_NO_THROW(solver::validate(c));
  auto bad = [](auto mutate) {
    SolveConfig c;
    mutate(c);
    try {
      solver::validate(c);
    } catch (const Error& e) {
      return e.kind() == ErrorKind::invalid_argument;
    }
    return false;
  };
  EXPECT_TRUE(bad([](SolveConfig& c) { c.sigma_target = 3.5; }));
  EXPECT_TRUE(bad([](SolveConfig& c) { c.sigma_target = 0.0; }));
  EXPECT_TRUE(bad([](SolveConfig& c) { c.eps_schedule = {}; }));
  EXPECT_TRUE(bad([](SolveConfig& c) { c.eps_schedule = {0.01, 0.1}; }));
  EXPECT_TRUE(bad([](SolveConfig& c) { c.eps_schedule = {0.1, -0.01}; }));
  EXPECT_TRUE(bad([](SolveConfig& c) { c.newton.step_damping = 1.5; }));
  EXPECT_TRUE(bad([](SolveConfig& c) { c.continuation.sigma_path = {4.0}; }));
  EXPECT_EQ(solver::default_eps_schedule(), (std::vector<double>{1e-1, 1e-2, 1e-3, 1e-4}));
}

TEST(PdeResidual, FlatGraphGivesNMinusSigma) {
  for (auto kind : {MeshKind::radial, MeshKind::mapped_grid}) {
    const auto d = DomainSpec::ball(3, 1.0);
    solver::MeshSpec m;
    m.ns = 6;
    m.radial_nodes = 21;
    auto p = solver::discretize(d, kind, m, 1.5, 0.3);
    const auto f = solver::make_field(d, kind, m, *p, Vec::Constant(p->unknowns(), 0.3));
    EXPECT_TRUE(f.cone_ok);
    for (double r : solver::pde_residual(f)) EXPECT_NEAR(r, 1.5, 1e-10);
  }
}

TEST(PdeResidual, CapIsSecondOrderConsistent) {
  const auto cap = geometry::exact_cap(3, 1.5, 1.0, 0.01);
  const auto d = DomainSpec::ball(3, 1.0);
  double prev = 0.0;
  for (int nodes : {101, 201, 401}) {
    solver::MeshSpec m;
    m.radial_nodes = nodes;
    auto p = solver::discretize(d, MeshKind::radial, m, 1.5, 0.01);
    const auto f = solver::make_field(d, MeshKind::radial, m, *p, cap_guess(*p, cap));
    const double s = solver::pde_residual(f).cwiseAbs().maxCoeff();
    if (prev > 0.0) {
      EXPECT_GE(std::log2(prev / s), 1.9);
    }
    prev = s;
  }
}

TEST(PdeResidual, LinearInSmallPerturbations) {
  const auto cap = geometry::exact_cap(3, 1.5, 1.0, 0.01);
  const auto d = DomainSpec::ball(3, 1.0);
  solver::MeshSpec m;
  m.radial_nodes = 101;
  auto p = solver::discretize(d, MeshKind::radial, m, 1.5, 0.01);
  const Vec base = cap_guess(*p, cap);
  const Vec r0 = solver::pde_residual(solver::make_field(d, MeshKind::radial, m, *p, base));
  Vec bump(p->unknowns());
  for (int i = 0; i < p->unknowns(); ++i) {
    const double r = p->point(i).norm();
    bump[i] = std::exp(-20.0 * (r - 0.5) * (r - 0.5));
  }
  const auto delta = [&](double t) {
    return (solver::pde_residual(solver::make_field(d, MeshKind::radial, m, *p, base + t * bump)) - r0)
        .cwiseAbs()
        .maxCoeff();
  };
  const double a = delta(1e-4), b = delta(2e-4);
  EXPECT_GT(a, 0.0);
  EXPECT_NEAR(b / a, 2.0, 1e-2);
}

TEST(PdeResidual, RejectsNonPositiveHeights) {
  const auto d = DomainSpec::ball(3, 1.0);
  solver::MeshSpec m;
  m.radial_nodes = 11;
  auto p = solver::discretize(d, MeshKind::radial, m, 1.5, 0.1);
  Vec u = Vec::Constant(p->unknowns(), 0.2);
  auto f = solver::make_field(d, MeshKind::radial, m, *p, u);
  f.nodes[3].u = -0.1;
  try {
    solver::pde_residual(f);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_state);
  }
}

TEST(SolveRadial, MatchesCapAndConvergesSecondOrder) {
  const auto d = DomainSpec::ball(3, 1.0);
  const auto cap = geometry::exact_cap(3, 1.5, 1.0, 0.01);
  double prev = 0.0;
  for (int nodes : {201, 401, 801}) {
    auto c = radial_config(1.5, {0.01});
    c.mesh.radial_nodes = nodes;
    const auto f = solver::solve_radial(c, d);
    EXPECT_TRUE(f.cone_ok);
    EXPECT_LE(f.convergence.residual, c.newton.residual_tol);
    const double e = cap_error(f, cap);
    if (nodes == 401) {
      EXPECT_LE(e, 1e-4);
    }
    if (prev > 0.0) {
      EXPECT_GE(std::log2(prev / e), 1.9);
    }
    prev = e;
  }
}

TEST(SolveRadial, StartingFromTheCapTakesAtMostTwoSteps) {
  const auto f = solver::solve_radial(radial_config(1.5, {0.01}), DomainSpec::ball(3, 1.0));
  EXPECT_LE(f.convergence.iterations, 2);
}

TEST(SolveRadial, ExtremeSigmasConvergeOverSchedule) {
  for (double sigma : {0.05, 2.9}) {
    const auto path = solver::solve_radial_path(radial_config(sigma, solver::default_eps_schedule()),
                                                DomainSpec::ball(3, 1.0));
    ASSERT_EQ(path.size(), 4u);
    for (const auto& f : path) {
      EXPECT_TRUE(f.cone_ok);
      EXPECT_LE(f.convergence.residual, 1e-9);
    }
  }
}

TEST(SolveRadial, MaximumPrinciple) {
  const auto f = solver::solve_radial(radial_config(1.0, {0.1, 0.01}), DomainSpec::ball(3, 1.0));
  double umax = 0.0, umin = 1e300;
  bool max_interior = false;
  for (const auto& nd : f.nodes) {
    if (nd.u > umax) {
      umax = nd.u;
      max_interior = !nd.boundary;
    }
    umin = std::min(umin, nd.u);
    if (nd.boundary) {
      EXPECT_EQ(nd.u, 0.01);
    }
  }
  EXPECT_TRUE(max_interior);
  EXPECT_EQ(umin, 0.01);
}

// The cap family has u(0) = R sqrt((1 - lambda) / (1 + lambda)) at eps = 0,
// falling as sigma grows; the solver must follow the oracle.
TEST(SolveRadial, CentreHeightFollowsTheCapFamilyInSigma) {
  double prev = 1e300;
  for (double sigma : {0.5, 1.0, 1.5, 2.0, 2.5}) {
    const auto f = solver::solve_radial(radial_config(sigma, {0.01}), DomainSpec::ball(3, 1.0));
    const double u0 = f.nodes.front().u;
    EXPECT_NEAR(u0, geometry::exact_cap(3, sigma, 1.0, 0.01).height(0.0), 1e-4);
    EXPECT_LT(u0, prev);
    prev = u0;
  }
}

TEST(SolveRadial, ContinuationBetweenConsecutiveHeights) {
  const auto d = DomainSpec::ball(3, 1.0);
  auto c = radial_config(1.5, solver::default_eps_schedule());
  c.continuation.max_refinements = 0;  // each step must succeed as given
  const auto path = solver::solve_radial_path(c, d);
  for (std::size_t j = 0; j < path.size(); ++j)
    EXPECT_EQ(path[j].convergence.eps_bdry, c.eps_schedule[j]);
}

TEST(SolveRadial, RequiresBall) {
  EXPECT_THROW(solver::solve_radial(radial_config(1.5, {0.1}), DomainSpec::ellipsoid({1.3, 1, 1})),
               Error);
}

TEST(SolveRadial, WorkerCountDoesNotChangeTheResult) {
  auto c = radial_config(1.5, {0.1, 0.01});
  const auto a = solver::solve_radial(c, DomainSpec::ball(3, 1.0));
  c.workers = 4;
  const auto b = solver::solve_radial(c, DomainSpec::ball(3, 1.0));
  for (std::size_t i = 0; i < a.nodes.size(); ++i) EXPECT_NEAR(a.nodes[i].u, b.nodes[i].u, 1e-12);
  const auto again = solver::solve_radial(c, DomainSpec::ball(3, 1.0));
  for (std::size_t i = 0; i < a.nodes.size(); ++i) EXPECT_EQ(b.nodes[i].u, again.nodes[i].u);
}

TEST(NewtonStep, FixedPointAtTheDiscreteSolution) {
  const auto d = DomainSpec::ball(3, 1.0);
  const auto f = solver::solve_radial(radial_config(1.5, {0.01}), d);
  auto p = solver::discretize(d, MeshKind::radial, f.mesh, 1.5, 0.01);
  const auto s = solver::newton_step(*p, f.interior_values(), 1.0, {});
  EXPECT_LE(s.step_norm, 1e-9);
}

TEST(NewtonStep, ResidualDecreasesAlongAcceptedSteps) {
  const auto d = DomainSpec::ball(3, 1.0);
  solver::MeshSpec m;
  m.radial_nodes = 101;
  auto p = solver::discretize(d, MeshKind::radial, m, 1.5, 0.01);
  // Start from the cap for a different sigma.
  Vec u = cap_guess(*p, geometry::exact_cap(3, 1.2, 1.0, 0.01));
  const auto t = solver::newton_solve(*p, u, {});
  for (std::size_t i = 1; i < t.history.size(); ++i) EXPECT_LT(t.history[i], t.history[i - 1]);
}

TEST(NewtonStep, GuardRejectsIteratesOutsideTheCone) {
  const auto d = DomainSpec::ball(3, 1.0);
  solver::MeshSpec m;
  m.radial_nodes = 41;
  auto p = solver::discretize(d, MeshKind::radial, m, 1.5, 0.01);
  // A sharp spike makes the radial curvature strongly negative near r = 0.5.
  Vec u = cap_guess(*p, geometry::exact_cap(3, 1.5, 1.0, 0.01));
  bool guard = true;
  const int row = p->unknowns() / 2;
  Vec bad = u;
  bad[row] += 0.2;
  p->residual_at(bad, row, &guard);
  EXPECT_FALSE(guard);
  const auto f = solver::make_field(d, MeshKind::radial, m, *p, bad);
  EXPECT_FALSE(f.cone_ok);
  try {
    solver::NewtonOptions o;
    o.min_step = 0.5;
    o.max_iters = 1;
    solver::newton_step(*p, bad, 1.0, o);
  } catch (const Error& e) {
    EXPECT_TRUE(e.kind() == ErrorKind::cone_violation || e.kind() == ErrorKind::newton_divergence);
  }
}

TEST(ColorColumns, NoSharedRowsWithinAColour) {
  const auto d = DomainSpec::ellipsoid({1.3, 1, 1});
  solver::MeshSpec m;
  m.ns = 6;
  auto p = solver::discretize(d, MeshKind::mapped_grid, m, 1.5, 0.1);
  const auto colors = solver::color_columns(*p);
  std::vector<std::vector<int>> touched(p->unknowns());
  for (int row = 0; row < p->unknowns(); ++row)
    for (int c : p->stencil(row)) touched[row].push_back(colors[c]);
  for (auto& t : touched) {
    std::sort(t.begin(), t.end());
    EXPECT_EQ(std::adjacent_find(t.begin(), t.end()), t.end());
  }
}

TEST(SolveGraph, DiskMatchesPlanarCap) {
  SolveConfig c;
  c.n = 2;
  c.sigma_target = 1.0;
  c.eps_schedule = {0.1, 0.01};
  c.mesh.ns = 96;
  c.mesh.ntheta = 16;
  c.newton.residual_tol = 1e-8;
  const auto f = solver::solve_graph(c, DomainSpec::ball(2, 1.0));
  EXPECT_TRUE(f.cone_ok);
  EXPECT_LE(cap_error(f, geometry::exact_cap(2, 1.0, 1.0, 0.01)), 1e-4);
}

TEST(SolveGraph, EllipsoidConvergesWithPositiveNormal) {
  SolveConfig c;
  c.sigma_target = 1.5;
  c.eps_schedule = {0.1, 0.01};
  c.mesh.ns = 10;
  c.mesh.clustering = 0.85;
  c.newton.residual_tol = 1e-8;
  const auto f = solver::solve_graph(c, DomainSpec::ellipsoid({1.3, 1, 1}));
  EXPECT_TRUE(f.cone_ok);
  EXPECT_LE(f.convergence.residual, 1e-8);
  double nu = 1.0;
  for (const auto& nd : f.nodes) nu = std::min(nu, nd.nu_vertical);
  EXPECT_GT(nu, 0.0);
}

TEST(SolveGraph, CoarseStartConvergesQuickly) {
  SolveConfig c;
  c.sigma_target = 1.5;
  c.eps_schedule = {0.5};
  c.mesh.ns = 10;
  c.newton.residual_tol = 1e-8;
  const auto f = solver::solve_graph(c, DomainSpec::ellipsoid({1.3, 1, 1}));
  EXPECT_LE(f.convergence.iterations, 30);
  const auto guess = solver::initial_guess(DomainSpec::ellipsoid({1.3, 1, 1}), 1.5, 0.5, c.mesh,
                                           MeshKind::mapped_grid);
  for (const auto& nd : guess.nodes) {
    EXPECT_GT(nd.u, 0.0);
    if (nd.boundary) {
      EXPECT_EQ(nd.u, 0.5);
    }
  }
}

TEST(SolveGraph, RejectsNegativeBoundaryCurvature) {
  std::vector<double> rho;
  for (int j = 0; j < 32; ++j) rho.push_back(1.0 + 0.35 * std::cos(6 * std::numbers::pi * j / 32.0));
  SolveConfig c;
  c.n = 2;
  c.sigma_target = 1.0;
  c.eps_schedule = {0.1};
  try {
    solver::solve_graph(c, DomainSpec::star_shaped(rho));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_argument);
  }
}

TEST(SolveGraph, FailureCarriesLastIterate) {
  SolveConfig c;
  c.sigma_target = 1.5;
  c.eps_schedule = {0.1};
  c.mesh.ns = 6;
  c.newton.max_iters = 1;
  c.newton.residual_tol = 1e-14;
  try {
    solver::solve_graph(c, DomainSpec::ellipsoid({1.3, 1, 1}));
    FAIL();
  } catch (const solver::SolveError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::newton_divergence);
    ASSERT_NE(e.last_iterate(), nullptr);
    EXPECT_FALSE(e.last_iterate()->nodes.empty());
  }
}
