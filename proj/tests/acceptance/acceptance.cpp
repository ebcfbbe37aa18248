// One PASS/FAIL line per acceptance criterion. `--calibrate` prints the bound
// constants fitted on the regression sweep instead of checking them.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "plateau/cli/harness.hpp"
#include "plateau/cone_calculus.hpp"
#include "plateau/estimate_audit.hpp"
#include "plateau/graph_geometry.hpp"
#include "plateau/plateau_solver.hpp"

using namespace plateau;
using solver::DomainSpec;
using solver::SolutionField;
using solver::SolveConfig;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

namespace {

// Frozen after one calibration run of the regression sweep (criterion 9),
// rounded up in the third digit.
constexpr audit::BoundConstants kFrozen{0.500, 0.751};

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("criterion %2d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  failures += !pass;
}

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double cap_error(const SolutionField& f, const geometry::CapSolution& cap) {
  double e = 0.0;
  for (const auto& nd : f.nodes) e = std::max(e, std::abs(nd.u - cap.height(nd.x.norm())));
  return e;
}

SolveConfig radial(double sigma, std::vector<double> schedule, int nodes = 401) {
  SolveConfig c;
  c.n = 3;
  c.sigma_target = sigma;
  c.eps_schedule = std::move(schedule);
  c.mesh.radial_nodes = nodes;
  return c;
}

// 1 and 2: cap oracle on the radial solver, through the CLI front end.
void cap_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::ostringstream out, err;
  const int code = cli::run({"solve-radial", "--n", "3", "--sigma", "1.5", "--radius", "1", "--eps",
                             "0.01", "--nodes", "401"},
                            out, err);
  const double elapsed = seconds_since(t0);
  const auto cap = geometry::exact_cap(3, 1.5, 1.0, 0.01);
  double err_max = 0.0, umb = 0.0;
  int rows = 0;
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<double> c;
    std::istringstream cells(line);
    for (std::string cell; std::getline(cells, cell, ',');) c.push_back(std::stod(cell));
    err_max = std::max(err_max, std::abs(c[1] - cap.height(c[0])));
    umb = std::max({umb, std::abs(c[4] - cap.lambda), std::abs(c[5] - cap.lambda)});
    ++rows;
  }
  double order = 0.0;
  {
    const auto d = DomainSpec::ball(3, 1.0);
    const double e1 = cap_error(solver::solve_radial(radial(1.5, {0.1, 0.01}, 201), d), cap);
    const double e2 = cap_error(solver::solve_radial(radial(1.5, {0.1, 0.01}, 401), d), cap);
    order = std::log2(e1 / e2);
  }
  report(1, code == 0 && rows == 401 && err_max <= 1e-4 && order >= 1.9 && elapsed <= 1.0,
         fmt("max node error %.3e (<= 1e-4), order %.3f (>= 1.9), %.3f s (<= 1 s)", err_max, order,
             elapsed));
  report(2, code == 0 && umb <= 1e-3, fmt("max |kappa_i - lambda| %.3e (<= 1e-3)", umb));
}

// 3: vertical normal component on the ball.
void nu_witness() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto path = solver::solve_radial_path(radial(1.5, {0.1, 0.01, 1e-3, 1e-4}), DomainSpec::ball(3, 1.0));
  const double elapsed = seconds_since(t0);
  const auto r = audit::nu_lower_bound_check(path);
  const double lambda = std::sqrt(0.5);
  const double last = r.nu_min.back();
  const double lowest = *std::min_element(r.nu_min.begin(), r.nu_min.end());
  report(3, std::abs(last - lambda) <= 1e-3 && lowest >= 0.5 * lambda && elapsed <= 10.0,
         fmt("nu_min(1e-4) - lambda = %.3e (|.| <= 1e-3), schedule min %.6f (>= %.6f), %.2f s", last - lambda,
             lowest, 0.5 * lambda, elapsed));
}

// 4: both cone-lemma inequalities on seeded samples.
void cone_lemma() {
  const auto t0 = std::chrono::steady_clock::now();
  std::int64_t violations = 0, total = 0;
  double worst = 0.0;
  for (int n = 3; n <= 5; ++n)
    for (int k = 2; k <= n - 1; ++k) {
      const auto r = cli::verify_cone(n, k, 100000, 42, 1);
      violations += r.quadratic_violations + r.negative_part_violations;
      total += r.samples;
      worst = std::min({worst, r.worst_quadratic, r.worst_negative_part});
    }
  const double elapsed = seconds_since(t0);
  report(4, violations == 0 && total == 600000 && elapsed <= 30.0,
         fmt("%lld violations over %lld samples, worst scaled slack %.3e, %.2f s (<= 30 s)",
             static_cast<long long>(violations), static_cast<long long>(total), worst, elapsed));
}

// 5: Ren-Wang certification.
void ren_wang() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::string detail;
  for (int n : {3, 4}) {
    const auto r = cli::renwang_check(n, 0.1, 10000, 100, 10000, 42, 1);
    ok = ok && r.non_finite == 0 && r.negative_values == 0 && r.xi_evaluated == 1000000;
    detail += fmt("n=%d: max K %.4f, %d non-finite, %lld negative of %lld, worst %.2e; ", n, r.max_K,
                  r.non_finite, static_cast<long long>(r.negative_values),
                  static_cast<long long>(r.xi_evaluated), r.worst_value);
  }
  const double elapsed = seconds_since(t0);
  report(5, ok && elapsed <= 120.0, detail + fmt("%.2f s (<= 120 s)", elapsed));
}

// 6: largest-eigenvalue jet against central differences.
void eigen_jet() {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const auto sym = [&] {
    Mat m(5, 5);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j <= i; ++j) m(i, j) = m(j, i) = unif(rng);
    return m;
  };
  const auto top = [](const Mat& m) {
    return Eigen::SelfAdjointEigenSolver<Mat>(m, Eigen::EigenvaluesOnly).eigenvalues()[4];
  };
  const double h = 1e-4;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Mat q = Eigen::HouseholderQR<Mat>(sym()).householderQ();
    Vec d(5);
    d << 2.5 + 0.5 * unif(rng), 1.0 + 0.5 * unif(rng), 0.5 * unif(rng), -0.5 + 0.5 * unif(rng), -1.5;
    const Mat a = q * d.asDiagonal() * q.transpose();
    const Mat ad = 0.3 * sym(), add = 0.3 * sym();
    const auto path = [&](double t) { return top(a + t * ad + 0.5 * t * t * add); };
    const auto j = cone::eigenvalue_jet(a, ad, add);
    const double f0 = path(0), fp = path(h), fm = path(-h);
    const double d1 = (fp - fm) / (2 * h), d2 = (fp - 2 * f0 + fm) / (h * h);
    worst = std::max({worst, std::abs(j.first - d1) / std::max(1.0, std::abs(d1)),
                      std::abs(j.second - d2) / std::max(1.0, std::abs(d2))});
  }
  report(6, worst <= 1e-6, fmt("worst relative error %.3e over 100 paths (<= 1e-6)", worst));
}

double sup_identities(const geometry::IdentityReport& r) {
  double s = 0.0;
  for (auto id : {geometry::Identity::nu_first, geometry::Identity::nu_gradient, geometry::Identity::nu_second})
    s = std::max(s, r.max_abs(id));
  return s;
}

// 7: structure identities on the analytic cap, and their order on solver output.
void identities() {
  const auto cap = geometry::exact_cap(3, 1.5, 1.0, 0.01);
  double interior = 0.0, rim = 0.0;
  for (int dir = 0; dir < 8; ++dir) {
    const double th = std::numbers::pi * (dir + 0.5) / 8.0, ph = 2.0 * std::numbers::pi * dir / 8.0;
    Vec e(3);
    e << std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th);
    if (dir == 0) e << 1.0, 0.0, 0.0;
    for (int k = 0; k <= 19; ++k) {
      const double r = 0.05 * k;
      const double s = sup_identities(geometry::nu_identity_residuals(
          cap.field(), r * e, 1e-3, geometry::FramePolicy::accept_degenerate));
      (r <= 0.9 ? interior : rim) = std::max(r <= 0.9 ? interior : rim, s);
    }
  }
  const auto f = solver::solve_radial(radial(1.5, {0.1, 0.01}), DomainSpec::ball(3, 1.0));
  const auto lr = audit::lemma21_on_solution(f, audit::AuditConfig{});
  report(7, interior <= 1e-6 && lr.order >= 1.8,
         fmt("cap sup residual %.3e on |x| <= 0.9 (<= 1e-6; %.3e on 0.9 < |x| < 1), solver output order "
             "%.3f over %d samples (>= 1.8)",
             interior, rim, lr.order, lr.sampled));
}

// 8: sectional curvature of the cap.
void gauss() {
  const auto cap = geometry::exact_cap(3, 1.5, 1.0, 0.01);
  double e1 = 0.0, e2 = 0.0;
  for (const Vec x : {Vec(Vec::Zero(3)), Vec(Vec::Constant(3, 0.3)), Vec(Vec::Unit(3, 1) * 0.7)}) {
    for (double k : geometry::sectional_curvatures(cap.field(), x, 2e-3)) e1 = std::max(e1, std::abs(k + 0.5));
    for (double k : geometry::sectional_curvatures(cap.field(), x, 1e-3)) e2 = std::max(e2, std::abs(k + 0.5));
  }
  const double order = std::log2(e1 / e2);
  report(8, e2 <= 1e-3 && order >= 1.8,
         fmt("max |K + 0.5| %.3e at step 1e-3 (<= 1e-3), order %.3f (>= 1.8)", e2, order));
}

// 9: curvature bound regression over ball and ellipsoid.
void regression(bool calibrate) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<double> sigmas{0.05, 0.5, 1.5, 2.9};
  const std::vector<double> schedule{0.1, 0.01, 1e-3, 1e-4};
  std::vector<SolutionField> all;
  bool converged = true;
  std::string failures_seen;
  for (int dom = 0; dom < 2; ++dom)
    for (double sigma : sigmas) {
      SolveConfig c = radial(sigma, schedule);
      c.mesh.ns = 16;
      c.mesh.clustering = 0.85;
      try {
        auto path = dom == 0 ? solver::solve_radial_path(c, DomainSpec::ball(3, 1.0))
                             : solver::solve_graph_path(c, DomainSpec::ellipsoid({1.3, 1, 1}));
        for (auto& f : path) {
          converged = converged && f.cone_ok && f.convergence.residual <= c.newton.residual_tol;
          all.push_back(std::move(f));
        }
      } catch (const std::exception& e) {
        converged = false;
        failures_seen += fmt("[%s sigma %g: %s] ", dom ? "ellipsoid" : "ball", sigma, e.what());
      }
    }
  const double elapsed = seconds_since(t0);
  if (calibrate) {
    const auto fit = audit::fit_bound_constants(all);
    std::printf("calibration: c1 %.17g c2 %.17g over %zu solves\n", fit.c1, fit.c2, all.size());
    for (const auto& f : all) {
      const auto q = audit::test_function_field(f, audit::AuditConfig{});
      std::printf("  %s sigma %g eps %g: I %.6f B %.6f Q argmax on boundary %d\n", f.domain.label().c_str(),
                  f.convergence.sigma, f.convergence.eps_bdry, audit::max_kappa_interior(f),
                  audit::max_kappa_boundary(f), q.argmax_on_boundary);
    }
    return;
  }
  if (!converged || all.size() != 32) {
    report(9, false, "not every solve converged with cone_ok: " + failures_seen);
    return;
  }
  const auto frozen = audit::theorem_bound_check(all, kFrozen, 1e-9);
  const auto refit = audit::fit_bound_constants(all);
  const bool constants_stable =
      std::abs(refit.c1 - kFrozen.c1) <= 0.1 * kFrozen.c1 && std::abs(refit.c2 - kFrozen.c2) <= 0.1 * kFrozen.c2;
  report(9, frozen.bound_holds && frozen.stable && constants_stable && elapsed <= 600.0,
         fmt("32 solves converged; frozen (C1, C2) = (%.4g, %.4g), worst margin %.3e, refit (%.4g, %.4g), "
             "interior max variation %.3e (< 0.1), %.1f s (<= 600 s)",
             kFrozen.c1, kFrozen.c2, frozen.worst_margin, refit.c1, refit.c2, frozen.max_variation, elapsed));
}

// 10: mapped grid against the radial solver on the ball.
void cross_solver() {
  SolveConfig c = radial(1.5, {0.1, 0.01}, 17);
  c.mesh.ns = 16;
  const auto d = DomainSpec::ball(3, 1.0);
  const auto cap = geometry::exact_cap(3, 1.5, 1.0, 0.01);
  const auto g = solver::solve_graph(c, d);
  const auto r = solver::solve_radial(c, d);
  const auto spline = audit::interpolate(r, Vec::Zero(3));
  double diff = 0.0;
  for (const auto& nd : g.nodes) {
    Vec x = Vec::Zero(3);
    x[0] = nd.x.norm();
    diff = std::max(diff, std::abs(nd.u - spline(x).u));
  }
  const double disc = cap_error(g, cap);
  report(10, g.cone_ok && diff <= 10.0 * disc,
         fmt("max |u_grid - u_radial| %.3e, grid discretization error %.3e (ratio %.3f <= 10)", diff, disc,
             diff / disc));
}

// 11: repeated sweeps are byte-identical.
void determinism() {
  const auto cfg = std::filesystem::temp_directory_path() / "plateau_acceptance_sweep.json";
  std::ofstream(cfg) << R"({"n": 3, "eps_schedule": [0.1, 0.01], "mesh": {"radial_nodes": 201, "ns": 8},
    "sweep": {"sigmas": [0.05, 1.5, 2.9],
              "domains": [{"kind": "ball"}, {"kind": "ellipsoid", "params": [1.3, 1, 1]}]}})";
  const std::vector<std::string> args{"sweep", "--config", cfg.string(), "--workers", "4"};
  std::ostringstream a, b, ea, eb;
  const int ca = cli::run(args, a, ea);
  const int cb = cli::run(args, b, eb);
  report(11, ca == 0 && cb == 0 && !a.str().empty() && a.str() == b.str(),
         fmt("two sweeps, %zu bytes each, identical: %s", a.str().size(), a.str() == b.str() ? "yes" : "no"));
}

}  // namespace

int main(int argc, char** argv) {
  const bool calibrate = argc > 1 && std::string(argv[1]) == "--calibrate";
  if (calibrate) {
    regression(true);
    return 0;
  }
  const std::vector<std::function<void()>> checks{cap_oracle, nu_witness, cone_lemma, ren_wang,
                                                  eigen_jet,  identities, gauss,      [] { regression(false); },
                                                  cross_solver, determinism};
  for (const auto& check : checks) {
    try {
      check();
    } catch (const std::exception& e) {
      std::printf("unexpected exception: %s\n", e.what());
      ++failures;
    }
  }
  return failures == 0 ? 0 : 1;
}
