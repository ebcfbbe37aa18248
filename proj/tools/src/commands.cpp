#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "plateau/cli/harness.hpp"
#include "plateau/error.hpp"
#include "plateau/format.hpp"
#include "plateau/graph_geometry.hpp"
#include "plateau/parallel.hpp"

namespace plateau::cli {

namespace {

using nlohmann::json;
using solver::SolutionField;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

int exit_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument:
    case ErrorKind::mapped_grid_degeneracy:
      return exit_invalid_config;
    case ErrorKind::cone_violation:
      return exit_cone_guard;
    default:
      return exit_no_convergence;
  }
}

// JSON numbers cannot be inf or nan; those become strings.
json num(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

json vec_json(const solver::Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v[i]));
  return a;
}

// Flag values; unset flags leave the file (or default) value alone.
struct Flags {
  std::string config_path;
  std::optional<int> n, nodes, ns, ntheta, nphi, max_iters, k, spot_checks, xi, rw_cap, workers;
  std::optional<double> sigma, radius, eps, clustering, tol, eps_rw, N, fd_step, c1, c2;
  std::optional<std::int64_t> samples;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> domain, mesh, out_csv, out_json;
  std::vector<double> params, eps_schedule, sigma_path, sigmas;
};

void add_common(CLI::App* s, Flags& f) {
  s->add_option("--config", f.config_path, "JSON configuration file");
  s->add_option("--seed", f.seed);
  s->add_option("--workers", f.workers);
  s->add_option("--out-csv", f.out_csv);
  s->add_option("--out-json", f.out_json);
}

void add_solve(CLI::App* s, Flags& f) {
  s->add_option("--n", f.n, "dimension of the domain");
  s->add_option("--sigma", f.sigma);
  s->add_option("--eps", f.eps, "final boundary height");
  s->add_option("--eps-schedule", f.eps_schedule)->delimiter(',');
  s->add_option("--sigma-path", f.sigma_path)->delimiter(',');
  s->add_option("--max-iters", f.max_iters);
  s->add_option("--tol", f.tol, "Newton residual tolerance");
  s->add_option("--clustering", f.clustering);
}

void add_domain(CLI::App* s, Flags& f) {
  s->add_option("--domain", f.domain, "ball, ellipsoid or star_shaped");
  s->add_option("--params", f.params, "domain parameters")->delimiter(',');
  s->add_option("--radius", f.radius, "ball radius");
}

void add_grid(CLI::App* s, Flags& f) {
  s->add_option("--ns", f.ns);
  s->add_option("--ntheta", f.ntheta);
  s->add_option("--nphi", f.nphi);
}

void add_audit(CLI::App* s, Flags& f) {
  s->add_option("--N", f.N, "test-function exponent");
  s->add_option("--eps-rw", f.eps_rw);
  s->add_option("--rw-cap", f.rw_cap);
  s->add_option("--fd-step", f.fd_step);
  s->add_option("--c1", f.c1, "frozen bound intercept");
  s->add_option("--c2", f.c2, "frozen bound slope");
  s->add_option("--mesh", f.mesh, "radial, grid or auto");
  s->add_option("--nodes", f.nodes, "radial nodes");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::invalid_argument, "cannot read config file " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

template <typename T, typename U>
void set(const std::optional<T>& v, U& into) {
  if (v) into = *v;
}

RunConfig build_config(const std::string& sub, const Flags& f) {
  RunConfig c;
  c.subcommand = sub;
  if (sub == "verify-cone") c.sampling.samples = 100000;
  if (sub == "renwang") {
    c.solve.n = 3;
    c.sampling.samples = 10000;
  }
  if (!f.config_path.empty()) apply_json(c, read_file(f.config_path));
  set(f.n, c.solve.n);
  set(f.sigma, c.solve.sigma_target);
  set(f.seed, c.solve.seed);
  set(f.workers, c.solve.workers);
  set(f.nodes, c.solve.mesh.radial_nodes);
  set(f.ns, c.solve.mesh.ns);
  set(f.ntheta, c.solve.mesh.ntheta);
  set(f.nphi, c.solve.mesh.nphi);
  set(f.clustering, c.solve.mesh.clustering);
  set(f.max_iters, c.solve.newton.max_iters);
  set(f.tol, c.solve.newton.residual_tol);
  set(f.k, c.sampling.k);
  set(f.samples, c.sampling.samples);
  set(f.spot_checks, c.sampling.spot_checks);
  set(f.xi, c.sampling.xi_per_check);
  set(f.eps_rw, c.sampling.eps_rw);
  set(f.eps_rw, c.audit.eps_rw);
  set(f.N, c.audit.N);
  set(f.rw_cap, c.audit.rw_sample_cap);
  set(f.fd_step, c.audit.fd_step);
  set(f.out_csv, c.out.csv);
  set(f.out_json, c.out.json);
  c.audit.seed = c.solve.seed;
  c.audit.workers = c.solve.workers;
  if (!f.eps_schedule.empty()) c.solve.eps_schedule = f.eps_schedule;
  if (f.eps) c.solve.eps_schedule = schedule_ending_at(*f.eps);
  if (!f.sigma_path.empty()) c.solve.continuation.sigma_path = f.sigma_path;
  if (f.domain) {
    c.domain.kind = *f.domain;
    c.domain.params.clear();
  }
  if (!f.params.empty()) c.domain.params = f.params;
  if (f.radius) c.domain.params = {*f.radius};
  if (f.mesh) {
    if (*f.mesh == "radial")
      c.mesh_kind = MeshChoice::radial;
    else if (*f.mesh == "grid")
      c.mesh_kind = MeshChoice::grid;
    else if (*f.mesh == "auto")
      c.mesh_kind = MeshChoice::automatic;
    else
      fail(ErrorKind::invalid_argument, "--mesh must be radial, grid or auto");
  }
  if (sub == "solve-radial") c.mesh_kind = MeshChoice::radial;
  if (sub == "solve-grid") c.mesh_kind = MeshChoice::grid;
  if (f.c1 || f.c2) {
    audit::BoundConstants b = c.frozen.value_or(audit::BoundConstants{});
    set(f.c1, b.c1);
    set(f.c2, b.c2);
    c.frozen = b;
  }
  if (sub == "sweep") {
    if (!f.sigmas.empty()) c.sweep.sigmas = f.sigmas;
    if (f.domain || !f.params.empty() || f.radius) c.sweep.domains = {c.domain};
  }
  return c;
}

solver::MeshKind mesh_for(MeshChoice choice, const solver::DomainSpec& d) {
  if (choice == MeshChoice::radial) return solver::MeshKind::radial;
  if (choice == MeshChoice::grid) return solver::MeshKind::mapped_grid;
  return d.kind() == solver::DomainKind::ball ? solver::MeshKind::radial
                                              : solver::MeshKind::mapped_grid;
}

std::vector<SolutionField> solve_path(const solver::SolveConfig& sc, const solver::DomainSpec& d,
                                      solver::MeshKind kind) {
  return kind == solver::MeshKind::radial ? solver::solve_radial_path(sc, d)
                                          : solver::solve_graph_path(sc, d);
}

// Writes to `path`, or to `fallback` when `path` is empty.
template <typename Fn>
void emit(const std::string& path, std::ostream& fallback, Fn&& write) {
  if (path.empty()) {
    write(fallback);
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) fail(ErrorKind::invalid_argument, "cannot open " + path);
  write(file);
}

// JSON goes to the explicit path, else next to the CSV, else to `fallback`
// when nothing else is written there.
void emit_json(const RunConfig& c, const json& j, std::ostream& fallback, bool fallback_free) {
  std::string path = c.out.json;
  if (path.empty() && !c.out.csv.empty()) path = c.out.csv + ".json";
  if (path.empty() && !fallback_free) return;
  emit(path, fallback, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
}

json sidecar(const SolutionField& f) {
  return {{"iterations", f.convergence.iterations},
          {"residual", num(f.convergence.residual)},
          {"eps", num(f.convergence.eps_bdry)},
          {"sigma", num(f.convergence.sigma)},
          {"cone_ok", f.cone_ok}};
}

int cmd_solve(const RunConfig& c, std::ostream& out) {
  const solver::DomainSpec d = make_domain(c.domain, c.solve.n);
  const auto path = solve_path(c.solve, d, mesh_for(c.mesh_kind, d));
  const SolutionField& f = path.back();
  emit(c.out.csv, out, [&](std::ostream& o) { output::write_solution_csv(o, f); });
  emit_json(c, sidecar(f), out, false);
  return exit_ok;
}

int cmd_oracle_cap(const RunConfig& c, std::ostream& out) {
  const solver::DomainSpec d = make_domain(c.domain, c.solve.n);
  if (d.kind() != solver::DomainKind::ball)
    fail(ErrorKind::invalid_argument, "oracle-cap needs a ball");
  const double eps = c.solve.eps_schedule.back();
  const auto cap = geometry::exact_cap(c.solve.n, c.solve.sigma_target, d.parameters().front(), eps);
  const int m = c.solve.mesh.radial_nodes;
  emit(c.out.csv, out, [&](std::ostream& o) {
    o << "r,u,du,d2u,kappa_rad,kappa_ang,nu_vertical,residual\n";
    for (int j = 0; j < m; ++j) {
      const double r = cap.R * j / (m - 1);
      const double du = cap.slope(r);
      o << format_double(r) << ',' << format_double(cap.height(r)) << ',' << format_double(du)
        << ',' << format_double(cap.curvature(r)) << ',' << format_double(cap.lambda) << ','
        << format_double(cap.lambda) << ',' << format_double(1.0 / std::sqrt(1.0 + du * du))
        << ",0\n";
    }
  });
  const json j = {{"n", cap.n},     {"sigma", num(cap.sigma)}, {"R", num(cap.R)},
                  {"eps", num(eps)}, {"lambda", num(cap.lambda)}, {"a", num(cap.a)},
                  {"d", num(cap.d)}};
  emit_json(c, j, out, false);
  return exit_ok;
}

int cmd_verify_cone(const RunConfig& c, std::ostream& out) {
  const auto r = verify_cone(c.solve.n, c.sampling.k, c.sampling.samples, c.solve.seed,
                             c.solve.workers);
  const json j = {{"n", r.n},
                  {"k", r.k},
                  {"samples", r.samples},
                  {"quadratic_violations", r.quadratic_violations},
                  {"negative_part_violations", r.negative_part_violations},
                  {"worst_quadratic", num(r.worst_quadratic)},
                  {"worst_negative_part", num(r.worst_negative_part)}};
  emit(c.out.json, out, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
  return r.quadratic_violations + r.negative_part_violations == 0 ? exit_ok : exit_violation;
}

int cmd_renwang(const RunConfig& c, std::ostream& out) {
  const auto r = renwang_check(c.solve.n, c.sampling.eps_rw, c.sampling.samples,
                               c.sampling.spot_checks, c.sampling.xi_per_check, c.solve.seed,
                               c.solve.workers);
  const json j = {{"n", r.n},
                  {"eps_rw", num(c.sampling.eps_rw)},
                  {"samples", r.samples},
                  {"non_finite", r.non_finite},
                  {"max_K", num(r.max_K)},
                  {"median_K", num(r.median_K)},
                  {"spot_checks", r.spot_checks},
                  {"xi_evaluated", r.xi_evaluated},
                  {"negative_values", r.negative_values},
                  {"worst_value", num(r.worst_value)}};
  emit(c.out.json, out, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
  return r.non_finite == 0 && r.negative_values == 0 ? exit_ok : exit_violation;
}

int cmd_audit(const RunConfig& c, std::ostream& out) {
  const solver::DomainSpec d = make_domain(c.domain, c.solve.n);
  const auto path = solve_path(c.solve, d, mesh_for(c.mesh_kind, d));
  const SolutionField& f = path.back();
  const auto rep = audit::audit(f, c.audit, c.frozen ? c.frozen->c2 : 1.0);
  const auto q = audit::test_function_field(f, c.audit);
  const auto rw = audit::rw_on_solution(f, c.audit);
  const auto l21 = audit::lemma21_on_solution(f, c.audit);
  const auto nu = audit::nu_lower_bound_check(path);
  const auto tb = audit::theorem_bound_check(path, c.frozen, c.solve.newton.residual_tol * 10.0);

  output::AuditColumns cols;
  cols.Q = q.q;
  cols.rw_minK.assign(f.nodes.size(), std::nullopt);
  for (std::size_t i = 0; i < rw.nodes.size(); ++i) cols.rw_minK[rw.nodes[i]] = rw.min_K[i];
  if (!c.out.csv.empty())
    emit(c.out.csv, out, [&](std::ostream& o) { output::write_solution_csv(o, f, &cols); });

  json sweep = json::array();
  for (const auto& s : rep.q_sweep)
    sweep.push_back({{"N", num(s.N)},
                     {"max", num(s.max)},
                     {"interior_max", num(s.interior_max)},
                     {"boundary_max", num(s.boundary_max)},
                     {"argmax_on_boundary", s.argmax_on_boundary}});
  json nu_rows = json::array();
  for (std::size_t i = 0; i < nu.eps.size(); ++i)
    nu_rows.push_back({{"eps", num(nu.eps[i])},
                       {"nu_min", num(nu.nu_min[i])},
                       {"boundary_slope_max", num(nu.boundary_slope_max[i])}});
  json j = {
      {"domain", d.label()},
      {"n", f.n()},
      {"convergence", sidecar(f)},
      {"estimate",
       {{"max_kappa_interior", num(rep.max_kappa_interior)},
        {"max_kappa_boundary", num(rep.max_kappa_boundary)},
        {"nu_min", num(rep.nu_min)},
        {"Q_max", num(rep.Q_max)},
        {"Q_argmax", vec_json(rep.Q_argmax)},
        {"Q_argmax_on_boundary", rep.Q_argmax_on_boundary},
        {"Q_boundary_max", num(rep.Q_boundary_max)},
        {"rw_minK_max", num(rep.rw_minK_max)},
        {"bound_constant_witness", num(rep.bound_constant_witness)},
        {"q_sweep", sweep}}},
      {"nu_bound",
       {{"per_eps", nu_rows},
        {"schedule_min", num(nu.schedule_min)},
        {"lower_bound", num(nu.lower_bound)},
        {"passed", nu.passed}}},
      {"ren_wang",
       {{"sampled", rw.nodes.size()},
        {"max_K", num(rw.max_K)},
        {"median_K", num(rw.median_K)},
        {"min_K", num(rw.min_K_min)},
        {"certified_at_max", rw.certified_at_max},
        {"eps_monotone_violations", rw.eps_monotone_violations}}},
      {"structure_identities",
       {{"sampled", l21.sampled},
        {"skipped", l21.skipped},
        {"frame_free_only", l21.frame_free_only},
        {"sup_residual", num(l21.sup_residual)},
        {"sup_residual_half", num(l21.sup_residual_half)},
        {"order", num(l21.order)}}},
      {"bound",
       {{"c1", num(tb.constants.c1)},
        {"c2", num(tb.constants.c2)},
        {"frozen", c.frozen.has_value()},
        {"worst_margin", num(tb.worst_margin)},
        {"max_variation", num(tb.max_variation)},
        {"passed", tb.passed}}}};
  emit_json(c, j, out, true);
  const bool ok = nu.passed && rw.certified_at_max && rw.eps_monotone_violations == 0 && tb.passed;
  return ok ? exit_ok : exit_violation;
}

int cmd_sweep(const RunConfig& c, std::ostream& out) {
  const SweepResult r = run_sweep(c);
  std::ostringstream csv;
  output::write_sweep_csv(csv, r.rows);
  emit(c.out.csv, out, [&](std::ostream& o) { o << csv.str(); });
  if (!c.out.json.empty()) {
    int failed = 0;
    for (const auto& row : r.rows) failed += row.status != "ok";
    emit(c.out.json, out, [&](std::ostream& o) {
      o << json{{"rows", r.rows.size()}, {"failed", failed}, {"exit_code", r.exit_code}}.dump(2)
        << '\n';
    });
  }
  return r.exit_code;
}

void error_record(std::ostream& err, const std::string& kind, const std::string& msg, int code) {
  err << json{{"error", kind}, {"message", msg}, {"exit_code", code}}.dump() << '\n';
}

}  // namespace

SweepResult run_sweep(const RunConfig& c) {
  struct Job {
    DomainChoice domain;
    double sigma;
  };
  std::vector<Job> jobs;
  for (const auto& d : c.sweep.domains)
    for (double s : c.sweep.sigmas) jobs.push_back({d, s});
  std::vector<std::vector<output::SweepRow>> rows(jobs.size());
  std::vector<int> codes(jobs.size(), exit_ok);
  parallel_blocks(jobs.size(), c.solve.workers, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      solver::SolveConfig sc = c.solve;
      sc.sigma_target = jobs[i].sigma;
      sc.workers = 1;
      audit::AuditConfig ac = c.audit;
      ac.workers = 1;
      const solver::DomainSpec d = make_domain(jobs[i].domain, sc.n);
      const auto blank = [&](double eps, const std::string& status) {
        output::SweepRow row;
        row.domain = d.label();
        row.n = sc.n;
        row.sigma = sc.sigma_target;
        row.eps = eps;
        row.max_kappa_interior = row.max_kappa_boundary = row.nu_min = row.Q_max =
            row.rw_minK_max = row.residual = kNaN;
        row.status = status;
        return row;
      };
      try {
        for (const auto& f : solve_path(sc, d, mesh_for(c.mesh_kind, d))) {
          output::SweepRow row = blank(f.convergence.eps_bdry, "ok");
          const auto rep = audit::audit(f, ac);
          row.max_kappa_interior = rep.max_kappa_interior;
          row.max_kappa_boundary = rep.max_kappa_boundary;
          row.nu_min = rep.nu_min;
          row.Q_max = rep.Q_max;
          row.rw_minK_max = rep.rw_minK_max;
          row.iterations = f.convergence.iterations;
          row.residual = f.convergence.residual;
          rows[i].push_back(row);
        }
      } catch (const Error& e) {
        rows[i].clear();
        for (double eps : sc.eps_schedule) rows[i].push_back(blank(eps, std::string(to_string(e.kind()))));
        codes[i] = e.kind() == ErrorKind::cone_violation ? exit_cone_guard : exit_no_convergence;
      }
    }
  });
  SweepResult r;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    r.rows.insert(r.rows.end(), rows[i].begin(), rows[i].end());
    if (codes[i] == exit_cone_guard || (codes[i] != exit_ok && r.exit_code == exit_ok))
      r.exit_code = codes[i];
  }
  return r;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dirichlet approximations of the asymptotic Plateau problem"};
  app.require_subcommand(1);
  Flags f;
  auto* sr = app.add_subcommand("solve-radial", "rotational solve on a ball");
  add_common(sr, f);
  add_solve(sr, f);
  sr->add_option("--radius", f.radius, "ball radius");
  sr->add_option("--nodes", f.nodes, "radial nodes");
  auto* sg = app.add_subcommand("solve-grid", "mapped-grid solve on a star-shaped domain");
  add_common(sg, f);
  add_solve(sg, f);
  add_domain(sg, f);
  add_grid(sg, f);
  auto* oc = app.add_subcommand("oracle-cap", "closed-form umbilic cap");
  add_common(oc, f);
  oc->add_option("--n", f.n);
  oc->add_option("--sigma", f.sigma);
  oc->add_option("--radius", f.radius);
  oc->add_option("--eps", f.eps);
  oc->add_option("--nodes", f.nodes);
  auto* vc = app.add_subcommand("verify-cone", "cone-lemma inequalities on seeded samples");
  add_common(vc, f);
  vc->add_option("--n", f.n);
  vc->add_option("--k", f.k);
  vc->add_option("--samples", f.samples);
  auto* rw = app.add_subcommand("renwang", "minimal Ren-Wang constants on seeded samples");
  add_common(rw, f);
  rw->add_option("--n", f.n);
  rw->add_option("--eps-rw", f.eps_rw);
  rw->add_option("--samples", f.samples);
  rw->add_option("--spot-checks", f.spot_checks);
  rw->add_option("--xi", f.xi, "random directions per spot check");
  auto* au = app.add_subcommand("audit", "solve over the eps schedule and audit the estimates");
  add_common(au, f);
  add_solve(au, f);
  add_domain(au, f);
  add_grid(au, f);
  add_audit(au, f);
  auto* sw = app.add_subcommand("sweep", "solve and audit over sigma and domain axes");
  add_common(sw, f);
  add_solve(sw, f);
  add_domain(sw, f);
  add_grid(sw, f);
  add_audit(sw, f);
  sw->add_option("--sigmas", f.sigmas)->delimiter(',');

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    error_record(err, "invalid_argument", e.what(), exit_invalid_config);
    return exit_invalid_config;
  }
  const std::string sub = app.get_subcommands().front()->get_name();
  try {
    RunConfig c = build_config(sub, f);
    if (sub == "oracle-cap" && c.domain.kind != "ball")
      fail(ErrorKind::invalid_argument, "oracle-cap needs a ball");
    validate(c);
    std::ostringstream buffer;
    int code = exit_ok;
    if (sub == "solve-radial" || sub == "solve-grid")
      code = cmd_solve(c, buffer);
    else if (sub == "oracle-cap")
      code = cmd_oracle_cap(c, buffer);
    else if (sub == "verify-cone")
      code = cmd_verify_cone(c, buffer);
    else if (sub == "renwang")
      code = cmd_renwang(c, buffer);
    else if (sub == "audit")
      code = cmd_audit(c, buffer);
    else
      code = cmd_sweep(c, buffer);
    out << buffer.str();
    if (code == exit_violation) error_record(err, "verification_violation", "check failed", code);
    if (code == exit_no_convergence || code == exit_cone_guard)
      error_record(err, code == exit_cone_guard ? "cone_violation" : "newton_divergence",
                   "one or more sweep points failed", code);
    return code;
  } catch (const Error& e) {
    const int code = exit_for(e.kind());
    error_record(err, std::string(to_string(e.kind())), e.what(), code);
    return code;
  } catch (const std::exception& e) {
    error_record(err, "internal", e.what(), exit_no_convergence);
    return exit_no_convergence;
  }
}

}  // namespace plateau::cli
