#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "plateau/cli/harness.hpp"
#include "plateau/error.hpp"

namespace plateau::cli {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& msg) { fail(ErrorKind::invalid_argument, msg); }

void only_keys(const json& j, const std::string& where, std::set<std::string> allowed) {
  if (!j.is_object()) bad(where + " must be an object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) bad("unknown key '" + key + "' in " + where);
}

template <typename T>
void take(const json& j, const char* key, T& into) {
  if (!j.contains(key)) return;
  try {
    into = j.at(key).get<T>();
  } catch (const json::exception&) {
    bad(std::string("bad value for '") + key + "'");
  }
}

DomainChoice parse_domain(const json& j) {
  only_keys(j, "domain", {"kind", "params"});
  DomainChoice d;
  take(j, "kind", d.kind);
  take(j, "params", d.params);
  return d;
}

}  // namespace

solver::DomainSpec make_domain(const DomainChoice& c, int n) {
  if (c.kind == "ball") {
    if (c.params.size() > 1) bad("ball takes at most one parameter (the radius)");
    return solver::DomainSpec::ball(n, c.params.empty() ? 1.0 : c.params.front());
  }
  if (c.kind == "ellipsoid") {
    if (static_cast<int>(c.params.size()) != n) bad("ellipsoid needs n semi-axes");
    return solver::DomainSpec::ellipsoid(c.params);
  }
  if (c.kind == "star_shaped") {
    if (n != 2) bad("star-shaped domains are planar");
    return solver::DomainSpec::star_shaped(c.params);
  }
  bad("unknown domain kind '" + c.kind + "'");
}

void apply_json(RunConfig& c, const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    bad(std::string("config is not valid JSON: ") + e.what());
  }
  only_keys(j, "config",
            {"n", "sigma", "domain", "eps_schedule", "mesh", "newton", "audit", "seed",
             "workers", "out", "sigma_path", "max_refinements", "sampling", "sweep", "bound"});
  take(j, "n", c.solve.n);
  take(j, "sigma", c.solve.sigma_target);
  take(j, "eps_schedule", c.solve.eps_schedule);
  take(j, "sigma_path", c.solve.continuation.sigma_path);
  take(j, "max_refinements", c.solve.continuation.max_refinements);
  take(j, "seed", c.solve.seed);
  take(j, "workers", c.solve.workers);
  if (j.contains("domain")) c.domain = parse_domain(j["domain"]);
  if (j.contains("mesh")) {
    const json& m = j["mesh"];
    only_keys(m, "mesh", {"kind", "radial_nodes", "ns", "ntheta", "nphi", "clustering"});
    std::string kind;
    take(m, "kind", kind);
    if (kind == "radial")
      c.mesh_kind = MeshChoice::radial;
    else if (kind == "grid")
      c.mesh_kind = MeshChoice::grid;
    else if (kind == "auto")
      c.mesh_kind = MeshChoice::automatic;
    else if (!kind.empty())
      bad("mesh kind must be radial, grid or auto");
    take(m, "radial_nodes", c.solve.mesh.radial_nodes);
    take(m, "ns", c.solve.mesh.ns);
    take(m, "ntheta", c.solve.mesh.ntheta);
    take(m, "nphi", c.solve.mesh.nphi);
    take(m, "clustering", c.solve.mesh.clustering);
  }
  if (j.contains("newton")) {
    const json& m = j["newton"];
    only_keys(m, "newton", {"max_iters", "residual_tol", "step_damping", "min_step"});
    take(m, "max_iters", c.solve.newton.max_iters);
    take(m, "residual_tol", c.solve.newton.residual_tol);
    take(m, "step_damping", c.solve.newton.step_damping);
    take(m, "min_step", c.solve.newton.min_step);
  }
  if (j.contains("audit")) {
    const json& m = j["audit"];
    only_keys(m, "audit", {"N", "eps_rw", "rw_sample_cap", "fd_step"});
    take(m, "N", c.audit.N);
    take(m, "eps_rw", c.audit.eps_rw);
    take(m, "rw_sample_cap", c.audit.rw_sample_cap);
    take(m, "fd_step", c.audit.fd_step);
  }
  if (j.contains("sampling")) {
    const json& m = j["sampling"];
    only_keys(m, "sampling", {"k", "samples", "eps_rw", "spot_checks", "xi_per_check"});
    take(m, "k", c.sampling.k);
    take(m, "samples", c.sampling.samples);
    take(m, "eps_rw", c.sampling.eps_rw);
    take(m, "spot_checks", c.sampling.spot_checks);
    take(m, "xi_per_check", c.sampling.xi_per_check);
  }
  if (j.contains("sweep")) {
    const json& m = j["sweep"];
    only_keys(m, "sweep", {"sigmas", "domains"});
    take(m, "sigmas", c.sweep.sigmas);
    if (m.contains("domains")) {
      if (!m["domains"].is_array()) bad("sweep.domains must be an array");
      c.sweep.domains.clear();
      for (const auto& d : m["domains"]) c.sweep.domains.push_back(parse_domain(d));
    }
  }
  if (j.contains("bound")) {
    const json& m = j["bound"];
    only_keys(m, "bound", {"c1", "c2"});
    audit::BoundConstants b;
    take(m, "c1", b.c1);
    take(m, "c2", b.c2);
    c.frozen = b;
  }
  if (j.contains("out")) {
    const json& m = j["out"];
    only_keys(m, "out", {"csv", "json"});
    take(m, "csv", c.out.csv);
    take(m, "json", c.out.json);
  }
}

std::vector<double> schedule_ending_at(double eps) {
  std::vector<double> s;
  for (double e : solver::default_eps_schedule())
    if (e > eps) s.push_back(e);
  s.push_back(eps);
  return s;
}

void validate(const RunConfig& c) {
  const auto& s = c.subcommand;
  if (s == "verify-cone") {
    if (c.solve.n < 2) bad("n must be >= 2");
    if (c.sampling.k < 1 || c.sampling.k > c.solve.n) bad("k must lie in 1..n");
    if (c.sampling.samples < 1) bad("samples must be >= 1");
    if (c.solve.workers < 1) bad("workers must be >= 1");
    return;
  }
  if (s == "renwang") {
    if (c.solve.n < 2) bad("n must be >= 2");
    if (!(c.sampling.eps_rw > 0.0)) bad("eps_rw must be positive");
    if (c.sampling.samples < 1) bad("samples must be >= 1");
    if (c.sampling.spot_checks < 0 || c.sampling.xi_per_check < 1)
      bad("spot_checks must be >= 0 and xi_per_check >= 1");
    if (c.solve.workers < 1) bad("workers must be >= 1");
    return;
  }
  solver::validate(c.solve);
  if (s == "sweep") {
    if (c.sweep.sigmas.empty() || c.sweep.domains.empty()) bad("sweep axes are empty");
    for (double sigma : c.sweep.sigmas)
      if (!(sigma > 0.0 && sigma < c.solve.n)) bad("sweep sigma must lie in (0, n)");
    for (const auto& d : c.sweep.domains) make_domain(d, c.solve.n);
  } else {
    make_domain(c.domain, c.solve.n);
  }
  if (s == "audit" || s == "sweep") audit::validate(c.audit);
  if (c.frozen && !(c.frozen->c1 >= 0.0 && c.frozen->c2 >= 0.0))
    bad("bound constants must be nonnegative");
}

}  // namespace plateau::cli
