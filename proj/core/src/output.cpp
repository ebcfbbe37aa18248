#include "plateau/output.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "plateau/error.hpp"
#include "plateau/format.hpp"

namespace plateau::output {

namespace {

void write_row(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out << ',';
    out << cells[i];
  }
  out << '\n';
}

}  // namespace

std::vector<std::string> solution_header(const solver::SolutionField& f, bool with_audit) {
  std::vector<std::string> h;
  if (f.mesh_kind == solver::MeshKind::radial) {
    h = {"r", "u", "du", "d2u", "kappa_rad", "kappa_ang", "nu_vertical", "residual"};
  } else {
    for (int i = 1; i <= f.n(); ++i) h.push_back("x_" + std::to_string(i));
    h.push_back("u");
    h.push_back("grad_norm");
    for (int i = 1; i <= f.n(); ++i) h.push_back("kappa_" + std::to_string(i));
    h.push_back("nu_vertical");
    h.push_back("residual");
  }
  if (with_audit) {
    h.push_back("Q");
    h.push_back("rw_minK");
  }
  return h;
}

void write_solution_csv(std::ostream& out, const solver::SolutionField& f,
                        const AuditColumns* audit) {
  if (audit && (audit->Q.size() != f.nodes.size() || audit->rw_minK.size() != f.nodes.size()))
    fail(ErrorKind::invalid_argument, "audit columns do not match the field");
  write_row(out, solution_header(f, audit != nullptr));
  std::vector<std::string> cells;
  for (std::size_t i = 0; i < f.nodes.size(); ++i) {
    const solver::NodeData& nd = f.nodes[i];
    cells.clear();
    if (f.mesh_kind == solver::MeshKind::radial) {
      const double r = nd.x[0];
      const double du = nd.grad_u[0];
      const double d2u = nd.hess_u(0, 0);
      const double w = std::sqrt(1.0 + du * du);
      const double k_rad = nd.u * d2u / (w * w * w) + 1.0 / w;
      const double k_ang = r > 0.0 ? nd.u * du / (r * w) + 1.0 / w : k_rad;
      for (double v : {r, nd.u, du, d2u, k_rad, k_ang, nd.nu_vertical, nd.residual})
        cells.push_back(format_double(v));
    } else {
      for (int d = 0; d < f.n(); ++d) cells.push_back(format_double(nd.x[d]));
      cells.push_back(format_double(nd.u));
      cells.push_back(format_double(nd.grad_u.norm()));
      for (int d = 0; d < f.n(); ++d) cells.push_back(format_double(nd.kappa[d]));
      cells.push_back(format_double(nd.nu_vertical));
      cells.push_back(format_double(nd.residual));
    }
    if (audit) {
      cells.push_back(format_double(audit->Q[i]));
      cells.push_back(audit->rw_minK[i] ? format_double(*audit->rw_minK[i]) : std::string());
    }
    write_row(out, cells);
  }
}

const std::vector<std::string>& sweep_header() {
  static const std::vector<std::string> h = {
      "domain", "n",           "sigma",      "eps",      "max_kappa_interior", "max_kappa_boundary",
      "nu_min", "Q_max",       "rw_minK_max", "iterations", "residual",        "status"};
  return h;
}

void write_sweep_csv(std::ostream& out, std::vector<SweepRow> rows) {
  std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return std::tie(a.domain, a.n, a.sigma, b.eps) < std::tie(b.domain, b.n, b.sigma, a.eps);
  });
  write_row(out, sweep_header());
  for (const auto& r : rows) {
    // Domain labels contain commas, so they are quoted.
    write_row(out, {"\"" + r.domain + "\"", std::to_string(r.n), format_double(r.sigma),
                    format_double(r.eps), format_double(r.max_kappa_interior),
                    format_double(r.max_kappa_boundary), format_double(r.nu_min),
                    format_double(r.Q_max), format_double(r.rw_minK_max),
                    std::to_string(r.iterations), format_double(r.residual), r.status});
  }
}

}  // namespace plateau::output
