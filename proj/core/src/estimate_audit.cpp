#include "plateau/estimate_audit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "plateau/cone_calculus.hpp"
#include "plateau/error.hpp"
#include "plateau/parallel.hpp"

namespace plateau::audit {

using geometry::HeightField;
using geometry::HeightJet;
using solver::NodeData;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double kappa_abs_max(const NodeData& nd) { return nd.kappa.cwiseAbs().maxCoeff(); }

std::vector<int> interior_indices(const SolutionField& f) {
  std::vector<int> idx;
  for (int i = 0; i < static_cast<int>(f.nodes.size()); ++i)
    if (!f.nodes[i].boundary) idx.push_back(i);
  return idx;
}

// Evenly spaced picks of at most `cap` entries, shifted by the seed.
std::vector<int> pick(const std::vector<int>& from, int cap, std::uint64_t seed) {
  const std::size_t c = from.size();
  if (c <= static_cast<std::size_t>(cap)) return from;
  const std::size_t stride = c / static_cast<std::size_t>(cap);
  const std::size_t offset = static_cast<std::size_t>(seed % stride);
  std::vector<int> out;
  for (int j = 0; j < cap; ++j) out.push_back(from[static_cast<std::size_t>(j) * c / cap + offset]);
  return out;
}

// Clamped cubic spline through (r_j, u_j).
struct Spline {
  std::vector<double> r, u, m;

  Spline(std::vector<double> rr, std::vector<double> uu, double d0, double d1)
      : r(std::move(rr)), u(std::move(uu)), m(r.size(), 0.0) {
    const std::size_t n = r.size();
    std::vector<double> a(n), b(n), c(n), d(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double hl = i > 0 ? r[i] - r[i - 1] : 0.0;
      const double hr = i + 1 < n ? r[i + 1] - r[i] : 0.0;
      a[i] = hl;
      b[i] = 2.0 * (hl + hr);
      c[i] = hr;
      const double sl = i > 0 ? (u[i] - u[i - 1]) / hl : d0;
      const double sr = i + 1 < n ? (u[i + 1] - u[i]) / hr : d1;
      d[i] = 6.0 * (sr - sl);
    }
    for (std::size_t i = 1; i < n; ++i) {
      const double w = a[i] / b[i - 1];
      b[i] -= w * c[i - 1];
      d[i] -= w * d[i - 1];
    }
    m[n - 1] = d[n - 1] / b[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) m[i] = (d[i] - c[i] * m[i + 1]) / b[i];
  }

  // Value and two derivatives.
  std::array<double, 3> eval(double x) const {
    std::size_t i = static_cast<std::size_t>(std::upper_bound(r.begin(), r.end(), x) - r.begin());
    i = std::clamp<std::size_t>(i, 1, r.size() - 1) - 1;
    const double h = r[i + 1] - r[i];
    const double A = r[i + 1] - x;
    const double B = x - r[i];
    const double ca = u[i] / h - m[i] * h / 6.0;
    const double cb = u[i + 1] / h - m[i + 1] * h / 6.0;
    return {m[i] * A * A * A / (6.0 * h) + m[i + 1] * B * B * B / (6.0 * h) + ca * A + cb * B,
            -m[i] * A * A / (2.0 * h) + m[i + 1] * B * B / (2.0 * h) - ca + cb,
            m[i] * A / h + m[i + 1] * B / h};
  }
};

HeightField radial_field(const SolutionField& f) {
  std::vector<double> r, u;
  for (const auto& nd : f.nodes) {
    r.push_back(nd.x[0]);
    u.push_back(nd.u);
  }
  auto spline = std::make_shared<Spline>(std::move(r), std::move(u), 0.0,
                                         f.nodes.back().grad_u[0]);
  const int n = f.n();
  return [spline, n](const Vec& x) {
    const double rr = x.norm();
    const auto s = spline->eval(rr);
    HeightJet j;
    j.u = s[0];
    if (rr < 1e-14) {
      j.grad = Vec::Zero(n);
      j.hess = s[2] * Mat::Identity(n, n);
      return j;
    }
    const Vec e = x / rr;
    j.grad = s[1] * e;
    j.hess = s[2] * e * e.transpose() + (s[1] / rr) * (Mat::Identity(n, n) - e * e.transpose());
    return j;
  };
}

// Exponents of the monomials of total degree <= 3 in `n` variables.
std::vector<std::vector<int>> cubic_monomials(int n) {
  std::vector<std::vector<int>> out;
  std::vector<int> e(n, 0);
  const auto rec = [&](auto&& self, int var, int left) -> void {
    if (var == n) {
      out.push_back(e);
      return;
    }
    for (int p = 0; p <= left; ++p) {
      e[var] = p;
      self(self, var + 1, left - p);
    }
    e[var] = 0;
  };
  rec(rec, 0, 3);
  return out;
}

HeightField polynomial_fit(const SolutionField& f, const Vec& centre) {
  const int n = f.n();
  const auto mono = cubic_monomials(n);
  const std::size_t k = std::min(f.nodes.size(), 3 * mono.size());
  std::vector<std::pair<double, int>> dist;
  dist.reserve(f.nodes.size());
  for (int i = 0; i < static_cast<int>(f.nodes.size()); ++i)
    dist.emplace_back((f.nodes[i].x - centre).squaredNorm(), i);
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  const double scale = std::sqrt(dist[k - 1].first) + 1e-300;
  Mat a(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(mono.size()));
  Vec b(static_cast<Eigen::Index>(k));
  for (std::size_t row = 0; row < k; ++row) {
    const NodeData& nd = f.nodes[dist[row].second];
    const Vec y = (nd.x - centre) / scale;
    for (std::size_t c = 0; c < mono.size(); ++c) {
      double v = 1.0;
      for (int d = 0; d < n; ++d) v *= std::pow(y[d], mono[c][d]);
      a(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(c)) = v;
    }
    b[static_cast<Eigen::Index>(row)] = nd.u;
  }
  const Vec coef = a.colPivHouseholderQr().solve(b);
  return [coef, mono, centre, scale, n](const Vec& x) {
    const Vec y = (x - centre) / scale;
    HeightJet j;
    j.u = 0.0;
    j.grad = Vec::Zero(n);
    j.hess = Mat::Zero(n, n);
    auto pw = [](double base, int e) { return e <= 0 ? 1.0 : std::pow(base, e); };
    for (std::size_t c = 0; c < mono.size(); ++c) {
      const auto& e = mono[c];
      double v = 1.0;
      for (int d = 0; d < n; ++d) v *= pw(y[d], e[d]);
      j.u += coef[static_cast<Eigen::Index>(c)] * v;
      for (int p = 0; p < n; ++p) {
        if (e[p] == 0) continue;
        double g = e[p] * pw(y[p], e[p] - 1);
        for (int d = 0; d < n; ++d)
          if (d != p) g *= pw(y[d], e[d]);
        j.grad[p] += coef[static_cast<Eigen::Index>(c)] * g / scale;
        for (int q = 0; q < n; ++q) {
          double h = 1.0;
          if (q == p) {
            if (e[p] < 2) continue;
            h = e[p] * (e[p] - 1) * pw(y[p], e[p] - 2);
            for (int d = 0; d < n; ++d)
              if (d != p) h *= pw(y[d], e[d]);
          } else {
            if (e[q] == 0) continue;
            h = e[p] * pw(y[p], e[p] - 1) * e[q] * pw(y[q], e[q] - 1);
            for (int d = 0; d < n; ++d)
              if (d != p && d != q) h *= pw(y[d], e[d]);
          }
          j.hess(p, q) += coef[static_cast<Eigen::Index>(c)] * h / (scale * scale);
        }
      }
    }
    return j;
  };
}

double identity_sup(const geometry::IdentityReport& rep) {
  double s = 0.0;
  for (const auto& smp : rep.samples) s = std::max(s, std::abs(smp.residual));
  return s;
}

}  // namespace

void validate(const AuditConfig& c) {
  if (!(c.N > 0.0)) fail(ErrorKind::invalid_argument, "N must be positive");
  if (!(c.eps_rw > 0.0)) fail(ErrorKind::invalid_argument, "eps_rw must be positive");
  if (c.rw_sample_cap < 1) fail(ErrorKind::invalid_argument, "rw_sample_cap must be >= 1");
  if (!(c.fd_step > 0.0)) fail(ErrorKind::invalid_argument, "fd_step must be positive");
  if (c.workers < 1) fail(ErrorKind::invalid_argument, "workers must be >= 1");
}

std::vector<double> default_N_sweep() { return {5.0, 50.0, 500.0}; }

bool boundary_adjacent(const SolutionField& field, const NodeData& node) {
  return node.ring >= field.boundary_ring() - 1;
}

double max_kappa_interior(const SolutionField& f) {
  double m = 0.0;
  for (const auto& nd : f.nodes)
    if (!nd.boundary) m = std::max(m, kappa_abs_max(nd));
  return m;
}

double max_kappa_boundary(const SolutionField& f) {
  double m = 0.0;
  for (const auto& nd : f.nodes)
    if (boundary_adjacent(f, nd)) m = std::max(m, kappa_abs_max(nd));
  return m;
}

double nu_min(const SolutionField& f) {
  double m = kInf;
  for (const auto& nd : f.nodes) m = std::min(m, nd.nu_vertical);
  return m;
}

QField test_function_field(const SolutionField& f, const AuditConfig& config) {
  if (!f.cone_ok) fail(ErrorKind::audit_precondition, "field is not inside the cone");
  if (!(config.N >= 0.0)) fail(ErrorKind::invalid_argument, "N must be >= 0");
  QField out;
  out.N = config.N;
  out.max = -kInf;
  out.interior_max = -kInf;
  out.boundary_max = -kInf;
  out.q.reserve(f.nodes.size());
  for (int i = 0; i < static_cast<int>(f.nodes.size()); ++i) {
    const NodeData& nd = f.nodes[i];
    const double k1 = nd.kappa[0];
    if (!(k1 > 0.0)) fail(ErrorKind::audit_precondition, "largest curvature is not positive");
    const double q = std::log(k1) - config.N * std::log(nd.nu_vertical);
    out.q.push_back(q);
    if (q > out.max) {
      out.max = q;
      out.argmax = i;
    }
    if (nd.boundary)
      out.boundary_max = std::max(out.boundary_max, q);
    else
      out.interior_max = std::max(out.interior_max, q);
  }
  out.argmax_on_boundary = out.argmax >= 0 && f.nodes[out.argmax].boundary;
  return out;
}

NuBoundReport nu_lower_bound_check(std::span<const SolutionField> solutions) {
  if (solutions.empty()) fail(ErrorKind::invalid_argument, "no solutions given");
  const SolutionField& first = solutions.front();
  NuBoundReport r;
  r.schedule_min = kInf;
  for (const auto& f : solutions) {
    if (f.n() != first.n() || f.domain.label() != first.domain.label() ||
        f.convergence.sigma != first.convergence.sigma)
      fail(ErrorKind::invalid_argument, "solutions must share n, domain and sigma");
    r.eps.push_back(f.convergence.eps_bdry);
    const double m = nu_min(f);
    r.nu_min.push_back(m);
    r.schedule_min = std::min(r.schedule_min, m);
    double slope = 0.0;
    for (const auto& nd : f.nodes)
      if (nd.boundary) slope = std::max(slope, nd.grad_u.norm());
    r.boundary_slope_max.push_back(slope);
  }
  if (first.domain.kind() == solver::DomainKind::ball) {
    const double lambda = std::pow(first.convergence.sigma / first.n(), 1.0 / (first.n() - 1));
    r.oracle_lambda = lambda;
    r.lower_bound = 0.5 * lambda;
    r.passed = r.schedule_min >= r.lower_bound;
  } else {
    r.lower_bound = r.schedule_min;
    r.passed = r.schedule_min > 0.0;
  }
  return r;
}

BoundConstants fit_bound_constants(std::span<const SolutionField> solutions) {
  if (solutions.empty()) fail(ErrorKind::invalid_argument, "no solutions given");
  std::vector<double> xi, yi;
  for (const auto& f : solutions) {
    xi.push_back(max_kappa_boundary(f));
    yi.push_back(max_kappa_interior(f));
  }
  const double n = static_cast<double>(xi.size());
  const double mx = std::accumulate(xi.begin(), xi.end(), 0.0) / n;
  const double my = std::accumulate(yi.begin(), yi.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xi.size(); ++i) {
    sxy += (xi[i] - mx) * (yi[i] - my);
    sxx += (xi[i] - mx) * (xi[i] - mx);
  }
  BoundConstants c;
  c.c2 = sxx > 0.0 ? std::max(0.0, sxy / sxx) : 0.0;
  c.c1 = -kInf;
  for (std::size_t i = 0; i < xi.size(); ++i) c.c1 = std::max(c.c1, yi[i] - c.c2 * xi[i]);
  c.c1 = std::max(0.0, c.c1);
  return c;
}

TheoremBoundReport theorem_bound_check(std::span<const SolutionField> solutions,
                                       std::optional<BoundConstants> frozen,
                                       double residual_tol) {
  if (solutions.empty()) fail(ErrorKind::invalid_argument, "no solutions given");
  for (const auto& f : solutions)
    if (!f.cone_ok || !(f.convergence.residual <= residual_tol))
      fail(ErrorKind::audit_precondition, "bound check needs converged, cone-admissible fields");
  TheoremBoundReport r;
  r.constants = frozen ? *frozen : fit_bound_constants(solutions);
  r.worst_margin = kInf;
  std::map<std::pair<std::string, double>, std::vector<std::pair<double, double>>> groups;
  for (const auto& f : solutions) {
    BoundRow row{f.domain.label(), f.convergence.sigma, f.convergence.eps_bdry,
                 max_kappa_interior(f), max_kappa_boundary(f)};
    r.worst_margin = std::min(r.worst_margin, r.constants.c1 +
                                                  r.constants.c2 * row.max_kappa_boundary -
                                                  row.max_kappa_interior);
    groups[{row.domain, row.sigma}].emplace_back(row.eps, row.max_kappa_interior);
    r.rows.push_back(std::move(row));
  }
  // Relative slack absorbs the last-digit rounding of frozen constants.
  r.bound_holds = r.worst_margin >= -1e-9 * (1.0 + r.constants.c1);
  for (auto& [key, vals] : groups) {
    double emin = kInf;
    for (const auto& v : vals) emin = std::min(emin, v.first);
    double lo = kInf, hi = -kInf;
    for (const auto& v : vals)
      if (v.first <= 100.0 * emin * (1.0 + 1e-12)) {
        lo = std::min(lo, v.second);
        hi = std::max(hi, v.second);
      }
    if (hi > 0.0) r.max_variation = std::max(r.max_variation, (hi - lo) / hi);
  }
  r.stable = r.max_variation < 0.1;
  r.passed = r.bound_holds && r.stable;
  return r;
}

RWReport rw_on_solution(const SolutionField& f, const AuditConfig& config) {
  validate(config);
  if (!f.cone_ok) fail(ErrorKind::audit_precondition, "field is not inside the cone");
  RWReport r;
  r.nodes = pick(interior_indices(f), config.rw_sample_cap, config.seed);
  const std::size_t m = r.nodes.size();
  r.min_K.assign(m, 0.0);
  std::vector<double> doubled(m, 0.0);
  std::vector<cone::CurvatureVector> spectra;
  spectra.reserve(m);
  for (int idx : r.nodes) {
    const Vec& k = f.nodes[idx].kappa;
    spectra.emplace_back(std::vector<double>(k.data(), k.data() + k.size()));
  }
  parallel_blocks(m, config.workers, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      r.min_K[i] = cone::ren_wang_min_K(spectra[i], config.eps_rw);
      doubled[i] = cone::ren_wang_min_K(spectra[i], 2.0 * config.eps_rw);
    }
  });
  if (m == 0) return r;
  r.max_K = *std::max_element(r.min_K.begin(), r.min_K.end());
  r.min_K_min = *std::min_element(r.min_K.begin(), r.min_K.end());
  std::vector<double> sorted = r.min_K;
  std::sort(sorted.begin(), sorted.end());
  r.median_K = sorted[m / 2];
  r.certified_at_max = std::isfinite(r.max_K);
  for (std::size_t i = 0; i < m && r.certified_at_max; ++i)
    r.certified_at_max = cone::ren_wang_form(spectra[i], config.eps_rw, r.max_K).certified;
  for (std::size_t i = 0; i < m; ++i)
    if (doubled[i] > r.min_K[i] * (1.0 + 1e-8) + 1e-12) ++r.eps_monotone_violations;
  return r;
}

HeightField interpolate(const SolutionField& f, const Vec& centre) {
  if (f.mesh_kind == solver::MeshKind::radial) return radial_field(f);
  return polynomial_fit(f, centre);
}

Lemma21Report lemma21_on_solution(const SolutionField& f, const AuditConfig& config) {
  validate(config);
  Lemma21Report rep;
  std::vector<Vec> points;
  geometry::FramePolicy policy = geometry::FramePolicy::strict;
  std::vector<HeightField> fields;
  const double h = config.fd_step;
  constexpr int kSamples = 16;
  if (f.mesh_kind == solver::MeshKind::radial) {
    // Mid-cell points keep every stencil inside one spline piece.
    policy = geometry::FramePolicy::accept_degenerate;
    const HeightField field = radial_field(f);
    const int m = static_cast<int>(f.nodes.size()) - 1;
    std::vector<int> cells;
    for (int j = 1; j + 2 <= m; ++j) cells.push_back(j);
    for (int j : pick(cells, kSamples, config.seed)) {
      const double r0 = f.nodes[j].x[0];
      const double r1 = f.nodes[j + 1].x[0];
      const double reach = h * f.nodes[j].u * 1.5;
      if (reach >= 0.45 * (r1 - r0)) {
        ++rep.skipped;
        continue;
      }
      Vec x = Vec::Zero(f.n());
      x[0] = 0.5 * (r0 + r1);
      points.push_back(x);
      fields.push_back(field);
    }
  } else {
    std::vector<int> candidates;
    const int last = f.boundary_ring();
    for (int i = 0; i < static_cast<int>(f.nodes.size()); ++i) {
      const auto& nd = f.nodes[i];
      if (nd.boundary) continue;
      if (nd.ring >= last - 2) {
        ++rep.skipped;
        continue;
      }
      candidates.push_back(i);
    }
    for (int i : pick(candidates, kSamples, config.seed)) {
      points.push_back(f.nodes[i].x);
      fields.push_back(polynomial_fit(f, f.nodes[i].x));
    }
  }
  rep.sampled = static_cast<int>(points.size());
  std::vector<double> full(points.size()), half(points.size());
  std::vector<char> ambiguous(points.size(), 0);
  parallel_blocks(points.size(), config.workers, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const auto a = geometry::nu_identity_residuals(fields[i], points[i], h, policy);
      const auto b = geometry::nu_identity_residuals(fields[i], points[i], 0.5 * h, policy);
      full[i] = identity_sup(a);
      half[i] = identity_sup(b);
      ambiguous[i] = a.has(geometry::Identity::nu_gradient) ? 0 : 1;
    }
  });
  for (std::size_t i = 0; i < points.size(); ++i) {
    rep.sup_residual = std::max(rep.sup_residual, full[i]);
    rep.sup_residual_half = std::max(rep.sup_residual_half, half[i]);
    rep.frame_free_only += ambiguous[i];
  }
  if (rep.sup_residual > 0.0 && rep.sup_residual_half > 0.0)
    rep.order = std::log2(rep.sup_residual / rep.sup_residual_half);
  return rep;
}

EstimateReport audit(const SolutionField& f, const AuditConfig& config, double c2) {
  validate(config);
  EstimateReport r;
  r.max_kappa_interior = max_kappa_interior(f);
  r.max_kappa_boundary = max_kappa_boundary(f);
  r.nu_min = nu_min(f);
  const QField q = test_function_field(f, config);
  r.Q_max = q.max;
  r.Q_argmax = f.nodes[q.argmax].x;
  r.Q_argmax_on_boundary = q.argmax_on_boundary;
  r.Q_boundary_max = q.boundary_max;
  r.rw_minK_max = rw_on_solution(f, config).max_K;
  r.bound_constant_witness = r.max_kappa_interior - c2 * r.max_kappa_boundary;
  for (double n : default_N_sweep()) {
    AuditConfig c = config;
    c.N = n;
    const QField qn = test_function_field(f, c);
    r.q_sweep.push_back({n, qn.max, qn.interior_max, qn.boundary_max, qn.argmax_on_boundary});
  }
  return r;
}

}  // namespace plateau::audit
