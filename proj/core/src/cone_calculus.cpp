#include "plateau/cone_calculus.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <string>

#include "plateau/error.hpp"

namespace plateau {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::degenerate_spectrum: return "degenerate_spectrum";
    case ErrorKind::invalid_height: return "invalid_height";
    case ErrorKind::ambiguous_frame: return "ambiguous_frame";
    case ErrorKind::newton_divergence: return "newton_divergence";
    case ErrorKind::cone_violation: return "cone_violation";
    case ErrorKind::mapped_grid_degeneracy: return "mapped_grid_degeneracy";
    case ErrorKind::invalid_state: return "invalid_state";
    case ErrorKind::audit_precondition: return "audit_precondition";
  }
  return "unknown";
}

}  // namespace plateau

namespace plateau::cone {

namespace {

constexpr std::size_t kSampleBlock = 1024;

void check_order(std::size_t n, int k, int lo) {
  if (k < lo || k > static_cast<int>(n)) {
    fail(ErrorKind::invalid_argument,
         "order k=" + std::to_string(k) + " outside [" + std::to_string(lo) + ", " +
             std::to_string(n) + "]");
  }
}

// Copy of `values` with the listed positions removed.
std::vector<double> without(std::span<const double> values, std::size_t p,
                            std::size_t q = std::numeric_limits<std::size_t>::max()) {
  std::vector<double> out;
  out.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    if (i != p && i != q) out.push_back(values[i]);
  return out;
}

void require_cone(const CurvatureVector& kappa, int k, const char* what) {
  const auto m = cone_membership(kappa, k);
  if (!m.inside) {
    fail(ErrorKind::precondition, std::string(what) + ": kappa is not in Gamma_" +
                                      std::to_string(k) +
                                      " (min slack " + std::to_string(m.min_slack) + ")");
  }
}

}  // namespace

CurvatureVector::CurvatureVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.size() < 2)
    fail(ErrorKind::invalid_argument, "curvature vector needs n >= 2 entries");
  for (double v : values_)
    if (!std::isfinite(v)) fail(ErrorKind::invalid_argument, "curvature entry is not finite");
  std::stable_sort(values_.begin(), values_.end(), std::greater<>());
}

std::vector<double> elementary_symmetric_all(std::span<const double> values, int max_k) {
  const int m = std::max(0, max_k);
  std::vector<double> e(static_cast<std::size_t>(m) + 1, 0.0);
  e[0] = 1.0;
  int filled = 0;
  for (double x : values) {
    filled = std::min(filled + 1, m);
    for (int j = filled; j >= 1; --j) e[j] += x * e[j - 1];
  }
  return e;
}

double elementary_symmetric(std::span<const double> values, int k) {
  if (k < 0) fail(ErrorKind::invalid_argument, "negative order k");
  if (k > static_cast<int>(values.size())) return 0.0;
  return elementary_symmetric_all(values, k)[static_cast<std::size_t>(k)];
}

double elementary_symmetric(const CurvatureVector& kappa, int k) {
  check_order(kappa.size(), k, 0);
  return elementary_symmetric(kappa.values(), k);
}

std::vector<double> eigenvalue_symmetric_functions(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n) fail(ErrorKind::invalid_argument, "matrix is not square");
  // det(tI - A) = sum_j c_j t^j with c_n = 1; sigma_j = (-1)^j c_{n-j}.
  std::vector<double> c(static_cast<std::size_t>(n) + 1, 0.0);
  c[n] = 1.0;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index k = 1; k <= n; ++k) {
    m = a * m + c[n - k + 1] * id;
    c[n - k] = -(a * m).trace() / static_cast<double>(k);
  }
  std::vector<double> sigma(static_cast<std::size_t>(n) + 1);
  for (Eigen::Index j = 0; j <= n; ++j) sigma[j] = (j % 2 == 0 ? 1.0 : -1.0) * c[n - j];
  return sigma;
}

SymmetricJet symmetric_jet(const CurvatureVector& kappa, int k) {
  const std::size_t n = kappa.size();
  check_order(n, k, 1);
  SymmetricJet jet;
  jet.k = k;
  jet.value = elementary_symmetric(kappa.values(), k);
  jet.gradient.resize(static_cast<Eigen::Index>(n));
  jet.hessian = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    jet.gradient[i] = elementary_symmetric(without(kappa.values(), i), k - 1);
  if (k >= 2) {
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double v = elementary_symmetric(without(kappa.values(), p, q), k - 2);
        jet.hessian(p, q) = v;
        jet.hessian(q, p) = v;
      }
    }
  }
  return jet;
}

ConeMembership cone_membership(std::span<const double> values, int k) {
  check_order(values.size(), k, 1);
  ConeMembership m;
  m.k = k;
  const auto e = elementary_symmetric_all(values, k);
  m.sigma_values.assign(e.begin() + 1, e.end());
  m.min_slack = *std::min_element(m.sigma_values.begin(), m.sigma_values.end());
  m.inside = m.min_slack > 0.0;
  return m;
}

ConeMembership cone_membership(const CurvatureVector& kappa, int k) {
  return cone_membership(kappa.values(), k);
}

double lemma_quadratic_slack(const CurvatureVector& kappa, int k) {
  require_cone(kappa, k, "lemma_quadratic_slack");
  const auto jet = symmetric_jet(kappa, k);
  const double n = static_cast<double>(kappa.size());
  double lhs = 0.0;
  for (std::size_t i = 0; i < kappa.size(); ++i) lhs += jet.gradient[i] * kappa[i] * kappa[i];
  return lhs - (k / n) * elementary_symmetric(kappa.values(), 1) * jet.value;
}

double lemma_negative_part_slack(const CurvatureVector& kappa, int k) {
  require_cone(kappa, k, "lemma_negative_part_slack");
  const double ratio = static_cast<double>(static_cast<int>(kappa.size()) - k) / k;
  double slack = std::numeric_limits<double>::infinity();
  for (double v : kappa.values())
    if (v <= 0.0) slack = std::min(slack, ratio * kappa.largest() + v);
  return slack;
}

double psd_tolerance(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return 1e-9 * (1.0 + es.eigenvalues().cwiseAbs().maxCoeff());
}

double RWQuery::evaluate(const Eigen::VectorXd& xi) const { return xi.dot(form_matrix * xi); }

double RWQuery::scale() const { return tolerance / 1e-9; }

RWQuery ren_wang_form(const CurvatureVector& kappa, double eps_rw, double K) {
  const int n = static_cast<int>(kappa.size());
  if (!(eps_rw > 0.0)) fail(ErrorKind::invalid_argument, "eps_rw must be positive");
  if (!(K >= 0.0)) fail(ErrorKind::invalid_argument, "K must be nonnegative");
  require_cone(kappa, n - 1, "ren_wang_form");

  const auto jet = symmetric_jet(kappa, n - 1);
  const Eigen::VectorXd& g = jet.gradient;
  Eigen::MatrixXd m = kappa.largest() * (K * g * g.transpose() - jet.hessian);
  m(0, 0) -= g[0];
  for (int i = 1; i < n; ++i) m(i, i) += (1.0 + eps_rw) * g[i];

  RWQuery q{kappa, eps_rw, K, m, 0.0, 0.0, false};
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  q.min_eigenvalue = es.eigenvalues().minCoeff();
  q.tolerance = 1e-9 * (1.0 + es.eigenvalues().cwiseAbs().maxCoeff());
  q.certified = q.min_eigenvalue >= -q.tolerance;
  return q;
}

double ren_wang_min_K(const CurvatureVector& kappa, double eps_rw) {
  auto certified = [&](double K) { return ren_wang_form(kappa, eps_rw, K).certified; };
  if (certified(0.0)) return 0.0;
  double lo = 0.0;
  double hi = 1.0;
  while (!certified(hi)) {
    lo = hi;
    if (hi >= kRenWangKCap) return std::numeric_limits<double>::infinity();
    hi = std::min(2.0 * hi, kRenWangKCap);
  }
  // Certification is monotone in K; keep hi certified, lo not.
  while (hi - lo > 1e-10 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (certified(mid) ? hi : lo) = mid;
  }
  return hi;
}

EigenvalueJet eigenvalue_jet(const Eigen::MatrixXd& a, const Eigen::MatrixXd& a_dot,
                             const Eigen::MatrixXd& a_ddot) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || a_dot.rows() != n || a_dot.cols() != n || a_ddot.rows() != n ||
      a_ddot.cols() != n) {
    fail(ErrorKind::invalid_argument, "eigenvalue_jet: matrix shapes differ");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  const Eigen::VectorXd& lam = es.eigenvalues();  // ascending
  const double top = lam[n - 1];
  if (n >= 2) {
    const double gap = top - lam[n - 2];
    if (gap <= 1e-8 * (1.0 + std::abs(top)))
      fail(ErrorKind::degenerate_spectrum, "top eigenvalue is not simple");
  }
  const Eigen::MatrixXd& q = es.eigenvectors();
  const Eigen::VectorXd v = q.col(n - 1);
  const Eigen::VectorXd dv = q.transpose() * (a_dot * v);  // row 1 of Q^T Adot Q

  EigenvalueJet jet;
  jet.value = top;
  jet.first = dv[n - 1];
  jet.second = v.dot(a_ddot * v);
  for (Eigen::Index p = 0; p + 1 < n; ++p) jet.second += 2.0 * dv[p] * dv[p] / (top - lam[p]);
  return jet;
}

std::vector<CurvatureVector> sample_cone_range(int n, int k, std::size_t first, std::size_t count,
                                               std::uint64_t seed, std::optional<double> level,
                                               SampleOptions options) {
  if (n < 2) fail(ErrorKind::invalid_argument, "sample_cone: n must be >= 2");
  check_order(static_cast<std::size_t>(n), k, 1);
  if (level && !(*level > 0.0)) fail(ErrorKind::invalid_argument, "sample_cone: level must be > 0");
  double shift = options.diagonal_shift;
  if (shift < 0.0) shift = k == 1 ? 0.0 : 1.5 * std::sqrt(static_cast<double>(k)) ;

  std::vector<CurvatureVector> out;
  out.reserve(count);
  const std::size_t last = first + count;
  std::vector<double> z(static_cast<std::size_t>(n));
  for (std::size_t block = first / kSampleBlock; block * kSampleBlock < last; ++block) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(n),
                      static_cast<std::uint32_t>(k)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, shift);
    for (std::size_t idx = block * kSampleBlock; idx < (block + 1) * kSampleBlock && idx < last;) {
      const double s = shift > 0.0 ? uniform(rng) : 0.0;
      for (auto& v : z) v = normal(rng) + s;
      const auto e = elementary_symmetric_all(z, k);
      if (*std::min_element(e.begin() + 1, e.end()) <= 0.0) continue;
      if (idx >= first) {
        if (level) {
          const double t = std::pow(*level / e[static_cast<std::size_t>(k)], 1.0 / k);
          std::vector<double> scaled(z);
          for (auto& v : scaled) v *= t;
          out.emplace_back(std::move(scaled));
        } else {
          out.emplace_back(z);
        }
      }
      ++idx;
    }
  }
  return out;
}

std::vector<CurvatureVector> sample_cone(int n, int k, std::size_t count, std::uint64_t seed,
                                         std::optional<double> level, SampleOptions options) {
  if (count < 1) fail(ErrorKind::invalid_argument, "sample_cone: count must be >= 1");
  return sample_cone_range(n, k, 0, count, seed, level, options);
}

}  // namespace plateau::cone
