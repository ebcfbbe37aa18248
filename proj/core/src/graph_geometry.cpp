#include "plateau/graph_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "plateau/error.hpp"

namespace plateau::geometry {

namespace {

Mat inverse_sqrt_graph_metric(const Vec& p) {
  const double w = std::sqrt(1.0 + p.squaredNorm());
  const auto n = p.size();
  return Mat::Identity(n, n) - p * p.transpose() / (w * (1.0 + w));
}

void check_jet_shape(const Vec& grad_u, const Mat& hess_u) {
  const auto n = grad_u.size();
  if (n < 1 || hess_u.rows() != n || hess_u.cols() != n)
    fail(ErrorKind::invalid_argument, "height jet shapes do not match");
}

// Flattened rank-3/4 tensors over n indices.
struct Tensor3 {
  int n;
  std::vector<double> v;
  explicit Tensor3(int n_) : n(n_), v(static_cast<std::size_t>(n_ * n_ * n_), 0.0) {}
  double& operator()(int a, int b, int c) { return v[(a * n + b) * n + c]; }
  double operator()(int a, int b, int c) const { return v[(a * n + b) * n + c]; }
};

struct Tensor4 {
  int n;
  std::vector<double> v;
  explicit Tensor4(int n_) : n(n_), v(static_cast<std::size_t>(n_ * n_ * n_ * n_), 0.0) {}
  double& operator()(int a, int b, int c, int d) { return v[((a * n + b) * n + c) * n + d]; }
  double operator()(int a, int b, int c, int d) const { return v[((a * n + b) * n + c) * n + d]; }
};

// Gamma(e, e) as a coordinate vector.
Vec contract_christoffel(const std::vector<Mat>& gamma, const Vec& e) {
  Vec out(e.size());
  for (Eigen::Index c = 0; c < e.size(); ++c) out[c] = e.dot(gamma[c] * e);
  return out;
}

FrameStatus classify(const PrincipalFrame& frame) {
  const double tol = 1e-8 * (1.0 + std::abs(frame.kappa[0]));
  if (frame.min_gap >= tol) return FrameStatus::principal;
  if (frame.kappa.maxCoeff() - frame.kappa.minCoeff() <= tol) return FrameStatus::umbilic;
  return FrameStatus::ambiguous;
}

bool frame_usable(FrameStatus status, FramePolicy policy) {
  return status != FrameStatus::ambiguous || policy == FramePolicy::accept_degenerate;
}

// Covariant derivative of the second fundamental form, T(a,b,c) = nabla_c h_ab,
// with the partial derivatives taken by central differences of step delta.
Tensor3 covariant_dh(const HeightField& surface, const Vec& p, double delta) {
  const int n = static_cast<int>(p.size());
  const HeightJet jet = surface(p);
  const Mat h = second_fundamental_form(jet);
  const auto gamma = christoffel(jet);
  std::vector<Mat> dh(n);
  for (int c = 0; c < n; ++c) {
    Vec step = Vec::Zero(n);
    step[c] = delta;
    dh[c] = (second_fundamental_form(surface(p + step)) -
             second_fundamental_form(surface(p - step))) /
            (2.0 * delta);
  }
  Tensor3 t(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) {
        double v = dh[c](a, b);
        for (int d = 0; d < n; ++d) v -= gamma[d](c, a) * h(d, b) + gamma[d](c, b) * h(a, d);
        t(a, b, c) = v;
      }
  return t;
}

Tensor3 to_frame(const Tensor3& t, const Mat& e) {
  const int n = t.n;
  Tensor3 out(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c) s += t(a, b, c) * e(a, i) * e(b, j) * e(c, k);
        out(i, j, k) = s;
      }
  return out;
}

Tensor4 to_frame(const Tensor4& t, const Mat& e) {
  const int n = t.n;
  // Contract one index at a time.
  Tensor4 cur = t;
  for (int slot = 0; slot < 4; ++slot) {
    Tensor4 next(n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c)
          for (int d = 0; d < n; ++d) {
            int idx[4] = {a, b, c, d};
            double s = 0.0;
            for (int m = 0; m < n; ++m) {
              int src[4] = {a, b, c, d};
              src[slot] = m;
              s += cur(src[0], src[1], src[2], src[3]) * e(m, idx[slot]);
            }
            next(a, b, c, d) = s;
          }
    cur = std::move(next);
  }
  return cur;
}

}  // namespace

std::string_view to_string(Identity id) noexcept {
  switch (id) {
    case Identity::nu_first: return "nu_first";
    case Identity::nu_gradient: return "nu_gradient";
    case Identity::nu_second: return "nu_second";
    case Identity::gauss: return "gauss";
    case Identity::codazzi: return "codazzi";
    case Identity::commutator: return "commutator";
  }
  return "unknown";
}

Mat hyperbolic_shape_matrix(double u, const Vec& grad_u, const Mat& hess_u) {
  check_jet_shape(grad_u, hess_u);
  const double w = std::sqrt(1.0 + grad_u.squaredNorm());
  const Mat s = inverse_sqrt_graph_metric(grad_u);
  Mat a = (u / w) * s * hess_u * s;
  a = 0.5 * (a + a.transpose());
  a.diagonal().array() += 1.0 / w;
  return a;
}

GraphJet graph_jet(const Vec& x, double u, const Vec& grad_u, const Mat& hess_u) {
  check_jet_shape(grad_u, hess_u);
  if (!(u > 0.0)) fail(ErrorKind::invalid_height, "graph height must be positive");
  const auto n = grad_u.size();
  if (n < 2) fail(ErrorKind::invalid_argument, "graph dimension must be >= 2");

  GraphJet g;
  g.x = x;
  g.u = u;
  g.grad_u = grad_u;
  g.hess_u = hess_u;
  g.w = std::sqrt(1.0 + grad_u.squaredNorm());
  g.nu_vertical = 1.0 / g.w;

  const Mat s = inverse_sqrt_graph_metric(grad_u);
  Mat ke = s * (hess_u / g.w) * s;
  ke = 0.5 * (ke + ke.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(ke, Eigen::EigenvaluesOnly);
  g.euclidean_spectrum = es.eigenvalues().reverse();
  std::vector<double> kappa(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) kappa[i] = u * g.euclidean_spectrum[i] + g.nu_vertical;
  g.hyperbolic_spectrum = cone::CurvatureVector(std::move(kappa));
  return g;
}

GraphJet graph_jet(const Vec& x, const HeightJet& jet) {
  return graph_jet(x, jet.u, jet.grad, jet.hess);
}

Mat induced_metric(const HeightJet& jet) {
  const auto n = jet.grad.size();
  return (Mat::Identity(n, n) + jet.grad * jet.grad.transpose()) / (jet.u * jet.u);
}

Mat second_fundamental_form(const HeightJet& jet) {
  const double w = std::sqrt(1.0 + jet.grad.squaredNorm());
  return jet.hess / (jet.u * w) + induced_metric(jet) / w;
}

std::vector<Mat> christoffel(const HeightJet& jet) {
  const auto n = jet.grad.size();
  const Vec& p = jet.grad;
  const double u = jet.u;
  const double w2 = 1.0 + p.squaredNorm();
  const Mat gmetric = Mat::Identity(n, n) + p * p.transpose();
  std::vector<Mat> gamma(static_cast<std::size_t>(n));
  for (Eigen::Index c = 0; c < n; ++c) {
    Mat m = p[c] * jet.hess / w2 + gmetric * (p[c] / (u * w2));
    m.row(c) -= p.transpose() / u;
    m.col(c) -= p / u;
    gamma[c] = m;
  }
  return gamma;
}

PrincipalFrame principal_frame(const HeightJet& jet) {
  const auto n = jet.grad.size();
  const Mat a = hyperbolic_shape_matrix(jet.u, jet.grad, jet.hess);
  Eigen::SelfAdjointEigenSolver<Mat> es(a);
  const Mat s = inverse_sqrt_graph_metric(jet.grad);
  PrincipalFrame f;
  f.kappa = es.eigenvalues().reverse();
  f.vectors = jet.u * s * es.eigenvectors().rowwise().reverse();
  f.min_gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i + 1 < n; ++i) f.min_gap = std::min(f.min_gap, f.kappa[i] - f.kappa[i + 1]);
  return f;
}

double CapSolution::height(double r) const { return std::sqrt(a * a - r * r) + d; }

double CapSolution::slope(double r) const { return -r / std::sqrt(a * a - r * r); }

double CapSolution::curvature(double r) const {
  const double q = a * a - r * r;
  return -a * a / (q * std::sqrt(q));
}

HeightJet CapSolution::jet(const Vec& x) const {
  const double q = a * a - x.squaredNorm();
  if (!(q > 0.0)) fail(ErrorKind::invalid_argument, "point outside the cap sphere");
  const double root = std::sqrt(q);
  HeightJet j;
  j.u = root + d;
  j.grad = -x / root;
  j.hess = -Mat::Identity(x.size(), x.size()) / root - x * x.transpose() / (q * root);
  return j;
}

HeightField CapSolution::field() const {
  return [cap = *this](const Vec& x) { return cap.jet(x); };
}

CapSolution exact_cap(int n, double sigma, double R, double eps_bdry) {
  if (n < 2) fail(ErrorKind::invalid_argument, "cap dimension must be >= 2");
  if (!(sigma > 0.0 && sigma < n))
    fail(ErrorKind::invalid_argument, "sigma must lie in (0, n)");
  if (!(R > 0.0)) fail(ErrorKind::invalid_argument, "cap radius must be positive");
  if (!(eps_bdry >= 0.0)) fail(ErrorKind::invalid_argument, "boundary height must be >= 0");
  CapSolution c;
  c.n = n;
  c.sigma = sigma;
  c.R = R;
  c.eps_bdry = eps_bdry;
  c.lambda = std::pow(sigma / n, 1.0 / (n - 1));
  // (1 - lambda^2) a^2 - 2 lambda eps a - (R^2 + eps^2) = 0, positive root.
  const double qa = 1.0 - c.lambda * c.lambda;
  const double qb = -2.0 * c.lambda * eps_bdry;
  const double qc = -(R * R + eps_bdry * eps_bdry);
  const double disc = std::sqrt(qb * qb - 4.0 * qa * qc);
  c.a = (-qb + disc) / (2.0 * qa);  // qb <= 0, so no cancellation
  c.d = eps_bdry - std::sqrt(c.a * c.a - R * R);
  return c;
}

double IdentityReport::max_abs(Identity id) const {
  double m = 0.0;
  for (const auto& s : samples)
    if (s.identity == id) m = std::max(m, std::abs(s.residual));
  return m;
}

bool IdentityReport::has(Identity id) const {
  return std::any_of(samples.begin(), samples.end(),
                     [id](const ResidualSample& s) { return s.identity == id; });
}

IdentityReport nu_identity_residuals(const HeightField& surface, const Vec& x, double fd_step,
                                     FramePolicy policy) {
  if (!(fd_step > 0.0)) fail(ErrorKind::invalid_argument, "fd_step must be positive");
  const HeightJet jet0 = surface(x);
  const GraphJet g0 = graph_jet(x, jet0);
  const PrincipalFrame frame = principal_frame(jet0);
  const auto gamma = christoffel(jet0);
  const int n = static_cast<int>(x.size());
  const double h = fd_step;
  const double nu0 = g0.nu_vertical;
  const double u0 = g0.u;

  auto nu_at = [&](const Vec& p) { return 1.0 / std::sqrt(1.0 + surface(p).grad.squaredNorm()); };
  auto u_at = [&](const Vec& p) { return surface(p).u; };

  IdentityReport report;
  report.frame = classify(frame);

  std::vector<double> ui(n), nui(n);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const Vec e = frame.vectors.col(i);
    ui[i] = (u_at(x + h * e) - u_at(x - h * e)) / (2.0 * h);
    nui[i] = (nu_at(x + h * e) - nu_at(x - h * e)) / (2.0 * h);
    sum += ui[i] * ui[i] / (u0 * u0);
  }
  report.samples.push_back({x, Identity::nu_first, -1, sum - (1.0 - nu0 * nu0), h});

  if (!frame_usable(report.frame, policy)) return report;

  for (int i = 0; i < n; ++i) {
    const double k = frame.kappa[i];
    report.samples.push_back(
        {x, Identity::nu_gradient, i, nui[i] - (ui[i] / u0) * (nu0 - k), h});
  }
  // nabla h enters the per-direction second-derivative identity through
  // -sum_m (u_m/u) h_iim; it drops out after contraction with sigma_{n-1}^{ii}
  // on solutions because sum_i sigma_{n-1}^{ii} h_iim = (sigma_{n-1})_m.
  const Tensor3 dh_frame = to_frame(covariant_dh(surface, x, h * u0), frame.vectors);
  for (int i = 0; i < n; ++i) {
    const Vec e = frame.vectors.col(i);
    const Vec bend = 0.5 * h * h * contract_christoffel(gamma, e);
    const double nuii = (nu_at(x + h * e - bend) - 2.0 * nu0 + nu_at(x - h * e - bend)) / (h * h);
    const double k = frame.kappa[i];
    double third = 0.0;
    for (int m = 0; m < n; ++m) third += (ui[m] / u0) * dh_frame(i, i, m);
    const double rhs =
        2.0 * (ui[i] / u0) * nui[i] + (1.0 + nu0 * nu0) * k - nu0 * (1.0 + k * k) - third;
    report.samples.push_back({x, Identity::nu_second, i, nuii - rhs, h});
  }
  return report;
}

namespace {

// Riemann tensor R_abcd = g_ae R^e_bcd, R(X,Y)Z = R^a_bcd Z^b X^c Y^d.
Tensor4 riemann_lowered(const HeightField& surface, const Vec& x, double delta) {
  const int n = static_cast<int>(x.size());
  const HeightJet jet = surface(x);
  const auto gamma = christoffel(jet);
  const Mat g = induced_metric(jet);
  // dgamma[d][c](a, b) = d/dx_d Gamma^c_ab
  std::vector<std::vector<Mat>> dgamma(n);
  for (int d = 0; d < n; ++d) {
    Vec step = Vec::Zero(n);
    step[d] = delta;
    const auto gp = christoffel(surface(x + step));
    const auto gm = christoffel(surface(x - step));
    dgamma[d].resize(n);
    for (int c = 0; c < n; ++c) dgamma[d][c] = (gp[c] - gm[c]) / (2.0 * delta);
  }
  Tensor4 up(n);  // R^a_bcd
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          double v = dgamma[c][a](d, b) - dgamma[d][a](c, b);
          for (int e = 0; e < n; ++e) v += gamma[a](c, e) * gamma[e](d, b) - gamma[a](d, e) * gamma[e](c, b);
          up(a, b, c, d) = v;
        }
  Tensor4 low(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          double v = 0.0;
          for (int e = 0; e < n; ++e) v += g(a, e) * up(e, b, c, d);
          low(a, b, c, d) = v;
        }
  return low;
}

double sectional(const Tensor4& r, const Vec& X, const Vec& Y) {
  const int n = r.n;
  double s = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) s += r(a, b, c, d) * X[a] * Y[b] * X[c] * Y[d];
  return s;
}

}  // namespace

std::vector<double> sectional_curvatures(const HeightField& surface, const Vec& x,
                                         double fd_step) {
  const HeightJet jet = surface(x);
  const PrincipalFrame frame = principal_frame(jet);
  const Tensor4 r = riemann_lowered(surface, x, fd_step * jet.u);
  const int n = static_cast<int>(x.size());
  std::vector<double> out;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) out.push_back(sectional(r, frame.vectors.col(i), frame.vectors.col(j)));
  return out;
}

double commutator_rhs(const std::vector<double>& hessian_h, const Mat& h, int k, int l, int i,
                      int j) {
  const int n = static_cast<int>(h.rows());
  auto W = [&](int a, int b, int c, int d) { return hessian_h[((a * n + b) * n + c) * n + d]; };
  auto delta = [](int a, int b) { return a == b ? 1.0 : 0.0; };
  // Ricci identity with R_ijkl = -(d_ik d_jl - d_il d_jk) + h_ik h_jl - h_il h_jk.
  double v = W(i, j, k, l) + h(j, i) * delta(l, k) - h(l, i) * delta(j, k) +
             h(k, j) * delta(l, i) - h(k, l) * delta(j, i);
  for (int m = 0; m < n; ++m) {
    v += -h(m, i) * h(j, m) * h(l, k) + h(m, i) * h(j, k) * h(l, m) -
         h(k, m) * h(j, m) * h(l, i) + h(k, m) * h(j, i) * h(l, m);
  }
  return v;
}

IdentityReport gauss_commutator_residuals(const HeightField& surface, const Vec& x,
                                          double fd_step, FramePolicy policy) {
  if (!(fd_step > 0.0)) fail(ErrorKind::invalid_argument, "fd_step must be positive");
  const int n = static_cast<int>(x.size());
  const HeightJet jet = surface(x);
  const PrincipalFrame frame = principal_frame(jet);
  IdentityReport report;
  report.frame = classify(frame);
  if (!frame_usable(report.frame, policy)) return report;

  const double delta = fd_step * jet.u;
  const Mat& e = frame.vectors;
  const Mat h_frame = e.transpose() * second_fundamental_form(jet) * e;

  const Tensor4 r = riemann_lowered(surface, x, delta);
  int pair = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j, ++pair) {
      const double k_ij = sectional(r, e.col(i), e.col(j));
      const double gauss = -1.0 + h_frame(i, i) * h_frame(j, j) - h_frame(i, j) * h_frame(i, j);
      report.samples.push_back({x, Identity::gauss, pair, k_ij - gauss, fd_step});
    }

  const Tensor3 t = covariant_dh(surface, x, delta);
  const Tensor3 tf = to_frame(t, e);
  double codazzi = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const double v = tf(i, j, k) - tf(i, k, j);
        if (std::abs(v) > std::abs(codazzi)) codazzi = v;
      }
  report.samples.push_back({x, Identity::codazzi, -1, codazzi, fd_step});

  // W(a,b,c,d) = nabla_d nabla_c h_ab
  const auto gamma = christoffel(jet);
  std::vector<Tensor3> dt;
  dt.reserve(n);
  for (int d = 0; d < n; ++d) {
    Vec step = Vec::Zero(n);
    step[d] = delta;
    Tensor3 tp = covariant_dh(surface, x + step, delta);
    const Tensor3 tm = covariant_dh(surface, x - step, delta);
    for (std::size_t q = 0; q < tp.v.size(); ++q) tp.v[q] = (tp.v[q] - tm.v[q]) / (2.0 * delta);
    dt.push_back(std::move(tp));
  }
  Tensor4 wc(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          double v = dt[d](a, b, c);
          for (int m = 0; m < n; ++m)
            v -= gamma[m](d, a) * t(m, b, c) + gamma[m](d, b) * t(a, m, c) + gamma[m](d, c) * t(a, b, m);
          wc(a, b, c, d) = v;
        }
  const Tensor4 wf = to_frame(wc, e);
  double comm = 0.0;
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double v = wf(k, l, i, j) - commutator_rhs(wf.v, h_frame, k, l, i, j);
          if (std::abs(v) > std::abs(comm)) comm = v;
        }
  report.samples.push_back({x, Identity::commutator, -1, comm, fd_step});
  return report;
}

}  // namespace plateau::geometry
