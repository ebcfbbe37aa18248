#include "plateau/discrete_problem.hpp"

#include <algorithm>
#include <array>
#include <cfloat>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include <Eigen/SparseLU>

#include "plateau/error.hpp"
#include "plateau/parallel.hpp"

namespace plateau::solver {

Stretch radial_stretch(double clustering, double s) {
  const double a = clustering;
  const double q = 0.5 * std::numbers::pi;
  return {(1.0 - a) * s + a * std::sin(q * s), (1.0 - a) + a * q * std::cos(q * s),
          -a * q * q * std::sin(q * s)};
}

namespace {

// Degree-9 smoothstep from 0 at tau <= 0.25 to 1 at tau >= 0.75, with two
// derivatives in tau.
struct Blend {
  double b = 0.0;
  double db = 0.0;
  double ddb = 0.0;
};

Blend blend(double tau) {
  const double t = (tau - 0.25) / 0.5;
  if (t <= 0.0) return {};
  if (t >= 1.0) return {1.0, 0.0, 0.0};
  const double t2 = t * t;
  const double t4 = t2 * t2;
  const double om = 1.0 - t;
  const double om3 = om * om * om;
  Blend r;
  r.b = t4 * t * (126.0 - 420.0 * t + 540.0 * t2 - 315.0 * t2 * t + 70.0 * t4);
  r.db = 630.0 * t4 * om3 * om / 0.5;
  r.ddb = 2520.0 * t2 * t * om3 * (1.0 - 2.0 * t) / 0.25;
  return r;
}

double binomial(int n, int k) {
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

void check_clustering(double c) {
  if (!(c >= 0.0 && c < 1.0))
    fail(ErrorKind::invalid_argument, "mesh clustering must lie in [0, 1)");
}

// ---------------------------------------------------------------------------

class RadialProblem final : public DiscreteProblem {
 public:
  RadialProblem(int n, double sigma, double radius, double eps, int nodes, double clustering)
      : n_(n), sigma_(sigma), radius_(radius), eps_(eps), m_(nodes - 1) {
    if (n < 2) fail(ErrorKind::invalid_argument, "dimension must be >= 2");
    if (nodes < 5) fail(ErrorKind::invalid_argument, "radial mesh needs at least 5 nodes");
    if (!(radius > 0.0)) fail(ErrorKind::invalid_argument, "radius must be positive");
    if (!(eps > 0.0)) fail(ErrorKind::invalid_argument, "boundary height must be positive");
    check_clustering(clustering);
    ds_ = 1.0 / m_;
    stretch_.reserve(m_ + 1);
    for (int j = 0; j <= m_; ++j) stretch_.push_back(radial_stretch(clustering, j * ds_));
    stencil_.resize(m_);
    for (int j = 0; j < m_; ++j) {
      if (j > 0) stencil_[j].push_back(j - 1);
      stencil_[j].push_back(j);
      if (j + 1 < m_) stencil_[j].push_back(j + 1);
    }
    binom_.resize(n_);
    for (int k = 0; k < n_; ++k) binom_[k] = binomial(n_ - 1, k);
  }

  int dimension() const override { return n_; }
  int unknowns() const override { return m_; }
  int nodes() const override { return m_ + 1; }
  double sigma() const override { return sigma_; }
  double eps() const override { return eps_; }

  double residual_at(const Vec& u, int row, bool* guard) const override {
    const Local l = local(u, row);
    // sigma_{n-1}(a, b, ..., b) = b^{n-1} + (n-1) a b^{n-2}
    const double a = l.kappa_rad;
    const double b = l.kappa_ang;
    const double r = std::pow(b, n_ - 1) + (n_ - 1) * a * std::pow(b, n_ - 2) - sigma_;
    if (guard) {
      bool ok = u[row] > 0.0;
      double bp = 1.0;  // b^{j-1}
      for (int j = 1; j < n_ && ok; ++j) {
        ok = binom_[j] * bp * b + binom_[j - 1] * a * bp > 0.0;
        bp *= b;
      }
      *guard = ok && std::isfinite(r);
    }
    return r;
  }

  std::span<const int> stencil(int row) const override { return stencil_[row]; }

  NodeData node(const Vec& u, int index) const override {
    const Local l = local(u, index);
    NodeData d;
    d.x = point(index);
    d.u = value(u, index);
    d.boundary = index == m_;
    d.ring = index;
    d.grad_u = Vec::Zero(n_);
    d.grad_u[0] = l.du;
    d.hess_u = Mat::Zero(n_, n_);
    d.hess_u(0, 0) = l.d2u;
    const double r = radius_ * stretch_[index].t;
    for (int i = 1; i < n_; ++i) d.hess_u(i, i) = index == 0 ? l.d2u : l.du / r;
    d.nu_vertical = 1.0 / std::sqrt(1.0 + l.du * l.du);
    d.kappa = Vec::Constant(n_, l.kappa_ang);
    d.kappa[0] = l.kappa_rad;
    std::sort(d.kappa.data(), d.kappa.data() + n_, std::greater<>());
    d.residual = index < m_ ? residual_at(u, index, nullptr) : 0.0;
    return d;
  }

  Vec point(int index) const override {
    Vec x = Vec::Zero(n_);
    x[0] = radius_ * stretch_[index].t;
    return x;
  }
  double ray_fraction(int index) const override { return stretch_[index].t; }
  int ring(int index) const override { return index; }
  int boundary_ring() const override { return m_; }

 private:
  struct Local {
    double du = 0.0;
    double d2u = 0.0;
    double kappa_rad = 1.0;
    double kappa_ang = 1.0;
  };

  double value(const Vec& u, int j) const { return j < m_ ? u[j] : eps_; }

  Local local(const Vec& u, int j) const {
    double us = 0.0;
    double uss = 0.0;
    const double uj = value(u, j);
    if (j == m_) {
      const double u1 = u[m_ - 1], u2 = u[m_ - 2], u3 = u[m_ - 3];
      us = (3.0 * uj - 4.0 * u1 + u2) / (2.0 * ds_);
      uss = (2.0 * uj - 5.0 * u1 + 4.0 * u2 - u3) / (ds_ * ds_);
    } else {
      const double up = value(u, j + 1);
      const double um = j == 0 ? up : u[j - 1];
      us = (up - um) / (2.0 * ds_);
      uss = (up - 2.0 * uj + um) / (ds_ * ds_);
    }
    const Stretch& st = stretch_[j];
    const double rs = radius_ * st.dt;
    const double rss = radius_ * st.ddt;
    Local l;
    l.du = j == 0 ? 0.0 : us / rs;
    l.d2u = (uss - l.du * rss) / (rs * rs);
    const double w = std::sqrt(1.0 + l.du * l.du);
    l.kappa_rad = uj * l.d2u / (w * w * w) + 1.0 / w;
    l.kappa_ang = j == 0 ? l.kappa_rad : uj * l.du / (radius_ * st.t * w) + 1.0 / w;
    return l;
  }

  int n_;
  double sigma_;
  double radius_;
  double eps_;
  int m_;
  double ds_ = 0.0;
  std::vector<Stretch> stretch_;
  std::vector<std::vector<int>> stencil_;
  std::vector<double> binom_;
};

// ---------------------------------------------------------------------------

template <int N>
class GridProblem final : public DiscreteProblem {
  using VN = Eigen::Matrix<double, N, 1>;
  using MN = Eigen::Matrix<double, N, N>;
  static constexpr int kPairs = N * (N - 1) / 2;
  static constexpr int kStencil = 1 + 2 * N + 4 * kPairs;

  struct Metric {
    VN x = VN::Zero();
    MN jinv_t = MN::Identity();    // J^{-T}
    std::array<MN, N> f2{};        // f2[c](a, b) = d^2 F_c / d xi_a d xi_b
    double tau = 0.0;
  };

 public:
  GridProblem(const DomainSpec& domain, double sigma, double eps, const MeshSpec& mesh)
      : sigma_(sigma), eps_(eps) {
    if (domain.n() != N) fail(ErrorKind::invalid_argument, "domain dimension mismatch");
    if (!(eps > 0.0)) fail(ErrorKind::invalid_argument, "boundary height must be positive");
    check_clustering(mesh.clustering);
    ns_ = mesh.ns;
    if (ns_ < 4) fail(ErrorKind::invalid_argument, "mapped grid needs ns >= 4");
    if constexpr (N == 2) {
      ntheta_ = mesh.ntheta > 0 ? mesh.ntheta : std::max(16, 2 * ns_);
      nphi_ = 1;
      if (ntheta_ % 2 != 0 || ntheta_ < 8)
        fail(ErrorKind::invalid_argument, "angular node count must be even and >= 8");
    } else {
      ntheta_ = mesh.ntheta > 0 ? mesh.ntheta : std::max(6, ns_ / 2);
      nphi_ = mesh.nphi > 0 ? mesh.nphi : 2 * ntheta_;
      if (ntheta_ < 4) fail(ErrorKind::invalid_argument, "polar node count must be >= 4");
      if (nphi_ % 2 != 0 || nphi_ < 8)
        fail(ErrorKind::invalid_argument, "azimuthal node count must be even and >= 8");
    }
    ring_size_ = ntheta_ * nphi_;
    unknowns_ = ns_ * ring_size_;
    nodes_ = unknowns_ + ring_size_;
    ds_ = 1.0 / (ns_ + 0.5);
    h_[0] = ds_;
    if constexpr (N == 2) {
      h_[1] = 2.0 * std::numbers::pi / ntheta_;
    } else {
      h_[1] = std::numbers::pi / ntheta_;
      h_[2] = 2.0 * std::numbers::pi / nphi_;
    }
    build_geometry(domain, mesh.clustering);
    build_stencils();
  }

  int dimension() const override { return N; }
  int unknowns() const override { return unknowns_; }
  int nodes() const override { return nodes_; }
  double sigma() const override { return sigma_; }
  double eps() const override { return eps_; }

  double residual_at(const Vec& u, int row, bool* guard) const override {
    VN du;
    MN d2u;
    interior_derivatives(u, row, du, d2u);
    const double u0 = u[row];
    const MN a = shape(u0, du, d2u);
    const double tr = a.trace();
    double r = 0.0;
    bool ok = u0 > 0.0 && tr > 0.0;
    if constexpr (N == 2) {
      r = tr - sigma_;
    } else {
      const double s2 = 0.5 * (tr * tr - (a * a).trace());
      r = s2 - sigma_;
      ok = ok && s2 > 0.0;
    }
    if (guard) *guard = ok && std::isfinite(r);
    return r;
  }

  std::span<const int> stencil(int row) const override {
    return {deps_.data() + dep_offset_[row], deps_.data() + dep_offset_[row + 1]};
  }

  NodeData node(const Vec& u, int index) const override {
    VN du;
    MN d2u;
    const int i = index / ring_size_;
    if (index < unknowns_)
      interior_derivatives(u, index, du, d2u);
    else
      boundary_derivatives(u, index, du, d2u);
    NodeData d;
    const Metric& m = metric_[index];
    d.x = m.x;
    d.u = value(u, index);
    d.boundary = index >= unknowns_;
    d.ring = i;
    d.grad_u = du;
    d.hess_u = d2u;
    d.nu_vertical = 1.0 / std::sqrt(1.0 + du.squaredNorm());
    Eigen::SelfAdjointEigenSolver<MN> es(shape(d.u, du, d2u), Eigen::EigenvaluesOnly);
    d.kappa = es.eigenvalues().reverse();
    d.residual = index < unknowns_ ? residual_at(u, index, nullptr) : 0.0;
    return d;
  }

  Vec point(int index) const override { return metric_[index].x; }
  double ray_fraction(int index) const override { return metric_[index].tau; }
  int ring(int index) const override { return index / ring_size_; }
  int boundary_ring() const override { return ns_; }

 private:
  double value(const Vec& u, int id) const { return id < unknowns_ ? u[id] : eps_; }

  int id(int i, int k, int l) const { return (i * ntheta_ + k) * nphi_ + l; }

  // Maps reference indices, possibly across the centre or the poles, to a node.
  int resolve(int i, int k, int l) const {
    if constexpr (N == 2) {
      if (i < 0) {
        i = -1 - i;
        k += ntheta_ / 2;
      }
      k = ((k % ntheta_) + ntheta_) % ntheta_;
      return id(i, k, 0);
    } else {
      if (k < 0) {
        k = -1 - k;
        l += nphi_ / 2;
      } else if (k >= ntheta_) {
        k = 2 * ntheta_ - 1 - k;
        l += nphi_ / 2;
      }
      if (i < 0) {
        i = -1 - i;
        k = ntheta_ - 1 - k;
        l += nphi_ / 2;
      }
      l = ((l % nphi_) + nphi_) % nphi_;
      return id(i, k, l);
    }
  }

  void decompose(int index, int& i, int& k, int& l) const {
    i = index / ring_size_;
    const int rem = index % ring_size_;
    k = rem / nphi_;
    l = rem % nphi_;
  }

  static std::array<int, 3> axis(int a, int sign) {
    std::array<int, 3> o{0, 0, 0};
    o[a] = sign;
    return o;
  }

  // Stencil offsets: centre, (+a, -a) per axis, then (++, +-, -+, --) per pair.
  static std::array<std::array<int, 3>, kStencil> offsets() {
    std::array<std::array<int, 3>, kStencil> o{};
    int q = 1;
    for (int a = 0; a < N; ++a) {
      o[q++] = axis(a, 1);
      o[q++] = axis(a, -1);
    }
    for (int a = 0; a < N; ++a)
      for (int b = a + 1; b < N; ++b)
        for (int sa : {1, -1})
          for (int sb : {1, -1}) {
            std::array<int, 3> v{0, 0, 0};
            v[a] = sa;
            v[b] = sb;
            o[q++] = v;
          }
    return o;
  }

  void build_stencils() {
    const auto off = offsets();
    stencil_nodes_.resize(static_cast<std::size_t>(unknowns_) * kStencil);
    dep_offset_.assign(unknowns_ + 1, 0);
    std::vector<int> scratch;
    for (int row = 0; row < unknowns_; ++row) {
      int i, k, l;
      decompose(row, i, k, l);
      scratch.clear();
      for (int q = 0; q < kStencil; ++q) {
        const int nid = resolve(i + off[q][0], k + off[q][1], l + off[q][2]);
        stencil_nodes_[static_cast<std::size_t>(row) * kStencil + q] = nid;
        if (nid < unknowns_) scratch.push_back(nid);
      }
      std::sort(scratch.begin(), scratch.end());
      scratch.erase(std::unique(scratch.begin(), scratch.end()), scratch.end());
      deps_.insert(deps_.end(), scratch.begin(), scratch.end());
      dep_offset_[row + 1] = static_cast<int>(deps_.size());
    }
  }

  void build_geometry(const DomainSpec& domain, double clustering) {
    metric_.resize(nodes_);
    // Smallest support over the directions actually used, so the blend never
    // pulls a ray inward.
    std::vector<SupportJet> rho(ring_size_);
    std::vector<std::array<VN, N>> rhat(ring_size_);  // r-hat and its angular first derivatives
    std::vector<std::array<VN, kPairs + N>> rhat2(ring_size_);  // second derivatives (a <= b)
    double r0 = domain.min_support();
    for (int k = 0; k < ntheta_; ++k)
      for (int l = 0; l < nphi_; ++l) {
        const int q = k * nphi_ + l;
        directions(k, l, rhat[q], rhat2[q]);
        rho[q] = domain.support_jet(Eigen::VectorXd(rhat[q][0]));
        r0 = std::min(r0, rho[q].value);
      }

    double orientation = 0.0;
    for (int index = 0; index < nodes_; ++index) {
      int i, k, l;
      decompose(index, i, k, l);
      const int q = k * nphi_ + l;
      const double s = (i + 0.5) * ds_;
      const Stretch st = radial_stretch(clustering, s);
      const Blend bl = blend(st.t);
      const SupportJet& sj = rho[q];
      const VN& r = rhat[q][0];
      const Eigen::VectorXd grad = sj.gradient;
      const Eigen::MatrixXd hess = sj.hessian;

      // Angular derivatives of rho along the reference angles.
      std::array<double, N> rho_a{};
      MN rho_ab = MN::Zero();
      for (int a = 1; a < N; ++a) rho_a[a] = grad.dot(Eigen::VectorXd(rhat[q][a]));
      for (int a = 1; a < N; ++a)
        for (int b = a; b < N; ++b) {
          const double v = Eigen::VectorXd(rhat[q][a]).dot(hess * Eigen::VectorXd(rhat[q][b])) +
                           grad.dot(Eigen::VectorXd(rhat2[q][pair_slot(a, b)]));
          rho_ab(a, b) = rho_ab(b, a) = v;
        }

      const double T = st.t;
      const double dr = sj.value - r0;
      const double g = T * (r0 + dr * bl.b);
      const double g_t = r0 + dr * (bl.b + T * bl.db);
      const double g_tt = dr * (2.0 * bl.db + T * bl.ddb);
      const double g_r = T * bl.b;
      const double g_tr = bl.b + T * bl.db;
      const double p_s = g_t * st.dt;
      const double p_ss = g_tt * st.dt * st.dt + g_t * st.ddt;
      if (!(p_s > 0.0))
        fail(ErrorKind::mapped_grid_degeneracy, "radial map is not monotone along a ray");

      std::array<double, N> p_a{}, p_sa{};
      for (int a = 1; a < N; ++a) {
        p_a[a] = g_r * rho_a[a];
        p_sa[a] = g_tr * st.dt * rho_a[a];
      }

      Metric& m = metric_[index];
      m.x = g * r;
      m.tau = T;
      MN J;
      J.col(0) = p_s * r;
      for (int a = 1; a < N; ++a) J.col(a) = p_a[a] * r + g * rhat[q][a];
      // Second derivatives of F as vectors, indexed (a, b).
      std::array<std::array<VN, N>, N> f2v;
      f2v[0][0] = p_ss * r;
      for (int a = 1; a < N; ++a) {
        f2v[0][a] = f2v[a][0] = p_sa[a] * r + p_s * rhat[q][a];
        for (int b = a; b < N; ++b) {
          f2v[a][b] = f2v[b][a] = g_r * rho_ab(a, b) * r + p_a[a] * rhat[q][b] +
                                  p_a[b] * rhat[q][a] + g * rhat2[q][pair_slot(a, b)];
        }
      }
      for (int c = 0; c < N; ++c)
        for (int a = 0; a < N; ++a)
          for (int b = 0; b < N; ++b) m.f2[c](a, b) = f2v[a][b][c];

      const double det = J.determinant();
      const double scale = J.colwise().norm().prod();
      if (!(std::abs(det) > 1e-12 * scale))
        fail(ErrorKind::mapped_grid_degeneracy, "mapped grid Jacobian is singular");
      if (orientation == 0.0) orientation = det > 0.0 ? 1.0 : -1.0;
      if (det * orientation <= 0.0)
        fail(ErrorKind::mapped_grid_degeneracy, "mapped grid changes orientation");
      m.jinv_t = J.inverse().transpose();
    }
  }

  // Slot of the second angular derivative (a, b), 1 <= a <= b < N.
  static int pair_slot(int a, int b) { return (a - 1) * N + (b - 1); }

  void directions(int k, int l, std::array<VN, N>& r, std::array<VN, kPairs + N>& r2) const {
    if constexpr (N == 2) {
      const double t = 2.0 * std::numbers::pi * k / ntheta_;
      r[0] << std::cos(t), std::sin(t);
      r[1] << -std::sin(t), std::cos(t);
      r2[pair_slot(1, 1)] = -r[0];
      (void)l;
    } else {
      const double th = std::numbers::pi * (k + 0.5) / ntheta_;
      const double ph = 2.0 * std::numbers::pi * l / nphi_;
      const double st = std::sin(th), ct = std::cos(th), sp = std::sin(ph), cp = std::cos(ph);
      r[0] << st * cp, st * sp, ct;
      r[1] << ct * cp, ct * sp, -st;
      r[2] << -st * sp, st * cp, 0.0;
      r2[pair_slot(1, 1)] = -r[0];
      r2[pair_slot(1, 2)] << -ct * sp, ct * cp, 0.0;
      r2[pair_slot(2, 2)] << -st * cp, -st * sp, 0.0;
    }
  }

  void to_physical(int index, const VN& gu, const MN& hu, VN& du, MN& d2u) const {
    const Metric& m = metric_[index];
    du = m.jinv_t * gu;
    MN h = hu;
    for (int c = 0; c < N; ++c) h -= du[c] * m.f2[c];
    d2u = m.jinv_t * h * m.jinv_t.transpose();
  }

  void interior_derivatives(const Vec& u, int row, VN& du, MN& d2u) const {
    std::array<double, kStencil> v;
    const int* nid = stencil_nodes_.data() + static_cast<std::size_t>(row) * kStencil;
    for (int q = 0; q < kStencil; ++q) v[q] = value(u, nid[q]);
    VN gu;
    MN hu;
    for (int a = 0; a < N; ++a) {
      gu[a] = (v[1 + 2 * a] - v[2 + 2 * a]) / (2.0 * h_[a]);
      hu(a, a) = (v[1 + 2 * a] - 2.0 * v[0] + v[2 + 2 * a]) / (h_[a] * h_[a]);
    }
    int base = 1 + 2 * N;
    for (int a = 0; a < N; ++a)
      for (int b = a + 1; b < N; ++b) {
        hu(a, b) = hu(b, a) =
            (v[base] - v[base + 1] - v[base + 2] + v[base + 3]) / (4.0 * h_[a] * h_[b]);
        base += 4;
      }
    to_physical(row, gu, hu, du, d2u);
  }

  // One-sided second-order differences in s on the boundary ring.
  void boundary_derivatives(const Vec& u, int index, VN& du, MN& d2u) const {
    int i, k, l;
    decompose(index, i, k, l);
    auto at = [&](int ii, int kk, int ll) { return value(u, resolve(ii, kk, ll)); };
    auto us = [&](int kk, int ll) {
      return (3.0 * at(i, kk, ll) - 4.0 * at(i - 1, kk, ll) + at(i - 2, kk, ll)) / (2.0 * ds_);
    };
    VN gu;
    MN hu;
    gu[0] = us(k, l);
    hu(0, 0) = (2.0 * at(i, k, l) - 5.0 * at(i - 1, k, l) + 4.0 * at(i - 2, k, l) -
                at(i - 3, k, l)) /
               (ds_ * ds_);
    const double c = at(i, k, l);
    for (int a = 1; a < N; ++a) {
      const auto p = axis(a, 1);
      const auto m = axis(a, -1);
      const double vp = at(i, k + p[1], l + p[2]);
      const double vm = at(i, k + m[1], l + m[2]);
      gu[a] = (vp - vm) / (2.0 * h_[a]);
      hu(a, a) = (vp - 2.0 * c + vm) / (h_[a] * h_[a]);
      hu(0, a) = hu(a, 0) = (us(k + p[1], l + p[2]) - us(k + m[1], l + m[2])) / (2.0 * h_[a]);
    }
    if constexpr (N == 3) {
      hu(1, 2) = hu(2, 1) = (at(i, k + 1, l + 1) - at(i, k + 1, l - 1) - at(i, k - 1, l + 1) +
                             at(i, k - 1, l - 1)) /
                            (4.0 * h_[1] * h_[2]);
    }
    to_physical(index, gu, hu, du, d2u);
  }

  static MN shape(double u, const VN& p, const MN& hess) {
    const double w = std::sqrt(1.0 + p.squaredNorm());
    const MN gm = MN::Identity() - p * p.transpose() / (w * (1.0 + w));
    return u * gm * (hess / w) * gm + MN::Identity() / w;
  }

  double sigma_;
  double eps_;
  int ns_ = 0;
  int ntheta_ = 0;
  int nphi_ = 1;
  int ring_size_ = 0;
  int unknowns_ = 0;
  int nodes_ = 0;
  double ds_ = 0.0;
  std::array<double, 3> h_{};
  std::vector<Metric> metric_;
  std::vector<int> stencil_nodes_;
  std::vector<int> deps_;
  std::vector<int> dep_offset_;
};

// ---------------------------------------------------------------------------

std::vector<std::vector<int>> rows_of_columns(const DiscreteProblem& p) {
  std::vector<std::vector<int>> rows(p.unknowns());
  for (int r = 0; r < p.unknowns(); ++r)
    for (int c : p.stencil(r)) rows[c].push_back(r);
  return rows;
}

StepOutcome step_impl(const DiscreteProblem& p, const Vec& u, double damping,
                      const NewtonOptions& options, int workers, const std::vector<int>& colors,
                      const Vec& f, const ResidualNorms& before) {
  if (!before.guard)
    fail(ErrorKind::cone_violation, "Newton step requires an iterate inside the cone");
  const Eigen::SparseMatrix<double> jac = fd_jacobian(p, u, colors, workers);
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(jac);
  lu.factorize(jac);
  if (lu.info() != Eigen::Success)
    fail(ErrorKind::newton_divergence, "Jacobian factorisation failed");
  const Vec delta = lu.solve(-f);
  if (lu.info() != Eigen::Success || !delta.allFinite())
    fail(ErrorKind::newton_divergence, "Newton linear solve failed");

  StepOutcome out;
  out.before = before;
  bool guard_seen = false;
  Vec trial;
  Vec ft;
  double t = std::min(1.0, damping);
  const double floor = options.min_step * (1.0 - 1e-12);
  while (t >= floor) {
    trial = u + t * delta;
    const ResidualNorms after = evaluate_residual(p, trial, ft, workers);
    if (after.guard) {
      guard_seen = true;
      if (after.l2 <= (1.0 - 1e-4 * t) * before.l2 || after.sup <= options.residual_tol) {
        out.u = std::move(trial);
        out.after = after;
        out.damping = t;
        out.step_norm = t * delta.lpNorm<Eigen::Infinity>();
        return out;
      }
    }
    t *= 0.5;
    ++out.halvings;
  }
  std::ostringstream msg;
  msg << (guard_seen ? "residual not reduced" : "cone guard rejected every step")
      << " down to step " << options.min_step << " (residual sup " << before.sup << ")";
  fail(guard_seen ? ErrorKind::newton_divergence : ErrorKind::cone_violation, msg.str());
}

}  // namespace

std::unique_ptr<DiscreteProblem> make_radial_problem(int n, double sigma, double radius,
                                                     double eps, int nodes, double clustering) {
  return std::make_unique<RadialProblem>(n, sigma, radius, eps, nodes, clustering);
}

std::unique_ptr<DiscreteProblem> make_grid_problem(const DomainSpec& domain, double sigma,
                                                   double eps, const MeshSpec& mesh) {
  switch (domain.n()) {
    case 2: return std::make_unique<GridProblem<2>>(domain, sigma, eps, mesh);
    case 3: return std::make_unique<GridProblem<3>>(domain, sigma, eps, mesh);
    default:
      fail(ErrorKind::invalid_argument, "mapped-grid solves support n = 2 and n = 3 only");
  }
}

ResidualNorms evaluate_residual(const DiscreteProblem& p, const Vec& u, Vec& f, int workers) {
  const int m = p.unknowns();
  f.resize(m);
  std::vector<char> ok(m, 1);
  parallel_blocks(static_cast<std::size_t>(m), workers, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t r = lo; r < hi; ++r) {
      bool g = true;
      f[static_cast<Eigen::Index>(r)] = p.residual_at(u, static_cast<int>(r), &g);
      ok[r] = g ? 1 : 0;
    }
  });
  ResidualNorms norms;
  double ss = 0.0;
  for (int r = 0; r < m; ++r) {
    norms.sup = std::max(norms.sup, std::abs(f[r]));
    ss += f[r] * f[r];
    if (!ok[r]) norms.guard = false;
  }
  norms.l2 = std::sqrt(ss);
  if (!std::isfinite(ss)) norms.guard = false;
  return norms;
}

std::vector<int> color_columns(const DiscreteProblem& p) {
  const int m = p.unknowns();
  const auto rows = rows_of_columns(p);
  std::vector<int> color(m, -1);
  std::vector<int> stamp;
  for (int c = 0; c < m; ++c) {
    for (int r : rows[c])
      for (int other : p.stencil(r))
        if (color[other] >= 0) {
          if (static_cast<int>(stamp.size()) <= color[other]) stamp.resize(color[other] + 1, -1);
          stamp[color[other]] = c;
        }
    int pick = 0;
    while (pick < static_cast<int>(stamp.size()) && stamp[pick] == c) ++pick;
    color[c] = pick;
  }
  return color;
}

Eigen::SparseMatrix<double> fd_jacobian(const DiscreteProblem& p, const Vec& u,
                                        const std::vector<int>& colors, int workers) {
  const int m = p.unknowns();
  const auto rows = rows_of_columns(p);
  int ncolors = 0;
  for (int c : colors) ncolors = std::max(ncolors, c + 1);
  std::vector<std::vector<int>> groups(ncolors);
  for (int c = 0; c < m; ++c) groups[colors[c]].push_back(c);

  std::vector<Eigen::Triplet<double>> triplets;
  std::vector<std::pair<int, int>> entries;  // (row, column)
  std::vector<double> values;
  // Central differences: rows near the axis carry large entries that nearly
  // cancel, and a one-sided quotient loses their sum.
  Vec up = u;
  Vec um = u;
  for (const auto& group : groups) {
    entries.clear();
    for (int c : group) {
      const double delta = std::sqrt(DBL_EPSILON) * std::max(1.0, std::abs(u[c]));
      up[c] = u[c] + delta;
      um[c] = u[c] - delta;
      for (int r : rows[c]) entries.emplace_back(r, c);
    }
    values.assign(entries.size(), 0.0);
    parallel_blocks(entries.size(), workers, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t e = lo; e < hi; ++e) {
        const auto [r, c] = entries[e];
        values[e] = (p.residual_at(up, r, nullptr) - p.residual_at(um, r, nullptr)) /
                    (up[c] - um[c]);
      }
    });
    for (std::size_t e = 0; e < entries.size(); ++e)
      triplets.emplace_back(entries[e].first, entries[e].second, values[e]);
    for (int c : group) up[c] = um[c] = u[c];
  }
  Eigen::SparseMatrix<double> jac(m, m);
  jac.setFromTriplets(triplets.begin(), triplets.end());
  return jac;
}

StepOutcome newton_step(const DiscreteProblem& p, const Vec& u, double damping,
                        const NewtonOptions& options, int workers) {
  Vec f;
  const ResidualNorms before = evaluate_residual(p, u, f, workers);
  return step_impl(p, u, damping, options, workers, color_columns(p), f, before);
}

NewtonTrace newton_solve(const DiscreteProblem& p, Vec& u, const NewtonOptions& options,
                         int workers) {
  if (u.size() != p.unknowns()) fail(ErrorKind::invalid_argument, "iterate has wrong size");
  Vec f;
  ResidualNorms norms = evaluate_residual(p, u, f, workers);
  if (!norms.guard) fail(ErrorKind::cone_violation, "initial iterate lies outside the cone");
  NewtonTrace trace;
  trace.history.push_back(norms.sup);
  const std::vector<int> colors = color_columns(p);
  while (norms.sup > options.residual_tol) {
    if (trace.iterations >= options.max_iters) {
      std::ostringstream msg;
      msg << "no convergence after " << options.max_iters << " iterations (residual sup "
          << norms.sup << ")";
      fail(ErrorKind::newton_divergence, msg.str());
    }
    StepOutcome step = step_impl(p, u, options.step_damping, options, workers, colors, f, norms);
    u = std::move(step.u);
    norms = evaluate_residual(p, u, f, workers);
    ++trace.iterations;
    trace.history.push_back(norms.sup);
  }
  trace.final = norms;
  return trace;
}

}  // namespace plateau::solver
