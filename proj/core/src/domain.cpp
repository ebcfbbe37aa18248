#include "plateau/domain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "plateau/error.hpp"
#include "plateau/format.hpp"

namespace plateau::solver {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

std::string_view to_string(DomainKind kind) noexcept {
  switch (kind) {
    case DomainKind::ball: return "ball";
    case DomainKind::ellipsoid: return "ellipsoid";
    case DomainKind::star_shaped: return "star_shaped";
  }
  return "unknown";
}

DomainSpec::DomainSpec(DomainKind kind, int n, std::vector<double> params)
    : kind_(kind), n_(n), params_(std::move(params)) {}

DomainSpec DomainSpec::ball(int n, double radius) {
  if (n < 2) fail(ErrorKind::invalid_argument, "domain dimension must be >= 2");
  if (!(radius > 0.0) || !std::isfinite(radius))
    fail(ErrorKind::invalid_argument, "ball radius must be positive");
  DomainSpec d(DomainKind::ball, n, {radius});
  d.finalize();
  return d;
}

DomainSpec DomainSpec::ellipsoid(std::vector<double> semi_axes) {
  const int n = static_cast<int>(semi_axes.size());
  if (n < 2) fail(ErrorKind::invalid_argument, "ellipsoid needs at least two semi-axes");
  for (double a : semi_axes)
    if (!(a > 0.0) || !std::isfinite(a))
      fail(ErrorKind::invalid_argument, "ellipsoid semi-axes must be positive");
  DomainSpec d(DomainKind::ellipsoid, n, std::move(semi_axes));
  d.finalize();
  return d;
}

DomainSpec DomainSpec::star_shaped(std::vector<double> radial_samples) {
  const std::size_t m = radial_samples.size();
  if (m < 3) fail(ErrorKind::invalid_argument, "star-shaped domain needs at least 3 radial samples");
  for (double r : radial_samples)
    if (!(r > 0.0) || !std::isfinite(r))
      fail(ErrorKind::invalid_argument, "radial samples must be strictly positive");
  DomainSpec d(DomainKind::star_shaped, 2, std::move(radial_samples));
  const double md = static_cast<double>(m);
  const std::size_t harmonics = m / 2;
  d.cos_coeff_.assign(harmonics + 1, 0.0);
  d.sin_coeff_.assign(harmonics + 1, 0.0);
  for (std::size_t l = 0; l < m; ++l) {
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(l) / md;
    for (std::size_t j = 0; j <= harmonics; ++j) {
      d.cos_coeff_[j] += d.params_[l] * std::cos(j * theta);
      d.sin_coeff_[j] += d.params_[l] * std::sin(j * theta);
    }
  }
  for (std::size_t j = 0; j <= harmonics; ++j) {
    const bool edge = j == 0 || (m % 2 == 0 && j == harmonics);
    const double scale = edge ? 1.0 / md : 2.0 / md;
    d.cos_coeff_[j] *= scale;
    d.sin_coeff_[j] = edge ? 0.0 : d.sin_coeff_[j] * scale;
  }
  d.finalize();
  return d;
}

std::string DomainSpec::label() const {
  std::string s(to_string(kind_));
  if (kind_ == DomainKind::ball) s += std::to_string(n_) + "d";
  s += '(';
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (i) s += ',';
    s += format_double(params_[i]);
  }
  return s + ')';
}

double DomainSpec::fourier_value(double theta, int derivative) const {
  double v = 0.0;
  for (std::size_t j = 0; j < cos_coeff_.size(); ++j) {
    const double jd = static_cast<double>(j);
    const double c = std::cos(jd * theta);
    const double s = std::sin(jd * theta);
    switch (derivative) {
      case 0: v += cos_coeff_[j] * c + sin_coeff_[j] * s; break;
      case 1: v += jd * (-cos_coeff_[j] * s + sin_coeff_[j] * c); break;
      default: v += -jd * jd * (cos_coeff_[j] * c + sin_coeff_[j] * s); break;
    }
  }
  return v;
}

double DomainSpec::support(const Vec& direction) const { return support_jet(direction).value; }

SupportJet DomainSpec::support_jet(const Vec& y) const {
  if (y.size() != n_) fail(ErrorKind::invalid_argument, "direction has wrong dimension");
  const double r = y.norm();
  if (!(r > 0.0)) fail(ErrorKind::invalid_argument, "direction must be nonzero");
  SupportJet j;
  j.gradient = Vec::Zero(n_);
  j.hessian = Mat::Zero(n_, n_);
  switch (kind_) {
    case DomainKind::ball:
      j.value = params_[0];
      break;
    case DomainKind::ellipsoid: {
      // rho(y) = |y| q^{-1/2}, q = sum y_i^2 / a_i^2
      Vec dy(n_);
      double q = 0.0;
      for (int i = 0; i < n_; ++i) {
        dy[i] = y[i] / (params_[i] * params_[i]);
        q += y[i] * dy[i];
      }
      Mat dmat = Mat::Zero(n_, n_);
      for (int i = 0; i < n_; ++i) dmat(i, i) = 1.0 / (params_[i] * params_[i]);
      const Vec yh = y / r;
      const double qm12 = 1.0 / std::sqrt(q);
      const double qm32 = qm12 / q;
      const Vec grad_q = -qm32 * dy;  // gradient of q^{-1/2}
      const Mat hess_q = -qm32 * dmat + 3.0 * qm32 / q * dy * dy.transpose();
      const Mat hess_r = (Mat::Identity(n_, n_) - yh * yh.transpose()) / r;
      j.value = r * qm12;
      j.gradient = yh * qm12 + r * grad_q;
      j.hessian = hess_r * qm12 + yh * grad_q.transpose() + grad_q * yh.transpose() + r * hess_q;
      break;
    }
    case DomainKind::star_shaped: {
      const double theta = std::atan2(y[1], y[0]);
      const double r2 = r * r;
      Vec dt(2);
      dt << -y[1] / r2, y[0] / r2;
      Mat ddt(2, 2);
      ddt << 2.0 * y[0] * y[1], y[1] * y[1] - y[0] * y[0], y[1] * y[1] - y[0] * y[0],
          -2.0 * y[0] * y[1];
      ddt /= r2 * r2;
      const double f1 = fourier_value(theta, 1);
      j.value = fourier_value(theta, 0);
      j.gradient = f1 * dt;
      j.hessian = fourier_value(theta, 2) * dt * dt.transpose() + f1 * ddt;
      break;
    }
  }
  return j;
}

bool DomainSpec::contains(const Vec& x) const {
  const double r = x.norm();
  if (r == 0.0) return true;
  return r < support(x);
}

void DomainSpec::finalize() {
  // Boundary as the zero set of |x| - rho(x / |x|); sample its mean curvature.
  std::vector<Vec> dirs;
  if (n_ == 2) {
    for (int l = 0; l < 1440; ++l) {
      const double t = 2.0 * std::numbers::pi * l / 1440.0;
      Vec d(2);
      d << std::cos(t), std::sin(t);
      dirs.push_back(d);
    }
  } else if (n_ == 3) {
    for (int k = 0; k < 90; ++k)
      for (int l = 0; l < 180; ++l) {
        const double th = std::numbers::pi * (k + 0.5) / 90.0;
        const double ph = 2.0 * std::numbers::pi * l / 180.0;
        Vec d(3);
        d << std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th);
        dirs.push_back(d);
      }
  } else {
    for (int i = 0; i < n_; ++i) {
      Vec d = Vec::Zero(n_);
      d[i] = 1.0;
      dirs.push_back(d);
      dirs.push_back(-d);
    }
    Vec d = Vec::Ones(n_) / std::sqrt(static_cast<double>(n_));
    dirs.push_back(d);
    dirs.push_back(-d);
  }
  mean_curvature_min_ = std::numeric_limits<double>::infinity();
  min_support_ = std::numeric_limits<double>::infinity();
  max_support_ = 0.0;
  for (const Vec& d : dirs) {
    const SupportJet s = support_jet(d);
    if (!(s.value > 0.0))
      fail(ErrorKind::invalid_argument, "boundary radius must stay positive");
    min_support_ = std::min(min_support_, s.value);
    max_support_ = std::max(max_support_, s.value);
    const Vec grad = d - s.gradient / s.value;  // at x = rho d; the extension is 0-homogeneous
    const Mat hess = (Mat::Identity(n_, n_) - d * d.transpose()) / s.value -
                     s.hessian / (s.value * s.value);
    const double gn = grad.norm();
    const Vec nh = grad / gn;
    const double h = (hess.trace() - nh.dot(hess * nh)) / gn;
    mean_curvature_min_ = std::min(mean_curvature_min_, h);
  }
  if (kind_ != DomainKind::star_shaped) {
    min_support_ = *std::min_element(params_.begin(), params_.end());
    max_support_ = *std::max_element(params_.begin(), params_.end());
  }
}

}  // namespace plateau::solver
