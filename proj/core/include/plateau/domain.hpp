#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace plateau::solver {

enum class DomainKind { ball, ellipsoid, star_shaped };

std::string_view to_string(DomainKind kind) noexcept;

/// Value, gradient and Hessian of the boundary radius rho(y / |y|), viewed as a
/// function of y in R^n \ {0}.
struct SupportJet {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

/// A bounded star-shaped domain centred at the origin, described by its boundary
/// radius rho along each direction.
class DomainSpec {
 public:
  static DomainSpec ball(int n, double radius);
  /// Axis-aligned ellipsoid; n = semi_axes.size().
  static DomainSpec ellipsoid(std::vector<double> semi_axes);
  /// Planar domain r < rho(theta), rho given at theta_j = 2 pi j / m and
  /// extended by trigonometric interpolation.
  static DomainSpec star_shaped(std::vector<double> radial_samples);

  DomainKind kind() const noexcept { return kind_; }
  int n() const noexcept { return n_; }
  const std::vector<double>& parameters() const noexcept { return params_; }
  /// Stable text key such as "ellipsoid(1.3,1,1)".
  std::string label() const;

  /// Minimum over the boundary of the (unnormalised) mean curvature, the sum
  /// of principal curvatures with respect to the inner normal.
  double boundary_mean_curvature_min() const noexcept { return mean_curvature_min_; }

  double support(const Eigen::VectorXd& direction) const;
  SupportJet support_jet(const Eigen::VectorXd& direction) const;
  double min_support() const noexcept { return min_support_; }
  double max_support() const noexcept { return max_support_; }

  bool contains(const Eigen::VectorXd& x) const;

 private:
  DomainSpec(DomainKind kind, int n, std::vector<double> params);
  void finalize();
  double fourier_value(double theta, int derivative) const;

  DomainKind kind_;
  int n_;
  std::vector<double> params_;
  std::vector<double> cos_coeff_;  // star-shaped only
  std::vector<double> sin_coeff_;
  double mean_curvature_min_ = 0.0;
  double min_support_ = 0.0;
  double max_support_ = 0.0;
};

}  // namespace plateau::solver
