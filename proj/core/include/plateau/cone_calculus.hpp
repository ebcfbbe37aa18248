#pragma once

// Elementary symmetric functions on Garding cones, the inequalities used to
// control them, and the spectral calculus of the top eigenvalue.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace plateau::cone {

/// Principal curvatures, kept sorted in descending order.
class CurvatureVector {
 public:
  /// Sorts `values` descending (stable). Throws invalid_argument if n < 2 or
  /// an entry is not finite.
  explicit CurvatureVector(std::vector<double> values);
  CurvatureVector(std::initializer_list<double> values)
      : CurvatureVector(std::vector<double>(values)) {}

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  double largest() const noexcept { return values_.front(); }
  std::span<const double> values() const noexcept { return values_; }

  friend bool operator==(const CurvatureVector&, const CurvatureVector&) = default;

 private:
  std::vector<double> values_;
};

struct ConeMembership {
  int k = 0;
  std::vector<double> sigma_values;  // sigma_1 .. sigma_k
  bool inside = false;
  double min_slack = 0.0;
};

/// sigma_k value with first and (off-diagonal) second partial derivatives.
struct SymmetricJet {
  int k = 0;
  double value = 0.0;
  Eigen::VectorXd gradient;  // d sigma_k / d kappa_i
  Eigen::MatrixXd hessian;   // d^2 sigma_k / d kappa_p d kappa_q, zero diagonal
};

/// sigma_k over an arbitrary list (no sorting, zero-length allowed).
/// Prefix-product recurrence, O(n k).
double elementary_symmetric(std::span<const double> values, int k);
double elementary_symmetric(const CurvatureVector& kappa, int k);

/// sigma_0 .. sigma_m in one pass.
std::vector<double> elementary_symmetric_all(std::span<const double> values, int max_k);

/// sigma_j of the eigenvalues of a square matrix (sums of principal j-minors),
/// j = 0..n, via the Faddeev-LeVerrier recurrence. No eigendecomposition.
std::vector<double> eigenvalue_symmetric_functions(const Eigen::MatrixXd& a);

SymmetricJet symmetric_jet(const CurvatureVector& kappa, int k);

ConeMembership cone_membership(const CurvatureVector& kappa, int k);
ConeMembership cone_membership(std::span<const double> values, int k);

/// sum_i sigma_k^{ii} kappa_i^2 - (k/n) sigma_1 sigma_k. Requires kappa in Gamma_k.
double lemma_quadratic_slack(const CurvatureVector& kappa, int k);

/// min over kappa_i <= 0 of ((n-k)/k) kappa_1 + kappa_i, or +inf if every entry
/// is positive. Requires kappa in Gamma_k.
double lemma_negative_part_slack(const CurvatureVector& kappa, int k);

/// Scale-aware PSD threshold: 1e-9 * (1 + max |eigenvalue|).
double psd_tolerance(const Eigen::MatrixXd& m);

/// The Ren-Wang inequality written as a quadratic form in
/// xi = (h_111, ..., h_nn1).
struct RWQuery {
  CurvatureVector kappa;
  double eps_rw = 0.0;
  double K = 0.0;
  Eigen::MatrixXd form_matrix;
  double min_eigenvalue = 0.0;
  double tolerance = 0.0;
  bool certified = false;

  /// xi^T M xi.
  double evaluate(const Eigen::VectorXd& xi) const;
  /// 1 + spectral radius of M; the scale used by tolerance tests on evaluate().
  double scale() const;
};

RWQuery ren_wang_form(const CurvatureVector& kappa, double eps_rw, double K);

/// Upper end of the doubling search in ren_wang_min_K.
inline constexpr double kRenWangKCap = 1e12;

/// Smallest K >= 0 certifying the form, by doubling then bisection.
/// Returns +inf when the form is not certified at kRenWangKCap.
double ren_wang_min_K(const CurvatureVector& kappa, double eps_rw);

struct EigenvalueJet {
  double value = 0.0;
  double first = 0.0;
  double second = 0.0;
};

/// Value, first and second t-derivative at t = 0 of the largest eigenvalue of
/// A + t*Adot + (t^2/2)*Addot. Throws degenerate_spectrum when the top gap is
/// below 1e-8 * (1 + |lambda_1|).
EigenvalueJet eigenvalue_jet(const Eigen::MatrixXd& a, const Eigen::MatrixXd& a_dot,
                             const Eigen::MatrixXd& a_ddot);

struct SampleOptions {
  /// Upper end of the uniform diagonal shift added before the cone test.
  /// Negative means "choose from (n, k)".
  double diagonal_shift = -1.0;
};

/// Deterministic samples strictly inside Gamma_k, sorted descending. Samples are
/// generated in fixed-size blocks with per-block seeds so any index range can
/// be reproduced independently of how the caller partitions the work.
std::vector<CurvatureVector> sample_cone(int n, int k, std::size_t count, std::uint64_t seed,
                                         std::optional<double> level = std::nullopt,
                                         SampleOptions options = {});

/// Samples [first, first + count) of the sequence produced by sample_cone with
/// the same arguments.
std::vector<CurvatureVector> sample_cone_range(int n, int k, std::size_t first, std::size_t count,
                                               std::uint64_t seed,
                                               std::optional<double> level = std::nullopt,
                                               SampleOptions options = {});

}  // namespace plateau::cone
