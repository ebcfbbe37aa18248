#pragma once

// Pointwise geometry of vertical graphs x_{n+1} = u(x) in the upper half-space
// model of hyperbolic space, the umbilic cap family, and finite-difference
// residuals of the structure identities satisfied by every such graph.

#include <functional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "plateau/cone_calculus.hpp"

namespace plateau::geometry {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Height with its first and second horizontal derivatives.
struct HeightJet {
  double u = 0.0;
  Vec grad;
  Mat hess;
};

/// A smooth height field evaluated pointwise. Must be safe to call concurrently.
using HeightField = std::function<HeightJet(const Vec&)>;

struct GraphJet {
  Vec x;
  double u = 0.0;
  Vec grad_u;
  Mat hess_u;
  double w = 1.0;            // sqrt(1 + |Du|^2)
  double nu_vertical = 1.0;  // 1 / w
  Vec euclidean_spectrum;    // descending
  cone::CurvatureVector hyperbolic_spectrum{1.0, 1.0};
};

/// Normal is (-Du, 1)/w. Throws invalid_height when u <= 0.
GraphJet graph_jet(const Vec& x, double u, const Vec& grad_u, const Mat& hess_u);
GraphJet graph_jet(const Vec& x, const HeightJet& jet);

/// Symmetric matrix similar to the hyperbolic shape operator:
/// u G^{-1/2} (D^2u / w) G^{-1/2} + nu I with G = I + Du Du^T.
Mat hyperbolic_shape_matrix(double u, const Vec& grad_u, const Mat& hess_u);

/// Induced hyperbolic metric g_ab = (delta_ab + u_a u_b) / u^2.
Mat induced_metric(const HeightJet& jet);

/// Hyperbolic second fundamental form in coordinates:
/// u_ab / (u w) + nu g_ab.
Mat second_fundamental_form(const HeightJet& jet);

/// Christoffel symbols of the induced metric, gamma[c](a, b) = Gamma^c_ab.
std::vector<Mat> christoffel(const HeightJet& jet);

/// Principal frame: columns are coordinate vectors of g-orthonormal principal
/// directions, ordered to match `kappa` (descending).
struct PrincipalFrame {
  Mat vectors;
  Vec kappa;
  double min_gap = 0.0;
};

PrincipalFrame principal_frame(const HeightJet& jet);

/// Totally umbilic spherical cap over the ball |x| < R with boundary height eps.
struct CapSolution {
  int n = 0;
  double sigma = 0.0;
  double R = 0.0;
  double eps_bdry = 0.0;
  double lambda = 0.0;  // umbilic curvature, n lambda^{n-1} = sigma
  double a = 0.0;       // Euclidean sphere radius
  double d = 0.0;       // signed centre height

  double height(double r) const;
  double slope(double r) const;      // u'(r)
  double curvature(double r) const;  // u''(r)
  /// Jet of u(|x|) at a point of R^n.
  HeightJet jet(const Vec& x) const;
  HeightField field() const;
};

/// Throws invalid_argument unless n >= 2, sigma in (0, n), R > 0, eps >= 0.
CapSolution exact_cap(int n, double sigma, double R, double eps_bdry);

enum class Identity { nu_first, nu_gradient, nu_second, gauss, codazzi, commutator };
std::string_view to_string(Identity id) noexcept;

struct ResidualSample {
  Vec location;
  Identity identity = Identity::nu_first;
  int component = -1;  // frame direction or pair index; -1 when not applicable
  double residual = 0.0;
  double fd_step = 0.0;
};

enum class FrameStatus { principal, umbilic, ambiguous };

/// What to do when principal curvatures are (nearly) repeated.
enum class FramePolicy {
  strict,             // only exactly umbilic points may use an arbitrary eigenbasis
  accept_degenerate,  // caller guarantees repeated curvatures are exact (e.g. rotational graphs)
};

struct IdentityReport {
  std::vector<ResidualSample> samples;
  FrameStatus frame = FrameStatus::principal;

  /// Largest |residual| for `id`, or 0 when there is no such sample.
  double max_abs(Identity id) const;
  bool has(Identity id) const;
};

/// Residuals of the three vertical-normal identities:
///   sum_i u_i^2/u^2 = 1 - nu^2,
///   nu_i = (u_i/u)(nu - kappa_i),
///   nu_ii = 2 (u_i/u) nu_i + (1 + nu^2) kappa_i - nu (1 + kappa_i^2),
/// with frame derivatives taken by central differences along g-unit principal
/// directions (second derivatives along second-order geodesic chords).
/// When the frame is ambiguous only the frame-free identity is reported.
IdentityReport nu_identity_residuals(const HeightField& surface, const Vec& x, double fd_step,
                                     FramePolicy policy = FramePolicy::strict);

/// Gauss equation R_ijij = -1 + kappa_i kappa_j (one sample per pair i < j),
/// Codazzi symmetry h_ijk = h_ikj and the commutator formula for h_klij, all
/// from finite differences of the induced metric and second fundamental form.
IdentityReport gauss_commutator_residuals(const HeightField& surface, const Vec& x,
                                          double fd_step,
                                          FramePolicy policy = FramePolicy::strict);

/// Sectional curvatures K(e_i, e_j) in the principal frame, i < j, row-major.
std::vector<double> sectional_curvatures(const HeightField& surface, const Vec& x,
                                         double fd_step);

/// Right-hand side of the commutator formula for h_klij in an orthonormal
/// frame, given h_ijkl (second covariant derivatives, index order k,l,i,j) and h.
double commutator_rhs(const std::vector<double>& hessian_h, const Mat& h, int k, int l, int i,
                      int j);

}  // namespace plateau::geometry
