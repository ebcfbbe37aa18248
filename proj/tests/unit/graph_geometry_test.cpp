#include <gtest/gtest.h>

#include <cmath>

#include "plateau/error.hpp"
#include "plateau/graph_geometry.hpp"

using namespace plateau;
using geometry::HeightField;
using geometry::HeightJet;
using geometry::Identity;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

namespace {

HeightField flat(int n, double c) {
  return [n, c](const Vec&) { return HeightJet{c, Vec::Zero(n), Mat::Zero(n, n)}; };
}

// A non-umbilic polynomial graph over R^3, positive near the origin.
HeightField bumpy() {
  return [](const Vec& x) {
    const double a = x[0], b = x[1], c = x[2];
    HeightJet j;
    j.u = 1.5 - 0.3 * a * a - 0.15 * b * b - 0.05 * c * c + 0.1 * a * b * c + 0.2 * a;
    j.grad = Vec(3);
    j.grad << -0.6 * a + 0.1 * b * c + 0.2, -0.3 * b + 0.1 * a * c, -0.1 * c + 0.1 * a * b;
    j.hess = Mat(3, 3);
    j.hess << -0.6, 0.1 * c, 0.1 * b, 0.1 * c, -0.3, 0.1 * a, 0.1 * b, 0.1 * a, -0.1;
    return j;
  };
}

double sup(const geometry::IdentityReport& r, Identity id) { return r.max_abs(id); }

Vec point3(double a, double b, double c) {
  Vec x(3);
  x << a, b, c;
  return x;
}

}  // namespace

TEST(GraphJet, FlatGraphIsUmbilicAtOne) {
  const auto j = geometry::graph_jet(Vec::Zero(3), 0.7, Vec::Zero(3), Mat::Zero(3, 3));
  EXPECT_EQ(j.nu_vertical, 1.0);
  EXPECT_EQ(j.w, 1.0);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(j.euclidean_spectrum[i], 0.0);
    EXPECT_DOUBLE_EQ(j.hyperbolic_spectrum[i], 1.0);
  }
}

TEST(GraphJet, RejectsNonPositiveHeight) {
  try {
    geometry::graph_jet(Vec::Zero(2), 0.0, Vec::Zero(2), Mat::Zero(2, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_height);
  }
}

TEST(GraphJet, CapCentre) {
  const auto cap = geometry::exact_cap(3, 1.5, 1.0, 0.0);
  const double a = std::sqrt(2.0);
  const auto j = geometry::graph_jet(Vec::Zero(3), std::sqrt(2.0) - 1.0, Vec::Zero(3),
                                     -Mat::Identity(3, 3) / a);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(j.hyperbolic_spectrum[i], cap.lambda, 1e-15);
}

TEST(GraphJet, ScalingWithZeroGradient) {
  Mat h(2, 2);
  h << -0.4, 0.1, 0.1, -0.2;
  const auto a = geometry::graph_jet(Vec::Zero(2), 0.8, Vec::Zero(2), h);
  for (double t : {0.5, 2.0, 7.0}) {
    const auto b = geometry::graph_jet(Vec::Zero(2), 0.8 * t, Vec::Zero(2), h / t);
    for (int i = 0; i < 2; ++i)
      EXPECT_NEAR(a.hyperbolic_spectrum[i], b.hyperbolic_spectrum[i], 1e-14);
  }
}

TEST(GraphJet, ConversionIdentityAndNormalRange) {
  const auto f = bumpy();
  for (double s : {-0.4, 0.0, 0.3, 0.6}) {
    const Vec x = point3(s, 0.5 * s, -s);
    const auto jet = f(x);
    const auto g = geometry::graph_jet(x, jet);
    EXPECT_GT(g.nu_vertical, 0.0);
    EXPECT_LE(g.nu_vertical, 1.0);
    EXPECT_NEAR(g.w, std::sqrt(1.0 + jet.grad.squaredNorm()), 1e-15);
    for (int i = 0; i < 3; ++i)
      EXPECT_NEAR(g.hyperbolic_spectrum[i] - g.nu_vertical, jet.u * g.euclidean_spectrum[i], 1e-13);
  }
}

TEST(GraphJet, ShapeMatrixMatchesSpectrum) {
  const auto f = bumpy();
  const Vec x = point3(0.2, -0.1, 0.3);
  const auto jet = f(x);
  const Mat a = geometry::hyperbolic_shape_matrix(jet.u, jet.grad, jet.hess);
  EXPECT_LT((a - a.transpose()).cwiseAbs().maxCoeff(), 1e-15);
  Eigen::SelfAdjointEigenSolver<Mat> es(a);
  const auto g = geometry::graph_jet(x, jet);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(es.eigenvalues()[2 - i], g.hyperbolic_spectrum[i], 1e-13);
}

TEST(ExactCap, ClosedFormAtZeroHeight) {
  const auto c = geometry::exact_cap(3, 1.5, 1.0, 0.0);
  EXPECT_NEAR(c.lambda, std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(c.a, std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(c.d, -1.0, 1e-14);
  EXPECT_NEAR(c.height(0.0), std::sqrt(2.0) - 1.0, 1e-14);
}

TEST(ExactCap, RootAndBoundaryInvariants) {
  for (int n : {2, 3, 4})
    for (double sigma : {0.05, 0.5, 1.0, 1.9})
      for (double eps : {0.0, 1e-4, 0.01, 0.3}) {
        const auto c = geometry::exact_cap(n, sigma, 1.2, eps);
        const double l = c.lambda;
        EXPECT_NEAR(n * std::pow(l, n - 1), sigma, 1e-12);
        EXPECT_NEAR((1 - l * l) * c.a * c.a - 2 * l * eps * c.a - (1.44 + eps * eps), 0.0,
                    1e-11 * c.a * c.a);
        EXPECT_GT(c.a, 0.0);
        EXPECT_NEAR(c.height(1.2), eps, 1e-12);
      }
}

TEST(ExactCap, RejectsBadArguments) {
  EXPECT_THROW(geometry::exact_cap(3, 3.0, 1.0, 0.0), Error);
  EXPECT_THROW(geometry::exact_cap(3, 0.0, 1.0, 0.0), Error);
  EXPECT_THROW(geometry::exact_cap(1, 0.5, 1.0, 0.0), Error);
  EXPECT_THROW(geometry::exact_cap(3, 1.5, -1.0, 0.0), Error);
  EXPECT_THROW(geometry::exact_cap(3, 1.5, 1.0, -0.1), Error);
}

TEST(ExactCap, UmbilicAtManyRadii) {
  for (double eps : {0.0, 0.01}) {
    const auto c = geometry::exact_cap(3, 1.5, 1.0, eps);
    double worst = 0.0;
    for (int j = 0; j < 1000; ++j) {
      const double r = (j + 0.5) / 1000.0;
      const auto g = geometry::graph_jet(point3(r * 0.6, r * 0.8, 0.0), c.jet(point3(r * 0.6, r * 0.8, 0.0)));
      for (int i = 0; i < 3; ++i) worst = std::max(worst, std::abs(g.hyperbolic_spectrum[i] - c.lambda));
    }
    EXPECT_LE(worst, 1e-12);
  }
}

TEST(ExactCap, NormalMinimumAtBoundary) {
  const auto c = geometry::exact_cap(3, 1.5, 1.0, 0.0);
  double prev = 2.0;
  for (int j = 0; j <= 100; ++j) {
    const double r = j / 100.0;
    const double nu = 1.0 / std::sqrt(1.0 + c.slope(r) * c.slope(r));
    EXPECT_NEAR(nu, std::sqrt(c.a * c.a - r * r) / c.a, 1e-12);
    EXPECT_LE(nu, prev + 1e-15);
    prev = nu;
  }
  EXPECT_NEAR(prev, c.lambda, 1e-12);
}

TEST(NuIdentities, FlatGraphExactlyZero) {
  const auto r = geometry::nu_identity_residuals(flat(3, 0.5), Vec::Zero(3), 1e-3,
                                                 geometry::FramePolicy::accept_degenerate);
  ASSERT_FALSE(r.samples.empty());
  for (const auto& s : r.samples) EXPECT_EQ(s.residual, 0.0);
}

TEST(NuIdentities, FirstIdentityClosedFormOnCap) {
  // With exact derivatives, sum_i u_i^2 / u^2 over a g-orthonormal frame is
  // Du^T g^{-1} Du / u^2.
  const auto c = geometry::exact_cap(3, 1.5, 1.0, 0.0);
  for (double r : {0.1, 0.4, 0.8, 0.99}) {
    const auto jet = c.jet(point3(r, 0, 0));
    const Mat g = geometry::induced_metric(jet);
    const double lhs = jet.grad.dot(g.ldlt().solve(jet.grad)) / (jet.u * jet.u);
    const double nu2 = (c.a * c.a - r * r) / (c.a * c.a);
    EXPECT_NEAR(lhs, 1.0 - nu2, 1e-10);
    const auto rep = geometry::nu_identity_residuals(c.field(), point3(r, 0, 0), 1e-3);
    EXPECT_LE(sup(rep, Identity::nu_first), 1e-7);
  }
}

TEST(NuIdentities, CapSmallAndSecondOrder) {
  const auto c = geometry::exact_cap(3, 1.5, 1.0, 0.01);
  const Vec x = point3(0.3, -0.2, 0.25);
  const auto a = geometry::nu_identity_residuals(c.field(), x, 1e-3,
                                                 geometry::FramePolicy::accept_degenerate);
  const auto b = geometry::nu_identity_residuals(c.field(), x, 5e-4,
                                                 geometry::FramePolicy::accept_degenerate);
  ASSERT_TRUE(a.has(Identity::nu_second));
  double sa = 0, sb = 0;
  for (const auto& s : a.samples) sa = std::max(sa, std::abs(s.residual));
  for (const auto& s : b.samples) sb = std::max(sb, std::abs(s.residual));
  EXPECT_LE(sa, 1e-6);
  EXPECT_GE(std::log2(sa / sb), 1.8);
}

TEST(NuIdentities, StrictPolicyAcceptsExactlyUmbilicPoints) {
  const auto c = geometry::exact_cap(3, 1.5, 1.0, 0.01);
  const auto rep = geometry::nu_identity_residuals(c.field(), point3(0.3, 0.1, 0), 1e-3);
  EXPECT_TRUE(rep.has(Identity::nu_first));
  EXPECT_TRUE(rep.has(Identity::nu_gradient));
  EXPECT_EQ(rep.frame, geometry::FrameStatus::umbilic);
}

TEST(NuIdentities, NearlyRepeatedCurvaturesAreAmbiguous) {
  // Rotational in (x1, x2) off the axis: two principal curvatures differ
  // only at second order in the tilt, far below the gap tolerance.
  const HeightField f = [](const Vec& x) {
    const double t = 1e-9;
    HeightJet j;
    j.u = 1.0 - 0.2 * (x[0] * x[0] + (1 + t) * x[1] * x[1]) - 0.1 * x[2] * x[2];
    j.grad = Vec(3);
    j.grad << -0.4 * x[0], -0.4 * (1 + t) * x[1], -0.2 * x[2];
    j.hess = Mat::Zero(3, 3);
    j.hess.diagonal() << -0.4, -0.4 * (1 + t), -0.2;
    return j;
  };
  const auto rep = geometry::nu_identity_residuals(f, Vec::Zero(3), 1e-3);
  EXPECT_EQ(rep.frame, geometry::FrameStatus::ambiguous);
  EXPECT_TRUE(rep.has(Identity::nu_first));
  EXPECT_FALSE(rep.has(Identity::nu_gradient));
}

TEST(NuIdentities, NonUmbilicConvergesAtSecondOrder) {
  const Vec x = point3(0.1, 0.2, -0.15);
  for (Identity id : {Identity::nu_gradient, Identity::nu_second}) {
    const double a = sup(geometry::nu_identity_residuals(bumpy(), x, 2e-3), id);
    const double b = sup(geometry::nu_identity_residuals(bumpy(), x, 1e-3), id);
    EXPECT_LE(a, 1e-4) << to_string(id);
    EXPECT_GE(std::log2(a / b), 1.8) << to_string(id);
  }
}

TEST(GaussCommutator, CapSectionalCurvature) {
  const auto c = geometry::exact_cap(3, 1.5, 1.0, 0.01);
  const Vec x = point3(0.2, 0.1, -0.3);
  const auto k1 = geometry::sectional_curvatures(c.field(), x, 2e-3);
  const auto k2 = geometry::sectional_curvatures(c.field(), x, 1e-3);
  ASSERT_EQ(k1.size(), 3u);
  double e1 = 0, e2 = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    e1 = std::max(e1, std::abs(k1[i] + 0.5));
    e2 = std::max(e2, std::abs(k2[i] + 0.5));
  }
  EXPECT_LE(e2, 1e-3);
  EXPECT_GE(std::log2(e1 / e2), 1.8);
}

TEST(GaussCommutator, CapResidualsVanish) {
  const auto c = geometry::exact_cap(3, 1.5, 1.0, 0.01);
  const auto rep = geometry::gauss_commutator_residuals(c.field(), point3(0.2, 0.1, -0.3), 1e-3,
                                                        geometry::FramePolicy::accept_degenerate);
  EXPECT_LE(rep.max_abs(Identity::gauss), 1e-3);
  EXPECT_LE(rep.max_abs(Identity::codazzi), 1e-3);
  EXPECT_LE(rep.max_abs(Identity::commutator), 1e-2);
  EXPECT_TRUE(rep.has(Identity::commutator));
}

TEST(GaussCommutator, NonUmbilicConverges) {
  const Vec x = point3(0.1, 0.2, -0.15);
  const auto a = geometry::gauss_commutator_residuals(bumpy(), x, 4e-3);
  const auto b = geometry::gauss_commutator_residuals(bumpy(), x, 2e-3);
  for (Identity id : {Identity::gauss, Identity::codazzi, Identity::commutator}) {
    ASSERT_TRUE(a.has(id)) << to_string(id);
    EXPECT_GE(std::log2(a.max_abs(id) / b.max_abs(id)), 1.8) << to_string(id);
  }
}

TEST(CommutatorRhs, UmbilicFrameVanishes) {
  // h = lambda I with zero second derivatives: both sides are zero.
  const Mat h = 0.7 * Mat::Identity(3, 3);
  const std::vector<double> zero(81, 0.0);
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) EXPECT_NEAR(geometry::commutator_rhs(zero, h, k, l, i, j), 0.0, 1e-15);
}

TEST(CommutatorRhs, ReducesToDiagonalSwap) {
  // h_11ii = h_ii11 + k1^2 ki - k1 ki^2 - k1 + ki in a principal frame.
  Mat h = Mat::Zero(3, 3);
  h.diagonal() << 1.3, 0.6, 0.2;
  std::vector<double> hh(81, 0.0);
  const auto at = [](int k, int l, int i, int j) { return ((k * 3 + l) * 3 + i) * 3 + j; };
  for (int i = 0; i < 3; ++i) hh[at(i, i, 0, 0)] = 0.1 * (i + 1);
  for (int i = 1; i < 3; ++i) {
    const double k1 = h(0, 0), ki = h(i, i);
    const double want = hh[at(i, i, 0, 0)] + k1 * k1 * ki - k1 * ki * ki - k1 + ki;
    EXPECT_NEAR(geometry::commutator_rhs(hh, h, 0, 0, i, i), want, 1e-14);
  }
}
