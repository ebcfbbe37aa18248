#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "plateau/domain.hpp"
#include "plateau/error.hpp"

using namespace plateau;
using solver::DomainSpec;
using Vec = Eigen::VectorXd;

namespace {

Vec dir(std::initializer_list<double> v) {
  Vec d(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (double x : v) d[i++] = x;
  return d.normalized();
}

}  // namespace

TEST(Domain, Ball) {
  const auto b = DomainSpec::ball(3, 2.0);
  EXPECT_EQ(b.kind(), solver::DomainKind::ball);
  EXPECT_EQ(b.n(), 3);
  EXPECT_NEAR(b.support(dir({1, 2, 3})), 2.0, 1e-15);
  EXPECT_NEAR(b.boundary_mean_curvature_min(), 1.0, 1e-12);  // (n-1)/R
  EXPECT_EQ(b.label(), "ball3d(2)");
  EXPECT_TRUE(b.contains(dir({1, 0, 0}) * 1.99));
  EXPECT_FALSE(b.contains(dir({1, 0, 0}) * 2.01));
}

TEST(Domain, EllipsoidSupportAndCurvature) {
  const auto e = DomainSpec::ellipsoid({1.3, 1.0, 1.0});
  EXPECT_EQ(e.label(), "ellipsoid(1.3,1,1)");
  EXPECT_NEAR(e.support(dir({1, 0, 0})), 1.3, 1e-14);
  EXPECT_NEAR(e.support(dir({0, 1, 0})), 1.0, 1e-14);
  EXPECT_NEAR(e.min_support(), 1.0, 1e-12);
  EXPECT_NEAR(e.max_support(), 1.3, 1e-12);
  // Along the short axes the principal curvatures are 1.3^-2 and 1.
  EXPECT_GT(e.boundary_mean_curvature_min(), 0.0);
  EXPECT_LE(e.boundary_mean_curvature_min(), 1.0 / 1.69 + 1.0 + 1e-9);
  const Vec d = dir({1, 1, 0});
  const double rho = e.support(d);
  const Vec p = rho * d;
  EXPECT_NEAR(p[0] * p[0] / 1.69 + p[1] * p[1], 1.0, 1e-12);
}

TEST(Domain, SupportJetMatchesFiniteDifferences) {
  const auto e = DomainSpec::ellipsoid({1.3, 1.0, 0.8});
  const Vec d = dir({0.3, -0.5, 0.8});
  const auto jet = e.support_jet(d);
  EXPECT_NEAR(jet.value, e.support(d), 1e-14);
  // The gradient is tangential and matches a directional difference.
  const Vec t = (Vec(3) << 0.5, 0.3, 0.0).finished().normalized();
  const Vec tan = (t - t.dot(d) * d).normalized();
  const double h = 1e-6;
  const double fd = (e.support((d + h * tan).normalized()) - e.support((d - h * tan).normalized())) / (2 * h);
  EXPECT_NEAR(jet.gradient.dot(tan), fd, 1e-7);
}

TEST(Domain, StarShapedInterpolatesSamples) {
  std::vector<double> rho;
  for (int j = 0; j < 16; ++j) rho.push_back(1.0 + 0.1 * std::cos(2 * std::numbers::pi * j / 16.0));
  const auto s = DomainSpec::star_shaped(rho);
  EXPECT_EQ(s.n(), 2);
  for (int j = 0; j < 16; ++j) {
    const double th = 2 * std::numbers::pi * j / 16.0;
    EXPECT_NEAR(s.support(dir({std::cos(th), std::sin(th)})), rho[j], 1e-12);
  }
  EXPECT_GT(s.boundary_mean_curvature_min(), 0.0);
}

TEST(Domain, DentedStarHasNegativeCurvature) {
  std::vector<double> rho;
  for (int j = 0; j < 32; ++j) rho.push_back(1.0 + 0.35 * std::cos(3 * 2 * std::numbers::pi * j / 32.0));
  EXPECT_LT(DomainSpec::star_shaped(rho).boundary_mean_curvature_min(), 0.0);
}

TEST(Domain, RejectsBadParameters) {
  EXPECT_THROW(DomainSpec::ball(1, 1.0), Error);
  EXPECT_THROW(DomainSpec::ball(3, 0.0), Error);
  EXPECT_THROW(DomainSpec::ellipsoid({1.0}), Error);
  EXPECT_THROW(DomainSpec::ellipsoid({1.0, -1.0}), Error);
  EXPECT_THROW(DomainSpec::star_shaped({1.0, 1.0}), Error);
  EXPECT_THROW(DomainSpec::star_shaped({1.0, 0.0, 1.0, 1.0}), Error);
}
