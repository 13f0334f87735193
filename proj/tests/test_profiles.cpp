#include <gtest/gtest.h>

#include <cmath>

#include "blowlab/profiles.hpp"

using namespace blowlab;

TEST(Profiles, CstarMatchesClosedForm) {
  for (int k = 0; k < 20; ++k) {
    const double a = 0.01 + (0.9 - 0.01) * k / 19.0;
    EXPECT_NEAR(cstar(a) / cstar_closed(a), 1.0, 1e-10) << a;
  }
  EXPECT_NEAR(cstar(1e-9), 2.0 / M_PI, 1e-8);
  EXPECT_NEAR(cstar(0.1), 0.60631, 1e-5);
  EXPECT_NEAR(cstar(0.5), 0.50930, 1e-5);
  EXPECT_THROW(cstar(0.0), ParameterError);
  EXPECT_THROW(cstar(1.0), ParameterError);
}

TEST(Profiles, PointValues) {
  EXPECT_NEAR(eval_profile(ProfileTag::F_star, {1.0, M_PI / 4}, 0.1), 0.1 * std::pow(std::pow(2.0, -1.5), 1.0 / 30),
              1e-14);
  EXPECT_NEAR(eval_profile(ProfileTag::F_star, {1.0, M_PI / 4}, 0.1), 0.09657, 5e-5);
  EXPECT_EQ(eval_profile(ProfileTag::Omega_bar, {2.0, M_PI / 2}, 0.1), 0.0);
  EXPECT_EQ(eval_profile(ProfileTag::F_star, {0.0, 0.3}, 0.1), 0.0);
  for (double y : {1e-3, 0.5, 3.0, 1e4}) {
    const ModPolar p = to_modpolar(0.0, y, 0.1);
    EXPECT_DOUBLE_EQ(eval_profile(ProfileTag::theta_bar, p, 0.1), 1.0);
  }
  EXPECT_THROW(profile_tag("nope"), ParameterError);
  // log-chart evaluators agree with the (R, beta) ones
  const Profile2D p2(0.2);
  const Profile3D p3(0.2, 2.0);
  for (double R : {1e-3, 0.7, 5.0})
    for (double b : {0.01, 0.6, 1.4}) {
      const double t = std::log(R), u = std::log(std::tan(b));
      EXPECT_NEAR(p2.Omega(t, u), eval_profile(ProfileTag::Omega_bar, {R, b}, 0.2), 1e-14);
      EXPECT_NEAR(p2.eta(t, u), eval_profile(ProfileTag::eta_bar, {R, b}, 0.2), 1e-14);
      EXPECT_NEAR(p2.eta_y(t, u) / eval_profile(ProfileTag::eta_bar_y, {R, b}, 0.2), 1.0, 1e-12);
      EXPECT_NEAR(p3.F_star(t, u), eval_profile(ProfileTag::F_star, {R, b}, 0.2, 2.0), 1e-14);
    }
}

TEST(Profiles, EtaYClosedFormEqualsSymbolicDerivative) {
  const double alpha = 0.1;
  const double cs = cstar(alpha);
  const Expr eta = ExprBuilder(alpha).coef(6 * alpha / cs).factor("Gamma").factor("R").factor("1+R", -3).build();
  const Expr dy = eta.dy(alpha);
  for (double R : {0.01, 0.3, 1.0, 2.0, 50.0})
    for (double b : {0.05, 0.5, 1.0, 1.5}) {
      const double ref = dy(R, b);
      EXPECT_NEAR(eval_profile(ProfileTag::eta_bar_y, {R, b}, alpha), ref, 1e-9 * std::abs(ref) + 1e-300);
    }
}

TEST(Profiles, EtaYMatchesFiniteDifference) {
  const double alpha = 0.1;
  const Profile2D p(alpha);
  auto eta_xy = [&](double x, double y) {
    const ModPolar m = to_modpolar(x, y, alpha);
    return eval_profile(ProfileTag::eta_bar, m, alpha);
  };
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double x = 0.05 + 0.037 * k, y = 0.02 + 0.029 * ((k * 7) % 100);
    const double h = 1e-5 * y;
    const double fd = (-eta_xy(x, y + 2 * h) + 8 * eta_xy(x, y + h) - 8 * eta_xy(x, y - h) + eta_xy(x, y - 2 * h)) /
                      (12 * h);
    const ModPolar m = to_modpolar(x, y, alpha);
    const double ex = eval_profile(ProfileTag::eta_bar_y, m, alpha);
    worst = std::max(worst, std::abs(fd - ex) / std::abs(ex));
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(Profiles, RadialFactorDerivative) {
  const Expr f = ExprBuilder().coef(3.0).factor("R").factor("1+R", -2).build();
  const Expr g = f.D_R();
  for (double R : {0.0, 0.5, 1.0, 3.0}) EXPECT_NEAR(g(R, 0.3), 3 * R * (1 - R) / std::pow(1 + R, 3), 1e-15);
  EXPECT_NEAR(g(1.0, 0.3), 0.0, 1e-16);
}

TEST(Profiles, ThetaAndXiConsistent) {
  // xi_bar = d_y theta_bar and eta_bar = d_x theta_bar, checked by finite differences of line integrals
  const double alpha = 0.1;
  const Profile2D p(alpha);
  for (double x : {0.3, 2.0, 40.0})
    for (double y : {0.01, 0.5, 3.0}) {
      const double lx = std::log(x), ly = std::log(y);
      const Jet<2> th = p.theta_jet<2>(lx, ly);
      const Jet<1> xi = p.xi_jet<1>(lx, ly);
      const double h = 1e-4;
      const double fd = (p.theta_jet<0>(lx, std::log(y * (1 + h))).value() -
                         p.theta_jet<0>(lx, std::log(y * (1 - h))).value()) /
                        (2 * h * y);
      EXPECT_NEAR(xi.value(), fd, 1e-7 * std::max(1.0, std::abs(fd)));
      // scaled jet: coef(0,1) = y d_y theta
      EXPECT_NEAR(th.coef(0, 1) / y, xi.value(), 1e-10 * std::max(1.0, std::abs(xi.value())));
      const ModPolar m = to_modpolar(x, y, alpha);
      EXPECT_NEAR(th.coef(1, 0) / x, eval_profile(ProfileTag::eta_bar, m, alpha), 1e-12);
      EXPECT_LE(xi.value(), 0.0);
      EXPECT_GE(th.value(), 1.0);
    }
}

TEST(Profiles, LemmaRatios) {
  const Profile2D p(0.1);
  const auto r00 = profile_deriv_bound_check(p, 0, 0, 21, 21);
  EXPECT_NEAR(r00[0].sup, 1.0, 1e-12);
  const auto r10 = profile_deriv_bound_check(p, 1, 0, 21, 21);
  EXPECT_NEAR(r10[0].sup, 1.0, 1e-4);  // (1-R)/(1+R) -> 1 as R -> 0
  EXPECT_LE(r10[0].sup, 1.0 + 1e-12);
  for (int i = 0; i <= 2; ++i)
    for (int j = 0; i + j <= 3; ++j) {
      const auto r = profile_deriv_bound_check(p, i, j, 21, 21);
      for (const auto& q : r) {
        EXPECT_TRUE(std::isfinite(q.sup)) << q.profile << i << j;
        EXPECT_GT(q.sup, 0.0) << q.profile << i << j;
      }
    }
}
