#include <gtest/gtest.h>

#include <cmath>

#include "blowlab/coords.hpp"
#include "blowlab/cutoff.hpp"
#include "blowlab/jet.hpp"

using namespace blowlab;
using J4 = Jet<4>;

TEST(Jet, ProductAndExpMatchClosedForm) {
  const double x0 = 0.3, y0 = -0.7;
  J4 x = J4::variable(x0, 0), y = J4::variable(y0, 1);
  J4 f = exp(x * y) * x;
  // d/dx d/dy of x e^{xy} = e^{xy} (2x + x^2 y)
  const double e = std::exp(x0 * y0);
  EXPECT_NEAR(f.derivative(1, 1), e * (2 * x0 + x0 * x0 * y0), 1e-13);
  // d^2/dy^2 = x^3 e^{xy}
  EXPECT_NEAR(f.derivative(0, 2), x0 * x0 * x0 * e, 1e-13);
  // d^4/dx^4 of x e^{xy} = e^{xy}(4 y^3 + x y^4)
  EXPECT_NEAR(f.derivative(4, 0), e * (4 * std::pow(y0, 3) + x0 * std::pow(y0, 4)), 1e-12);
}

TEST(Jet, DivisionLogPowAtan) {
  const double x0 = 1.7;
  J4 x = J4::variable(x0, 0);
  J4 r = 1.0 / (1.0 + x * x);
  J4 a = atan(x);
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(a.derivative(k + 1, 0), r.derivative(k, 0), 1e-12);
  J4 l = log(pow(x, 2.5));
  EXPECT_NEAR(l.derivative(1, 0), 2.5 / x0, 1e-13);
  EXPECT_NEAR(l.derivative(3, 0), 2.5 * 2 / std::pow(x0, 3), 1e-12);
  J4 s = sin(x) * sin(x) + cos(x) * cos(x);
  EXPECT_NEAR(s.value(), 1.0, 1e-15);
  for (int k = 1; k <= 4; ++k) EXPECT_NEAR(s.derivative(k, 0), 0.0, 1e-12);
}

TEST(Jet, SoftplusAndLog1pStayAccurateAtExtremes) {
  Jet<2> t = Jet<2>::variable(800.0, 0);
  Jet<2> s = softplus(t);
  EXPECT_DOUBLE_EQ(s.value(), 800.0);
  EXPECT_NEAR(s.derivative(1, 0), 1.0, 1e-15);
  Jet<2> m = softplus(Jet<2>::variable(-800.0, 0));
  EXPECT_GE(m.value(), 0.0);
  EXPECT_TRUE(std::isfinite(m.derivative(2, 0)));
}

TEST(Cutoff, PlateauSupportMonotoneAndSymmetric) {
  EXPECT_EQ(chi(0.3), 1.0);
  EXPECT_EQ(chi(1.0), 1.0);
  EXPECT_EQ(chi(2.0), 0.0);
  EXPECT_EQ(chi(7.0), 0.0);
  double prev = 1.0;
  for (int k = 1; k < 200; ++k) {
    const double s = 1.0 + k / 200.0;
    const double v = chi(s);
    EXPECT_LE(v, prev);
    EXPECT_NEAR(v + chi(3.0 - s), 1.0, 1e-14);
    prev = v;
  }
}

TEST(Cutoff, JetDerivativesMatchFiniteDifferences) {
  const double s0 = 1.37, h = 1e-4;
  Jet<3> c = chi(Jet<3>::variable(s0, 0));
  const double fd1 = (chi(s0 + h) - chi(s0 - h)) / (2 * h);
  const double fd2 = (chi(s0 + h) - 2 * chi(s0) + chi(s0 - h)) / (h * h);
  EXPECT_NEAR(c.derivative(1, 0), fd1, 1e-7);
  EXPECT_NEAR(c.derivative(2, 0), fd2, 1e-5);
}

TEST(Cutoff, DyadicPartitionSumsToOne) {
  for (double t = -20.0; t < 5.0; t += 0.0137) {
    double sum = 0.0;
    for (int i = 0; i <= 40; ++i) sum += dyadic_phi(i, t);
    EXPECT_NEAR(sum, 1.0, 1e-14) << "t=" << t;
    std::vector<int> act;
    active_dyadic(t, 40, act);
    double sum_active = 0.0;
    for (int i : act) sum_active += dyadic_phi(i, t);
    EXPECT_NEAR(sum_active, 1.0, 1e-14) << "t=" << t;
  }
}

TEST(Cutoff, DyadicSupport) {
  // Phi_i supported on (2^{-i}, 2^{2-i})
  for (int i = 1; i < 10; ++i) {
    EXPECT_EQ(dyadic_phi(i, (-i) * kLn2 - 1e-9), 0.0);
    EXPECT_EQ(dyadic_phi(i, (2 - i) * kLn2 + 1e-9), 0.0);
    EXPECT_GT(dyadic_phi(i, (1 - i) * kLn2), 0.99);
  }
}
