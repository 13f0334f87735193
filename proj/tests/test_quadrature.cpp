#include <gtest/gtest.h>

#include <cmath>

#include "blowlab/cutoff.hpp"
#include "blowlab/quadrature.hpp"

using namespace blowlab;

TEST(Quadrature, GaussLegendreExactForPolynomials) {
  const GaussRule& g = gauss_legendre(16);
  for (int p = 0; p <= 31; ++p) {
    double s = 0.0;
    for (size_t k = 0; k < g.x.size(); ++k) s += g.w[k] * std::pow(g.x[k], p);
    const double exact = (p % 2 == 1) ? 0.0 : 2.0 / (p + 1);
    EXPECT_NEAR(s, exact, 1e-14) << p;
  }
}

TEST(Quadrature, CutoffTransitionIntegral) {
  // int_1^2 chi = 1/2 by the symmetry chi(s) + chi(3-s) = 1
  const double v = integrate_1d([](double s) { return chi(s); }, 0.0, 3.0, {1.0, 2.0});
  EXPECT_NEAR(v, 1.5, 1e-13);
  // same transition in log variable: int chi(e^v) e^v dv over (-inf, ln 3)
  const double w = integrate_1d([](double l) { return chi_log(l) * std::exp(l); }, -INFINITY, std::log(3.0),
                                {0.0, kLn2});
  EXPECT_NEAR(w, 1.5, 1e-10);
}

TEST(Quadrature, SlowTailsConverge) {
  // int_{-inf}^0 e^{0.02 u} du = 50
  const double v = integrate_1d([](double u) { return std::exp(0.02 * u); }, -INFINITY, 0.0);
  EXPECT_NEAR(v, 50.0, 1e-10);
  const double w = integrate_1d([](double u) { return 1.0 / std::cosh(u); }, -INFINITY, INFINITY);
  EXPECT_NEAR(w, M_PI, 1e-12);
}

TEST(Quadrature, DivergentTailThrows) {
  EXPECT_THROW(integrate_1d([](double) { return 1.0; }, 0.0, INFINITY), DivergentIntegral);
}

TEST(Quadrature, TanhSinhEndpointSingularity) {
  const double a = 0.1;
  const double v = tanh_sinh([&](double z) { return std::pow(z, a); }, 0.0, 1.0, 1e-14);
  EXPECT_NEAR(v, 1.0 / (1.0 + a), 1e-12);
  const double w = tanh_sinh([](double z) { return 1.0 / std::sqrt(z); }, 0.0, 1.0, 1e-14);
  EXPECT_NEAR(w, 2.0, 1e-10);
}
