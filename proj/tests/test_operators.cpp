#include <gtest/gtest.h>

#include <cmath>

#include "blowlab/operators.hpp"

using namespace blowlab;

namespace {

// f = R e^{-R} times an angular factor; int_0^inf e^{-R} dR = 1 gives closed forms.
auto no_breaks = [](double, std::vector<double>& b) { b.assign({0.0}); };

}  // namespace

TEST(Operators, LFunctionalClosedFormsAnalytic) {
  auto f2 = [](double t, double u) { return std::exp(t - std::exp(t)) * sin2_beta(u); };
  auto ub = no_breaks;
  Integral a = L_functional_fn(f2, LKind::L2D12, 0.0, {-2.0, 0.0, 2.0}, ub);
  EXPECT_NEAR(a.value, M_PI / 4, 1e-12);
  auto f3 = [](double t, double) { return std::exp(t - std::exp(t)); };
  Integral b = L_functional_fn(f3, LKind::L3D12, 0.0, {-2.0, 0.0, 2.0}, ub);
  EXPECT_NEAR(b.value, 1.0, 1e-12);
  // lower limit: int_z^inf e^{-R} dR = e^{-z}
  Integral c = L_functional_fn(f3, LKind::L3D12, 0.5, {0.0, 2.0}, ub);
  EXPECT_NEAR(c.value, std::exp(-0.5), 1e-12);
}

TEST(Operators, LFunctionalClosedFormsGrid) {
  const PolarGrid g = PolarGrid::make(512, 256, std::exp(-30.0), std::exp(6.0));
  const Field f2 = sample_polar(g, [](double t, double u) { return std::exp(t - std::exp(t)) * sin2_beta(u); }, 0.1);
  EXPECT_NEAR(L_functional(f2, LKind::L2D12).value, M_PI / 4, 1e-6);
  const Field f3 = sample_polar(g, [](double t, double) { return std::exp(t - std::exp(t)); }, 0.1);
  EXPECT_NEAR(L_functional(f3, LKind::L3D12).value, 1.0, 1e-6);
  EXPECT_NEAR(L_functional(f3, LKind::L3D12, 0.5).value, std::exp(-0.5), 1e-6);
  // beyond the grid the domain is empty
  EXPECT_EQ(L_functional(f3, LKind::L3D12, 1e9).value, 0.0);
  // L is linear
  Field s = f2;
  for (size_t k = 0; k < s.values.size(); ++k) s.values[k] = 2.0 * f2.values[k] - 3.0 * f3.values[k];
  const double lin = 2.0 * L_functional(f2, LKind::L2D12).value - 3.0 * L_functional(f3, LKind::L2D12).value;
  EXPECT_NEAR(L_functional(s, LKind::L2D12).value, lin, 1e-12);
  // non-increasing in z for f >= 0
  double prev = INFINITY;
  for (double z : {0.0, 1e-3, 0.1, 0.5, 1.0, 3.0, 10.0}) {
    const double v = L_functional(f3, LKind::L2D12, z).value;
    EXPECT_LE(v, prev + 1e-12);
    prev = v;
  }
}

TEST(Operators, LFunctionalDivergence) {
  const PolarGrid g = PolarGrid::make(128, 64, 1e-6, 1e6);
  const Field one = sample_polar(g, [](double, double) { return 1.0; }, 0.1);
  EXPECT_THROW(L_functional(one, LKind::L2D12), DivergentIntegral);
  auto f = [](double, double) { return 1.0; };
  auto ub = no_breaks;
  EXPECT_THROW(L_functional_fn(f, LKind::L2D12, 0.0, {0.0}, ub), DivergentIntegral);
}

TEST(Operators, JExamples) {
  auto lin = [](double z, double) { return z; };
  auto sep = [](double z, double y) { return z * y; };
  for (auto [x, y] : j_sample_points()) {
    EXPECT_NEAR(J_apply(lin, x, y), x / 2, 1e-13 * x);
    EXPECT_NEAR(J_apply(sep, x, y), x * y / 2, 1e-13 * x * y);
  }
  EXPECT_THROW(J_apply(lin, 0.0, 1.0), DomainError);
  EXPECT_THROW(J_apply(lin, -1.0, 1.0), DomainError);
}

TEST(Operators, ThetaBarReconstruction) {
  const double alpha = 0.1;
  const Profile2D p(alpha);
  auto eta = [&](double z, double y) {
    auto [t, u] = tu_from_log(std::log(z), std::log(y), alpha);
    return p.eta(t, u);
  };
  JContext ctx{alpha};
  for (double x : {0.01, 0.3, 1.0, 4.0, 100.0})
    for (double y : {1e-3, 0.2, 1.0, 7.0}) {
      const ModPolar mp = to_modpolar(x, y, alpha);
      const double ref = eval_profile(ProfileTag::theta_bar, mp, alpha);
      EXPECT_NEAR(1.0 + x * J_apply(eta, x, y, ctx), ref, 1e-7) << x << " " << y;
    }
}

TEST(Operators, JOnFieldMatchesCallable) {
  const double alpha = 0.2;
  const Profile2D p(alpha);
  const PolarGrid g = PolarGrid::make(512, 256, 1e-8, 1e8);
  const Field f = sample_polar(
      g, [&](double t, double u) { return p.eta(t, u); }, alpha, "eta_bar");
  auto eta = [&](double z, double y) {
    auto [t, u] = tu_from_log(std::log(z), std::log(y), alpha);
    return p.eta(t, u);
  };
  JContext ctx{alpha};
  for (auto [x, y] : j_sample_points(4, 3)) {
    const double ref = J_apply(eta, x, y, ctx);
    EXPECT_NEAR(J_apply(f, x, y, ctx), ref, 1e-5 * std::abs(ref)) << x << " " << y;
  }
}

TEST(Operators, JAveragingBound) {
  auto f = [](double z, double y) { return z * y * std::exp(-z * z - y * y); };
  const double sup = 0.5 * std::exp(-1.0);
  for (auto [x, y] : j_sample_points()) EXPECT_LE(J_apply(f, x, y), sup + 1e-15);
}

TEST(Operators, JIdentitiesGaussianFamily) {
  const auto pts = j_sample_points();
  for (double alpha : {0.1, 0.2, 0.5}) {
    for (const TestFunction& f : gaussian_test_family()) {
      const JResidual r = J_identity_residual(f, pts, {alpha});
      EXPECT_EQ(r.points, 50);
      EXPECT_LE(r.dR, 1e-5) << f.name << " alpha " << alpha;
      EXPECT_LE(r.dbeta, 1e-5) << f.name << " alpha " << alpha;
    }
  }
}

TEST(Operators, JIdentitiesZeroAndEtaBar) {
  const auto pts = j_sample_points();
  const TestFunction zero = make_test_function("zero", [](const auto& z, const auto&) { return 0.0 * z; });
  const JResidual r0 = J_identity_residual(zero, pts, {0.2});
  EXPECT_EQ(r0.dR, 0.0);
  EXPECT_EQ(r0.dbeta, 0.0);
  const JResidual r = J_identity_residual(eta_bar_test_function(0.2), pts, {0.2});
  EXPECT_LE(r.dR, 1e-4);
  EXPECT_LE(r.dbeta, 1e-4);
  const TestFunction bad = make_test_function("y", [](const auto& z, const auto& y) { return y + 0.0 * z; });
  EXPECT_THROW(J_identity_residual(bad, pts, {0.2}), DomainError);
}

TEST(Operators, RemarkBoundFinite) {
  const RemarkBound rb = remark_bound(0.1, 21, 21);
  EXPECT_TRUE(std::isfinite(rb.C));
  EXPECT_GT(rb.C, 0.0);
  EXPECT_EQ(rb.samples, 441);
}
