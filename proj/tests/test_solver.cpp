#include <gtest/gtest.h>

#include <cmath>

#include "blowlab/solver.hpp"

using namespace blowlab;

namespace {

constexpr double kL = 10.0;

double theta0(double x, double y, double A = 1.0) {
  const double w2 = 0.64;
  return A * (std::exp(-(x * x + (y - 2.5) * (y - 2.5)) / w2) - std::exp(-(x * x + (y + 2.5) * (y + 2.5)) / w2));
}

double omega0(double x, double y, double A = 1.0) { return A * 0.5 * OddBump{0.8, 2.0, 0.7, 1.0}(x, y); }

SolverConfig quiet(double horizon, double dt = 0.0) {
  SolverConfig c;
  c.horizon = horizon;
  c.dt = dt;
  c.x_norm_k.clear();
  return c;
}

}  // namespace

TEST(Solver, ZeroDataStaysZero) {
  const BoussinesqSolver S(32, kL, quiet(0.1, 0.02));
  const auto res = S.run(S.initial_fn([](double, double) { return 0.0; }, [](double, double) { return 0.0; }));
  ASSERT_TRUE(res.diag.completed);
  EXPECT_EQ(res.steps, 5);
  for (auto& r : res.diag.rows) {
    EXPECT_EQ(r.grad_theta_inf, 0.0);
    EXPECT_EQ(r.omega_inf, 0.0);
    EXPECT_EQ(r.kinetic, 0.0);
    EXPECT_EQ(r.bkm, 0.0);
  }
  const BkmVerdict v = bkm_verdict(res.diag, 0.1);
  EXPECT_EQ(v.verdict, "bounded");
  EXPECT_EQ(v.bkm, 0.0);
}

TEST(Solver, ParityIsExactAndDealiasingActive) {
  const BoussinesqSolver S(48, kL, quiet(0.1));
  const auto res = S.run(S.initial_fn([](double x, double y) { return omega0(x, y); },
                                      [](double x, double y) { return theta0(x, y); }));
  ASSERT_TRUE(res.diag.completed);
  EXPECT_EQ(res.last.omega.kx, Trig::sine);
  EXPECT_EQ(res.last.omega.ky, Trig::sine);
  EXPECT_EQ(res.last.theta.kx, Trig::cosine);
  EXPECT_EQ(res.last.theta.ky, Trig::sine);
  const Field w = S.omega_field(res.last), th = S.theta_field(res.last);
  for (int i = 0; i <= 48; ++i) {
    EXPECT_EQ(w.at(0, i), 0.0);
    EXPECT_EQ(w.at(i, 0), 0.0);
    EXPECT_EQ(th.at(i, 0), 0.0);
  }
  // modes above two thirds of the spectrum stay empty
  const SpectralBox& sb = S.box();
  for (int a = 0; a <= 48; ++a)
    for (int b = 0; b <= 48; ++b)
      if (a > 32 || b > 32) {
        EXPECT_EQ(res.last.omega.c[sb.idx(a, b)], 0.0);
      }
}

TEST(Solver, TransportInvariantsAndBkmConsistency) {
  const BoussinesqSolver S(128, kL, quiet(0.2));
  const auto res = S.run(S.initial_fn([](double x, double y) { return omega0(x, y); },
                                      [](double x, double y) { return theta0(x, y); }));
  ASSERT_TRUE(res.diag.completed);
  const DiagRow &a = res.diag.rows.front(), &b = res.diag.rows.back();
  EXPECT_LE(std::abs(b.theta_max - a.theta_max), 1e-3);
  EXPECT_LE(std::abs(b.theta_min - a.theta_min), 1e-3);
  EXPECT_LE(std::abs(b.theta_l2 - a.theta_l2), 1e-4);
  EXPECT_LE(energy_balance_residual(res.diag), 1e-3);
  double bkm = 0.0;
  for (size_t k = 1; k < res.diag.rows.size(); ++k) {
    const auto &p = res.diag.rows[k - 1], &r = res.diag.rows[k];
    bkm += 0.5 * (r.t - p.t) * (r.grad_theta_inf + p.grad_theta_inf);
    EXPECT_NEAR(r.bkm, bkm, 1e-12 * bkm);
    EXPECT_GE(r.bkm, p.bkm);
  }
}

TEST(Solver, CflViolationProposesTimeStep) {
  const BoussinesqSolver S(64, kL, quiet(0.5));
  const auto s = S.initial_fn([](double x, double y) { return omega0(x, y, 8.0); },
                              [](double x, double y) { return theta0(x, y); });
  const double limit = S.cfl_dt(s);
  try {
    S.step(s, 2.0 * limit);
    FAIL() << "expected a CFL error";
  } catch (const ParameterError& e) {
    EXPECT_NE(std::string(e.what()).find("use dt <="), std::string::npos);
  }
  EXPECT_NO_THROW(S.step(s, 0.5 * limit));
}

TEST(Solver, TransportReversalRecoversTheta) {
  SolverConfig fwd = quiet(0.2, 0.01);
  fwd.transport_only = true;
  SolverConfig back = fwd;
  back.velocity_sign = -1.0;
  const BoussinesqSolver F(96, kL, fwd), B(96, kL, back);
  const auto s0 = F.initial_fn([](double x, double y) { return omega0(x, y, 2.0); },
                               [](double x, double y) { return theta0(x, y); });
  auto mid = F.run(s0).last;
  mid.t = 0.0;
  const auto end = B.run(mid).last;
  double err = 0.0;
  const auto a = F.box().synthesize(s0.theta), b = F.box().synthesize(end.theta);
  for (size_t k = 0; k < a.size(); ++k) err = std::max(err, std::abs(a[k] - b[k]));
  EXPECT_LE(err, 1e-4);
}

TEST(Solver, HalfResolutionRunAgrees) {
  auto w = [](double x, double y) { return omega0(x, y); };
  auto z = [](double, double) { return 0.0; };
  const BoussinesqSolver C(64, kL, quiet(0.1, 0.01)), Fn(128, kL, quiet(0.1, 0.005));
  const auto c = C.run(C.initial_fn(w, z)).last, f = Fn.run(Fn.initial_fn(w, z)).last;
  EXPECT_LE(spectral_distance(C.box(), c.omega, Fn.box(), f.omega), 1e-5);
}

TEST(Solver, BkmIncreasesWithAmplitude) {
  double prev = 0.0;
  for (double A : {1.0, 2.0, 4.0}) {
    const BoussinesqSolver S(64, kL, quiet(0.1, 0.005));
    const auto res = S.run(S.initial_fn([A](double x, double y) { return omega0(x, y, A); },
                                        [A](double x, double y) { return theta0(x, y, A); }));
    ASSERT_TRUE(res.diag.completed);
    const double bkm = res.diag.rows.back().bkm;
    EXPECT_GT(bkm, prev);
    prev = bkm;
  }
}

TEST(Solver, VerdictTracksXSigmaGrowth) {
  SolverConfig cfg = quiet(0.05, 0.01);
  cfg.x_norm_k = {0, 1};
  const BoussinesqSolver S(48, kL, cfg);
  const auto res = S.run(S.initial_fn([](double x, double y) { return omega0(x, y); },
                                      [](double x, double y) { return theta0(x, y); }));
  ASSERT_EQ(res.diag.xnorms.size(), 4u);
  const BkmVerdict v = bkm_verdict(res.diag, 0.05);
  EXPECT_EQ(v.verdict, "bounded");
  EXPECT_GT(v.x_growth, 0.5);
  EXPECT_LT(v.x_growth, 2.0);
  // a run that did not reach the horizon is inconclusive
  Diagnostics partial = res.diag;
  partial.completed = false;
  EXPECT_EQ(bkm_verdict(partial, 0.05).verdict, "inconclusive");
}

TEST(Solver, PreparedBoxDataRespectsWallAndWindow) {
  const SpectralBox sb(64, kL);
  BoxPrep prep;
  prep.window = 0.3;
  const auto [w, th] = prepare_box_data(
      sb, [](double x, double y) { return std::sin(x) * y; }, [](double, double) { return 1.0; }, prep);
  EXPECT_EQ(w.parity, Parity::sin_sin);
  EXPECT_EQ(th.parity, Parity::cos_sin);
  const BoxGrid g = sb.grid();
  for (int i = 0; i <= 64; ++i) EXPECT_EQ(th.at(i, 0), 0.0);
  // beyond the window and the mollifier tail the data is negligible
  for (int i = 0; i <= 64; ++i)
    for (int j = 0; j <= 64; ++j)
      if (std::hypot(g.x(i), g.x(j)) > 2.0 * 0.3 * kL + 1.0) {
        EXPECT_LE(std::abs(th.at(i, j)), 1e-6);
      }
  double inner = 0.0;
  for (int i = 0; i <= 10; ++i) inner = std::max(inner, th.at(i, 16));
  EXPECT_GT(inner, 0.9);
}

TEST(Solver, DiagnosticsCsvShape) {
  const BoussinesqSolver S(32, kL, quiet(0.02, 0.01));
  const auto res = S.run(S.initial_fn([](double x, double y) { return omega0(x, y); },
                                      [](double x, double y) { return theta0(x, y); }));
  const std::string csv = res.diag.to_csv();
  EXPECT_EQ(csv.rfind("t,grad_theta_inf,omega_inf,omega_L2,omega_L4,theta_min", 0), 0u);
  size_t lines = 0;
  for (size_t p = csv.find("\r\n"); p != std::string::npos; p = csv.find("\r\n", p + 2)) ++lines;
  EXPECT_EQ(lines, res.diag.rows.size() + 1);
}
