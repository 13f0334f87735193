// Acceptance suite: one PASS/FAIL line per criterion, with the measured numbers and the
// wall time against its budget. Exit status is 0 only if every criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "blowlab/biotsavart.hpp"
#include "blowlab/holder.hpp"
#include "blowlab/operators.hpp"
#include "blowlab/perturbation.hpp"
#include "blowlab/profiles.hpp"
#include "blowlab/solver.hpp"

using namespace blowlab;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget;  // seconds
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string g(double v) { return fmt("%.4g", v); }

bool within(double a, double b, double tol) { return std::abs(a / b - 1.0) <= tol; }

PerturbParams params(double alpha, double eps, double M, double delta = 0.1) {
  PerturbParams p;
  p.alpha = alpha;
  p.epsilon = eps;
  p.M = M;
  p.delta = delta;
  return p;
}

Outcome c1_cstar() {
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double a = 0.01 + (0.9 - 0.01) * i / 19.0;
    worst = std::max(worst, std::abs(cstar(a) / cstar_closed(a) - 1.0));
  }
  return {worst <= 1e-10, "max rel err " + g(worst) + " (<= 1e-10)"};
}

Outcome c2_partition() {
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double t = std::log(1e-6) + (std::log(1e6) - std::log(1e-6)) * i / 999.0;
    worst = std::max(worst, std::abs(partition_sum(t) - 1.0));
  }
  return {worst <= 1e-12, "max |sum Phi_i - 1| " + g(worst) + " (<= 1e-12)"};
}

Outcome c3_mu() {
  const Build3D b = build_F_tilde_3d(params(0.1, 0.05, 64), PolarGrid::make(512, 256));
  const double r = std::abs(b.L_F0) / std::abs(b.L_F1);
  return {r <= 1e-6 && std::isfinite(b.L_F0_grid),
          "|L(F~0)|/|L(F~1)| " + g(r) + " (<= 1e-6), mu " + g(b.mu) + ", grid mu " + g(b.mu_grid)};
}

Outcome c4_sweep3d() {
  const Sweep3D s = sweep_3d({0.05, 0.1, 0.2}, {0.1, 0.05, 0.025}, {16, 64, 256});
  const bool ok = s.C_max <= 100.0 && s.monotone_eps && s.monotone_M;
  return {ok, "fitted C (max ratio) " + g(s.C_max) + " (<= 100), least squares C " + g(s.C_ls) +
                  ", monotone in eps " + (s.monotone_eps ? "yes" : "no") + ", in 1/M " + (s.monotone_M ? "yes" : "no")};
}

Outcome c5_energy2d() {
  const Smallness2D a = smallness_2d(Boussinesq2D(params(0.1, 0.05, 64, 0.1)));
  const Smallness2D b = smallness_2d(Boussinesq2D(params(0.1, 0.025, 64, 0.05)));
  // a divergent E has no finite sum of squares; the identity is then checked on the finite remainder
  const EnergyReport& sa = a.divergent() ? a.E_partial : a.E;
  const EnergyReport& sb = b.divergent() ? b.E_partial : b.E;
  const double ida = sa.identity_residual(), idb = sb.identity_residual();
  const bool ok = std::isfinite(a.E.E) && std::isfinite(b.E.E) && b.E.E < a.E.E && ida <= 1e-10 && idb <= 1e-10;
  std::string d = "E(0.05, 0.1) " + g(a.E.E) + ", E(0.025, 0.05) " + g(b.E.E) + ", identity residuals " + g(ida) +
                  ", " + g(idb) + " (<= 1e-10)";
  if (a.divergent() || b.divergent())
    d += "; divergent part " + (a.divergent() ? a.divergence : b.divergence) + "; E(Omega~0, eta~0, I3+I4) " +
         g(a.E_partial.E) + ", " + g(b.E_partial.E);
  return {ok, d};
}

Outcome c6_fbound() {
  const PerturbParams p = params(0.1, 0.05, 64, 0.1);
  const Boussinesq2D B(p);
  double worst = 0.0;
  for (int i = 1; i <= 200; ++i) {
    const double y = 2.0 * p.delta * i / 200.0;
    worst = std::max(worst, std::abs(B.F_jet(std::log(y)).value()));
  }
  const double bound = p.alpha * p.alpha + p.epsilon;
  return {worst <= bound, "max |f - 1| " + g(worst) + " (<= " + g(bound) + ")"};
}

Outcome c7_jidentities() {
  const auto pts = j_sample_points();
  double wg = 0.0;
  for (const TestFunction& f : gaussian_test_family()) {
    const JResidual r = J_identity_residual(f, pts, {0.2});
    wg = std::max({wg, r.dR, r.dbeta});
  }
  const JResidual e = J_identity_residual(eta_bar_test_function(0.2), pts, {0.2});
  const double we = std::max(e.dR, e.dbeta);
  return {wg <= 1e-4 && we <= 1e-3, "Gaussian family " + g(wg) + " (<= 1e-4), eta_bar " + g(we) + " (<= 1e-3)"};
}

Outcome c8_interp_product() {
  const FamilyConstants a = family_constants(1, 100, 1, 2, 0.3, 0.5, 2.0, 1, 0.3);
  const FamilyConstants b = family_constants(2, 100, 1, 2, 0.3, 0.5, 2.0, 1, 0.3);
  const bool finite = std::isfinite(a.interp_weighted) && std::isfinite(a.product) && std::isfinite(b.interp_weighted) &&
                      std::isfinite(b.product) && std::isfinite(a.interp_unweighted) && std::isfinite(b.interp_unweighted);
  const bool ok = finite && within(b.interp_unweighted, a.interp_unweighted, 0.2) &&
                  within(b.interp_weighted, a.interp_weighted, 0.2) && within(b.product, a.product, 0.2);
  return {ok, "interpolation " + g(a.interp_unweighted) + "/" + g(b.interp_unweighted) + ", weighted " +
                  g(a.interp_weighted) + "/" + g(b.interp_weighted) + ", product " + g(a.product) + "/" + g(b.product) +
                  " (seeds 1/2, within 20%)"};
}

Outcome c9_biot_savart() {
  const ManufacturedErrors a = manufactured_check(256), b = manufactured_check(512);
  const bool ok = a.psi_err <= 1e-6 && b.psi_err <= 1e-8 && a.u_err <= 1e-6;
  return {ok, "stream err 256^2 " + g(a.psi_err) + ", 512^2 " + g(b.psi_err) + ", velocity err 256^2 " + g(a.u_err)};
}

Outcome c10_velocity() {
  double r[2][2];
  for (int s = 0; s < 2; ++s) {
    VelocityOptions o;
    o.pairs.seed = s + 1;
    const auto rep = verify_velocity_estimates(odd_bump_family(s + 1, 20), 2.0, {0, 1}, 0.5, o);
    for (int k = 0; k < 2; ++k) r[s][k] = rep[k].max_ratio;
  }
  const bool ok = std::isfinite(r[0][0]) && std::isfinite(r[0][1]) && within(r[1][0], r[0][0], 0.2) &&
                  within(r[1][1], r[0][1], 0.2);
  return {ok, "max ratio k=0 " + g(r[0][0]) + "/" + g(r[1][0]) + ", k=1 " + g(r[0][1]) + "/" + g(r[1][1]) +
                  " (seeds 1/2, within 20%)"};
}

double theta_data(double x, double y) {
  const double w2 = 0.64;
  return std::exp(-(x * x + (y - 2.5) * (y - 2.5)) / w2) - std::exp(-(x * x + (y + 2.5) * (y + 2.5)) / w2);
}
double omega_data(double x, double y) { return 0.5 * OddBump{0.8, 2.0, 0.7, 1.0}(x, y); }

Outcome c11_solver() {
  SolverConfig cfg;
  cfg.horizon = 0.5;
  cfg.x_norm_k = {0, 1};
  const BoussinesqSolver S(256, 10.0, cfg);
  const auto res = S.run(S.initial_fn(omega_data, theta_data));
  if (!res.diag.completed) return {false, "run stopped: " + res.diag.termination};
  const DiagRow &a = res.diag.rows.front(), &b = res.diag.rows.back();
  const double dmin = std::abs(b.theta_min - a.theta_min), dmax = std::abs(b.theta_max - a.theta_max);
  const double dl2 = std::abs(b.theta_l2 - a.theta_l2);
  // parity: the stored representation must vanish exactly on the wall and on the axis
  const Field w = S.omega_field(res.last), th = S.theta_field(res.last);
  bool parity = res.last.omega.kx == Trig::sine && res.last.omega.ky == Trig::sine &&
                res.last.theta.kx == Trig::cosine && res.last.theta.ky == Trig::sine;
  for (int i = 0; i <= 256; ++i) parity = parity && w.at(0, i) == 0.0 && w.at(i, 0) == 0.0 && th.at(i, 0) == 0.0;
  const double eres = energy_balance_residual(res.diag);
  const BkmVerdict v = bkm_verdict(res.diag, cfg.horizon);
  const ConvergenceReport cr = self_convergence(96, 10.0, 0.1, 0.5, omega_data, theta_data);
  const bool ok = dmin <= 1e-3 && dmax <= 1e-3 && dl2 <= 1e-4 && parity && cr.order >= 3.5 && eres <= 1e-3 &&
                  std::isfinite(v.bkm);
  return {ok, "theta min/max drift " + g(dmin) + "/" + g(dmax) + ", L2 drift " + g(dl2) + ", parity " +
                  (parity ? "exact" : "broken") + ", order " + fmt("%.2f", cr.order) + ", energy residual " + g(eres) +
                  ", BKM integral " + g(v.bkm) + " (" + v.verdict + ")"};
}

Outcome c12_xsigma() {
  bool ok = true;
  std::string d;
  for (int k : {1, 2}) {
    const XSigmaGrowth x = x_sigma_growth_3d(params(0.1, 0.05, 64), k, {0.1, 0.05, 0.025});
    ok = ok && x.finite && x.spread <= 5.0;
    d += (d.empty() ? "" : ", ") + std::string("k=") + std::to_string(k) + " spread " + g(x.spread);
  }
  return {ok, d + " (<= 5)"};
}

}  // namespace

int main() {
  const std::vector<Criterion> all{
      {1, "c_* closed form", 1.0, c1_cstar},
      {2, "partition of unity", 1.0, c2_partition},
      {3, "mu-correction", 30.0, c3_mu},
      {4, "3D smallness envelope", 600.0, c4_sweep3d},
      {5, "2D energy envelope", 900.0, c5_energy2d},
      {6, "f(y) bound", 60.0, c6_fbound},
      {7, "J identities", 60.0, c7_jidentities},
      {8, "interpolation and product constants", 300.0, c8_interp_product},
      {9, "Biot-Savart manufactured solution", 30.0, c9_biot_savart},
      {10, "velocity estimates", 300.0, c10_velocity},
      {11, "Boussinesq solver", 600.0, c11_solver},
      {12, "X_sigma growth", 600.0, c12_xsigma},
  };
  int failed = 0;
  for (const Criterion& c : all) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = sec <= c.budget;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("[%s] %2d %s: %s; %.1f s of %.0f s%s\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(), o.detail.c_str(),
                sec, c.budget, in_time ? "" : " (over budget)");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(all.size()) - failed, all.size());
  return failed == 0 ? 0 : 1;
}
