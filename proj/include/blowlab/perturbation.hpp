#pragma once
// Initial-data constructions: cutoff stacks on the dyadic partition, the 3D perturbation
// F~0 = F~1 + mu F~2 with its functional correction, and the 2D Boussinesq perturbation
// (Omega~0, eta~0, xi~0, theta~0) built from eta_hat and the boundary profile f(y).
//
// Everything is carried by (t, u) = (log R, log tan beta) templates so that norms can be
// taken on the analytic functions with exact jet derivatives. The angular scales
// lambda_i eps reach 2^{-12 i / alpha} and are only ever handled through their logs.

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <nlohmann/json.hpp>
#include <string>
#include <thread>
#include <vector>

#include "blowlab/coords.hpp"
#include "blowlab/cutoff.hpp"
#include "blowlab/error.hpp"
#include "blowlab/grid.hpp"
#include "blowlab/holder.hpp"
#include "blowlab/jet.hpp"
#include "blowlab/lineint.hpp"
#include "blowlab/norms.hpp"
#include "blowlab/operators.hpp"
#include "blowlab/polarquad.hpp"
#include "blowlab/profiles.hpp"

namespace blowlab {

/// Largest dyadic index considered; Phi_i vanishes for R below 2^{-kMaxDyadic}.
inline constexpr int kMaxDyadic = 4000;
/// log(x/y) below which theta_bar uses its small-angle leading term.
inline constexpr double kThetaSeriesLog = -24.0;
/// Smallest log y at which scaled y-jets can still be divided by y.
inline constexpr double kMinLogY = -700.0;

struct PerturbParams {
  double alpha = 0.1;
  double epsilon = 0.05;
  double M = 64.0;
  double delta = 0.1;             // f(y) cutoff scale (2D only)
  double lambda_exponent = 12.0;  // lambda_i = 2^{-lambda_exponent i / alpha}
  double c_norm = 1.0;            // normalization c of F_* (3D only)
  bool zero_perturbation = false; // diagnostic: every perturbation is identically zero

  void validate(bool two_d = false) const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("alpha must lie in (0, 1)");
    if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ParameterError("epsilon must lie in (0, 1]");
    if (!(M >= 1.0) || !std::isfinite(M)) throw ParameterError("M must be >= 1");
    if (!(lambda_exponent > 0.0)) throw ParameterError("lambda_exponent must be positive");
    if (two_d && !(delta > 0.0 && delta < 0.5)) throw ParameterError("delta must lie in (0, 1/2)");
  }
  double log_lambda(int i) const { return blowlab::log_lambda(i, alpha, lambda_exponent); }
  /// log(lambda_i eps)
  double log_scale(int i) const { return log_lambda(i) + std::log(epsilon); }

  nlohmann::ordered_json to_json() const {
    return {{"alpha", alpha},     {"epsilon", epsilon},
            {"M", M},             {"delta", delta},
            {"lambda_exponent", lambda_exponent}, {"c_norm", c_norm},
            {"zero_perturbation", zero_perturbation}};
  }
};

/// sum_i Phi_i(e^t) over the active indices, in increasing i.
inline double partition_sum(double t, int i_max = kMaxDyadic) {
  std::vector<int> idx;
  active_dyadic(t, i_max, idx);
  double s = 0.0;
  for (int i : idx) s += dyadic_phi(i, t);
  return s;
}

/// Indices i whose Phi_i support meets t in [t_lo, t_hi].
inline void active_dyadic_range(double t_lo, double t_hi, std::vector<int>& out) {
  out.clear();
  const double l_lo = t_lo / kLn2, l_hi = t_hi / kLn2;
  if (l_hi > 0.0) out.push_back(0);
  const int lo = std::max(1, static_cast<int>(std::floor(-l_hi)));
  const int hi = std::min(kMaxDyadic, static_cast<int>(std::ceil(2.0 - l_lo)));
  for (int i = lo; i <= hi; ++i)
    if (l_hi > -i && l_lo < 2 - i) out.push_back(i);
}

/// u where beta = e^{lb} (lb = log beta) and where pi/2 - beta = e^{lb}; NaN if out of range.
inline double u_of_log_beta(double lb) { return lb < std::log(kPi / 2) ? log_tan_from_log(lb) : NAN; }

namespace detail {

inline void push_band_breaks(const PerturbParams& p, int i, bool low_side, bool high_side, std::vector<double>& out) {
  for (double d : {0.0, kLn2}) {
    const double u = u_of_log_beta(p.log_scale(i) + d);
    if (!std::isfinite(u)) continue;
    if (low_side) out.push_back(u);
    if (high_side) out.push_back(-u);
  }
}

inline void sort_unique(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace detail

// ---------------------------------------------------------------------------------------
// 3D
// ---------------------------------------------------------------------------------------

/// F~1, F~2 and F~0 = F~1 + mu F~2 for the axisymmetric Euler data w = F_* + F~0.
class Perturbation3D {
 public:
  explicit Perturbation3D(const PerturbParams& p) : p_(p), prof_(p.alpha, p.c_norm), logM_(std::log(p.M)) {
    p.validate(false);
    if (p_.zero_perturbation) return;
    auto f1 = [this](double t, double u) { return F_tilde1(t, u); };
    auto f2 = [this](double t, double u) { return F_tilde2(t, u); };
    auto ub = [this](double t, std::vector<double>& b) { u_breaks(t, b); };
    L1_ = L_functional_fn(f1, LKind::L3D12, 0.0, t_breaks(), ub).value;
    L2_ = L_functional_fn(f2, LKind::L3D12, 0.0, t_breaks(), ub).value;
    if (!(std::abs(L2_) > 1e-12)) throw DomainError("degenerate correction: L3D12(F~2) vanishes");
    mu_ = -L1_ / L2_;
  }

  const PerturbParams& params() const { return p_; }
  const Profile3D& profile() const { return prof_; }
  double mu() const { return mu_; }
  double L_F1() const { return L1_; }
  double L_F2() const { return L2_; }

  /// sum_i Phi_i(R) (chi(beta / lambda_i eps) + chi((pi/2 - beta) / lambda_i eps)).
  template <class T>
  T band(const T& t, const T& u) const {
    thread_local std::vector<int> idx;
    active_dyadic(value_of(t), kMaxDyadic, idx);
    T s(0.0);
    const double u0 = value_of(u);
    for (int i : idx) {
      const double ls = p_.log_scale(i);
      const double lb0 = value_of(log_beta(T(u0))), lc0 = value_of(log_coangle(T(u0)));
      const bool lo = lb0 - ls < kLn2, hi = lc0 - ls < kLn2;
      if (!lo && !hi) continue;
      T a(0.0);
      if (lo) a += chi_log(T(log_beta(u) - ls));
      if (hi) a += chi_log(T(log_coangle(u) - ls));
      s += dyadic_phi(i, t) * a;
    }
    return s;
  }

  template <class T>
  T F_tilde1(const T& t, const T& u) const {
    if (p_.zero_perturbation) return T(0.0);
    const T chiM = chi_log(T(t - logM_));
    const T Fs = prof_.F_star(t, u);
    return (chiM - 1.0) * Fs - chiM * band(t, u) * Fs;
  }

  /// sin(2 beta) chi((R - 3)^3), chi extended evenly.
  template <class T>
  T F_tilde2(const T& t, const T& u) const {
    using std::exp;
    if (p_.zero_perturbation) return T(0.0);
    const double R0 = std::exp(value_of(t));
    if (!(R0 > kF2Lo && R0 < kF2Hi)) return T(0.0);
    const T s = exp(t) - 3.0;
    return sin2_beta(u) * chi_even(T(s * s * s));
  }

  template <class T>
  T F_tilde0(const T& t, const T& u) const {
    if (p_.zero_perturbation) return T(0.0);
    return F_tilde1(t, u) + mu_ * F_tilde2(t, u);
  }

  /// Full data F_* + F~0.
  template <class T>
  T data(const T& t, const T& u) const {
    return prof_.F_star(t, u) + F_tilde0(t, u);
  }

  std::vector<double> t_breaks() const {
    std::vector<double> b{0.0, kLn2, logM_, logM_ + kLn2, std::log(kF2Lo), std::log(2.0), std::log(3.0),
                          std::log(4.0), std::log(kF2Hi)};
    for (int k = 1; k <= 12; ++k) b.push_back(-k * kLn2);
    detail::sort_unique(b);
    return b;
  }

  void u_breaks(double t, std::vector<double>& out) const {
    out.assign({0.0});
    thread_local std::vector<int> idx;
    active_dyadic(t, kMaxDyadic, idx);
    for (int i : idx) detail::push_band_breaks(p_, i, true, true, out);
    detail::sort_unique(out);
  }

  static constexpr double kF2Lo = 3.0 - 1.2599210498948732;  // 3 - 2^{1/3}
  static constexpr double kF2Hi = 3.0 + 1.2599210498948732;

 private:
  PerturbParams p_;
  Profile3D prof_;
  double logM_;
  double L1_ = 0.0, L2_ = 0.0, mu_ = 0.0;
};

struct Build3D {
  Field F0;
  double mu = 0.0;
  double L_F1 = 0.0, L_F2 = 0.0;
  double L_F0 = 0.0;       // functional of F~0 recomputed on the analytic function
  double mu_grid = NAN;    // mu from the sampled fields, for comparison
  double L_F0_grid = NAN;  // functional of the sampled F~0
  NormReport report;
};

/// Samples F~0 on `g` and checks the correction both analytically and on the grid.
inline Build3D build_F_tilde_3d(const PerturbParams& p, const PolarGrid& g) {
  const Perturbation3D P(p);
  Build3D b;
  b.mu = P.mu();
  b.L_F1 = P.L_F1();
  b.L_F2 = P.L_F2();
  b.F0 = sample_polar(g, [&](double t, double u) { return P.F_tilde0(t, u); }, p.alpha, "F_tilde0");
  if (!p.zero_perturbation) {
    auto f0 = [&](double t, double u) { return P.F_tilde0(t, u); };
    auto ub = [&](double t, std::vector<double>& out) { P.u_breaks(t, out); };
    b.L_F0 = L_functional_fn(f0, LKind::L3D12, 0.0, P.t_breaks(), ub).value;
    const Field f1 = sample_polar(g, [&](double t, double u) { return P.F_tilde1(t, u); }, p.alpha);
    const Field f2 = sample_polar(g, [&](double t, double u) { return P.F_tilde2(t, u); }, p.alpha);
    const double g1 = L_functional(f1, LKind::L3D12).value, g2 = L_functional(f2, LKind::L3D12).value;
    b.mu_grid = -g1 / g2;
    b.L_F0_grid = L_functional(b.F0, LKind::L3D12).value;
  }
  b.report.add("mu", b.mu, 1e-13 * std::abs(b.mu), "analytic quadrature");
  b.report.add("L3D12(F~1)(0)", b.L_F1, 1e-13 * std::abs(b.L_F1), "analytic quadrature");
  b.report.add("L3D12(F~2)(0)", b.L_F2, 1e-13 * std::abs(b.L_F2), "analytic quadrature");
  b.report.add("L3D12(F~0)(0)", b.L_F0, 1e-13 * std::abs(b.L_F1), "analytic quadrature");
  b.report.add("mu (grid)", b.mu_grid, std::abs(b.mu_grid - b.mu), "grid quadrature");
  b.report.add("L3D12(F~0)(0) (grid)", b.L_F0_grid, 0.0, "grid quadrature");
  return b;
}

/// M^{-1} + alpha^{-1} eps^{alpha/6} + alpha^2.
inline double envelope_3d(const PerturbParams& p) {
  return 1.0 / p.M + std::pow(p.epsilon, p.alpha / 6.0) / p.alpha + p.alpha * p.alpha;
}

struct Smallness3D {
  PerturbParams params;
  double H3_F1 = 0.0, H3_F0 = 0.0, mu = 0.0, envelope = 0.0;
  double ratio() const { return H3_F0 / envelope; }
  NormReport report() const {
    NormReport r;
    r.add("||F~1||_H3", H3_F1, 1e-10 * H3_F1, "analytic quadrature");
    r.add("|mu|", std::abs(mu), 1e-13 * std::abs(mu), "analytic quadrature");
    r.add("||F~0||_H3", H3_F0, 1e-10 * H3_F0, "analytic quadrature");
    r.add("envelope M^-1+eps^(a/6)/a+a^2", envelope, 0.0, "closed form");
    r.add("C (single point)", ratio(), 0.0, "ratio");
    return r;
  }
};

inline Smallness3D smallness_3d(const PerturbParams& p) {
  const Perturbation3D P(p);
  Smallness3D s;
  s.params = p;
  s.mu = P.mu();
  s.envelope = envelope_3d(p);
  if (p.zero_perturbation) return s;
  auto ub = [&](double t, std::vector<double>& out) { P.u_breaks(t, out); };
  auto s1 = [&](double t, double u) { return polar_jet<3>([&](auto a, auto b) { return P.F_tilde1(a, b); }, t, u); };
  auto s0 = [&](double t, double u) { return polar_jet<3>([&](auto a, auto b) { return P.F_tilde0(a, b); }, t, u); };
  s.H3_F1 = h_norm_fn(s1, 3, HWeight::phi, p.alpha, P.t_breaks(), ub).value;
  s.H3_F0 = h_norm_fn(s0, 3, HWeight::phi, p.alpha, P.t_breaks(), ub).value;
  return s;
}

inline NormReport smallness_report_3d(const PerturbParams& p) { return smallness_3d(p).report(); }

struct Sweep3D {
  std::vector<Smallness3D> points;
  double C_max = 0.0;  // max ratio ||F~0|| / envelope
  double C_ls = 0.0;   // least-squares fit of ||F~0|| = C envelope
  bool monotone_eps = true, monotone_M = true;
  std::vector<std::string> violations;
  nlohmann::ordered_json to_json() const;
};

inline nlohmann::ordered_json Sweep3D::to_json() const {
  nlohmann::ordered_json j;
  j["C_max"] = C_max;
  j["C_ls"] = C_ls;
  j["monotone_eps"] = monotone_eps;
  j["monotone_M"] = monotone_M;
  j["violations"] = violations;
  auto& pts = j["points"] = nlohmann::ordered_json::array();
  for (auto& s : points)
    pts.push_back({{"alpha", s.params.alpha},
                   {"epsilon", s.params.epsilon},
                   {"M", s.params.M},
                   {"H3_F1", s.H3_F1},
                   {"mu", s.mu},
                   {"H3_F0", s.H3_F0},
                   {"envelope", s.envelope}});
  return j;
}

/// ||F~0||_H3 over the product grid, the fitted constant and the monotonicity checks.
inline Sweep3D sweep_3d(const std::vector<double>& alphas, const std::vector<double>& epsilons,
                        const std::vector<double>& Ms, const PerturbParams& base = {}, int workers = 1) {
  Sweep3D r;
  const size_t nA = alphas.size(), nE = epsilons.size(), nM = Ms.size();
  auto at = [&](size_t a, size_t e, size_t m) -> const Smallness3D& { return r.points[(a * nE + e) * nM + m]; };
  std::vector<PerturbParams> params;
  for (double a : alphas)
    for (double e : epsilons)
      for (double M : Ms) {
        PerturbParams p = base;
        p.alpha = a;
        p.epsilon = e;
        p.M = M;
        params.push_back(p);
      }
  // points are independent; each worker takes the next unclaimed index
  r.points.resize(params.size());
  std::atomic<size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&] {
    for (size_t i = next++; i < params.size(); i = next++) {
      try {
        r.points[i] = smallness_3d(params[i]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int nw = std::clamp(workers, 1, static_cast<int>(std::max<size_t>(1, params.size())));
  std::vector<std::thread> pool;
  for (int w = 1; w < nw; ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  double num = 0.0, den = 0.0;
  for (const Smallness3D& s : r.points) {
    r.C_max = std::max(r.C_max, s.ratio());
    num += s.H3_F0 * s.envelope;
    den += s.envelope * s.envelope;
  }
  r.C_ls = den > 0.0 ? num / den : 0.0;
  // expected ordering: smaller eps or larger M gives a smaller norm
  for (size_t a = 0; a < nA; ++a)
    for (size_t e = 0; e < nE; ++e)
      for (size_t m = 0; m < nM; ++m) {
        const Smallness3D& s = at(a, e, m);
        for (size_t e2 = 0; e2 < nE; ++e2) {
          const Smallness3D& o = at(a, e2, m);
          if (o.params.epsilon < s.params.epsilon && !(o.H3_F0 < s.H3_F0)) {
            r.monotone_eps = false;
            r.violations.push_back("eps: alpha=" + detail::fmt_double(s.params.alpha) + " M=" + detail::fmt_double(s.params.M));
          }
        }
        for (size_t m2 = 0; m2 < nM; ++m2) {
          const Smallness3D& o = at(a, e, m2);
          if (o.params.M > s.params.M && !(o.H3_F0 < s.H3_F0)) {
            r.monotone_M = false;
            r.violations.push_back("M: alpha=" + detail::fmt_double(s.params.alpha) + " eps=" + detail::fmt_double(s.params.epsilon));
          }
        }
      }
  return r;
}

// ---------------------------------------------------------------------------------------
// <x>_sigma^k |nabla^k f| growth
// ---------------------------------------------------------------------------------------

/// f(t, u) as a Jet<4> template, evaluated on scaled Cartesian jets.
using PolarJetFn = std::function<Jet<4>(const Jet<4>&, const Jet<4>&)>;

/// log |nabla^k f| at (lx, ly) from the scaled Cartesian Jet<4> g; -inf if all vanish.
inline double log_grad_norm(const Jet<4>& g, int k, double lx, double ly) {
  double lmax = -INFINITY;
  std::array<double, 5> l{};
  for (int a = 0; a <= k; ++a) {
    const double c = g.coef(a, k - a);
    l[a] = c == 0.0 ? -INFINITY
                    : std::log(std::abs(c)) + std::log(Jet<4>::fact(a) * Jet<4>::fact(k - a)) - a * lx - (k - a) * ly +
                          0.5 * std::log(detail::binom(k, a));
    lmax = std::max(lmax, l[a]);
  }
  if (!std::isfinite(lmax)) return -INFINITY;
  double s = 0.0;
  for (int a = 0; a <= k; ++a)
    if (std::isfinite(l[a])) s += std::exp(2.0 * (l[a] - lmax));
  return lmax + 0.5 * std::log(s);
}

struct XSigmaSample {
  double t = 0.0, u = 0.0, value = 0.0;  // <x>^k |nabla^k f| at the maximizing sample
};

/// sup over samples of <x>_sigma^k |nabla^k f| (meridional Cartesian gradient).
inline XSigmaSample x_sigma_sup(const PolarJetFn& f, double alpha, int k, double sigma, const std::vector<double>& ts,
                                const std::function<void(double, std::vector<double>&)>& us) {
  if (k < 0 || k > kMaxHolderOrder) throw ParameterError("derivative order must lie in [0, 4]");
  XSigmaSample best;
  double lbest = -INFINITY;
  std::vector<double> uu;
  for (double t : ts) {
    us(t, uu);
    for (double u : uu) {
      auto [lx, ly] = log_xy(t, u, alpha);
      auto [T, U] = cart_tu<4>(lx, ly, alpha);
      const Jet<4> g = f(T, U);
      const double lg = log_grad_norm(g, k, lx, ly);
      if (!std::isfinite(lg)) continue;
      const double lr = t / alpha;
      const double lw = lg + k * log_xweight_from_log(lr, sigma);
      if (lw > lbest) {
        lbest = lw;
        best = {t, u, std::exp(lw)};
      }
    }
  }
  return best;
}

struct XSigmaGrowth {
  int k = 0;
  double sigma = 14.0;
  std::vector<double> epsilons, sups, scaled;  // scaled = eps^k sup
  double spread = 0.0;                          // max/min of scaled
  bool finite = true;
  nlohmann::ordered_json to_json() const {
    return {{"k", k}, {"sigma", sigma}, {"epsilons", epsilons}, {"sup", sups}, {"eps^k sup", scaled},
            {"spread", spread}, {"finite", finite}};
  }
};

/// Sample set for the 3D data: t across the dyadic shells i <= 3 and the outer cutoff,
/// u dense inside every angular band and on a coarse background.
inline void x_sigma_samples_3d(const PerturbParams& p, std::vector<double>& ts,
                               std::function<void(double, std::vector<double>&)>& us) {
  ts.clear();
  const double t_lo = -4.0 * kLn2, t_hi = std::log(2.0 * p.M) + 0.5;
  const int nt = 96;
  for (int i = 0; i <= nt; ++i) ts.push_back(t_lo + (t_hi - t_lo) * i / nt);
  us = [p](double t, std::vector<double>& out) {
    out.clear();
    for (int j = 0; j <= 80; ++j) out.push_back(-20.0 + 40.0 * j / 80);
    std::vector<int> idx;
    active_dyadic(t, kMaxDyadic, idx);
    for (int i : idx) {
      const double ls = p.log_scale(i);
      for (int j = 0; j <= 48; ++j) {
        const double lb = ls - 0.3 + (kLn2 + 0.6) * j / 48;
        const double u = u_of_log_beta(lb);
        if (std::isfinite(u)) {
          out.push_back(u);
          out.push_back(-u);
        }
      }
    }
  };
}

/// eps^k sup <x>_sigma^k |nabla^k (F_* + F~0)| across an eps sweep (3D data, sigma = 14).
inline XSigmaGrowth x_sigma_growth_3d(const PerturbParams& base, int k, const std::vector<double>& epsilons,
                                      double sigma = 14.0) {
  XSigmaGrowth r;
  r.k = k;
  r.sigma = sigma;
  r.epsilons = epsilons;
  double lo = INFINITY, hi = 0.0;
  for (double e : epsilons) {
    PerturbParams p = base;
    p.epsilon = e;
    const Perturbation3D P(p);
    PolarJetFn f = [&P](const Jet<4>& t, const Jet<4>& u) { return P.data(t, u); };
    std::vector<double> ts;
    std::function<void(double, std::vector<double>&)> us;
    x_sigma_samples_3d(p, ts, us);
    const XSigmaSample s = x_sigma_sup(f, p.alpha, k, sigma, ts, us);
    r.sups.push_back(s.value);
    const double sc = std::pow(e, k) * s.value;
    r.scaled.push_back(sc);
    r.finite = r.finite && std::isfinite(s.value);
    lo = std::min(lo, sc);
    hi = std::max(hi, sc);
  }
  r.spread = lo > 0.0 ? hi / lo : INFINITY;
  return r;
}

// ---------------------------------------------------------------------------------------
// 2D Boussinesq
// ---------------------------------------------------------------------------------------

namespace detail {

/// Drops the terms of order above M.
template <int M, int N>
Jet<M> truncate(const Jet<N>& g) {
  static_assert(M <= N);
  Jet<M> r;
  for (int a = 0; a <= M; ++a)
    for (int b = 0; a + b <= M; ++b) r.coef(a, b) = g.coef(a, b);
  return r;
}

/// d/dx (which = 0) or d/dy (which = 1) of a scaled Cartesian jet, one order lower.
template <int N>
Jet<N - 1> cart_partial(const Jet<N>& g, int which, double lx, double ly) {
  Jet<N - 1> r;
  const double s = std::exp(-(which == 0 ? lx : ly));
  for (int a = 0; a <= N - 1; ++a)
    for (int b = 0; a + b <= N - 1; ++b)
      r.coef(a, b) = which == 0 ? (a + 1) * g.coef(a + 1, b) * s : (b + 1) * g.coef(a, b + 1) * s;
  return r;
}

/// 8-point Lagrange weights at fractional position p in a uniform table of n nodes.
inline int lagrange8(double p, int n, std::array<double, 8>& w) {
  int k0 = static_cast<int>(std::floor(p)) - 3;
  k0 = std::clamp(k0, 0, std::max(0, n - 8));
  for (int a = 0; a < 8; ++a) {
    double v = 1.0;
    for (int b = 0; b < 8; ++b)
      if (b != a) v *= (p - (k0 + b)) / static_cast<double>(a - b);
    w[a] = v;
  }
  return k0;
}

}  // namespace detail

/// Panels fine enough to resolve the flat cutoff transitions to ~1e-12.
inline const LineOptions kBandLine{16, 0.125, 4, 1.0, 1e-16, 80};

struct Build2DOptions {
  double ell_min = -45.0;   // lowest tabulated alpha log y
  double d_step = 0.01;     // spacing of the D(y) table in alpha log y
  double h_step = 0.05;     // spacing of the H(y) and f(y) tables
};

/// Estimated C1 of the bound int |(y d_y)^k d_y eta_hat| dz <= C1 (alpha^2 + eps) y^{2 alpha}.
struct C1Estimate {
  double C1 = 0.0;     // sup over the sample and k <= k_max
  double C_bar = 0.0;  // sup of int |(y d_y)^k d_y eta_bar| dz / (alpha^2 y^{2 alpha})
  int k_max = 3;
  std::vector<double> ys, ratio_hat, ratio_bar;  // per y, max over k
  nlohmann::ordered_json to_json() const {
    return {{"C1", C1}, {"C_bar", C_bar}, {"k_max", k_max}, {"samples", ys.size()}};
  }
};

enum class DeltaPolicy { report, strict };

/// delta < min(1/4, 1/(4 C1)) with C1 inflated by `safety`.
struct DeltaCheck {
  double C1 = 0.0, safety = 2.0, delta = 0.0, delta_max = 0.0;
  bool ok = true;
  nlohmann::ordered_json to_json() const {
    return {{"C1", C1}, {"safety", safety}, {"delta", delta}, {"delta_max", delta_max}, {"ok", ok}};
  }
};

/// Omega~0, eta_hat, f(y), theta_hat and the perturbations (eta~0, xi~0) = grad(chi(R/M) theta_hat) - (eta_bar, xi_bar).
class Boussinesq2D {
 public:
  explicit Boussinesq2D(const PerturbParams& p, const Build2DOptions& o = {})
      : p_(p), o_(o), prof_(p.alpha), logM_(std::log(p.M)), log_delta_(std::log(p.delta)) {
    p.validate(true);
    const double al = p_.alpha;
    q_total_ = 1.0 / (1.0 + al) + integrate_1d([al](double w) { return chi(w) * std::pow(w, al); }, 1.0, 2.0, {},
                                               LineOptions{16, 0.0625, 4, 1.0, 1e-16, 48});
    if (!p_.zero_perturbation) build_tables();
  }

  const PerturbParams& params() const { return p_; }
  const Profile2D& profile() const { return prof_; }

  /// sum_i Phi_i(R) chi((pi/2 - beta) / lambda_i eps).
  /// With `wide_only`, shells whose support pi/2 - beta < 2 lambda_i eps is below e^{-24} are skipped.
  template <class T>
  T band(const T& t, const T& u, bool wide_only = false) const {
    thread_local std::vector<int> idx;
    active_dyadic(value_of(t), kMaxDyadic, idx);
    T s(0.0);
    const double lc0 = value_of(log_coangle(T(value_of(u))));
    for (int i : idx) {
      const double ls = p_.log_scale(i);
      if (lc0 - ls >= kLn2 || (wide_only && narrow_shell(i))) continue;
      s += dyadic_phi(i, t) * chi_log(T(log_coangle(u) - ls));
    }
    return s;
  }

  bool narrow_shell(int i) const { return p_.log_scale(i) + kLn2 < kThetaSeriesLog; }

  template <class T>
  T Omega_tilde(const T& t, const T& u) const {
    if (p_.zero_perturbation) return T(0.0);
    const T chiM = chi_log(T(t - logM_));
    const T Ob = prof_.Omega(t, u);
    return (chiM - 1.0) * Ob - chiM * band(t, u) * Ob;
  }

  /// eta_hat - eta_bar = -sum_i Phi_i chi_i eta_bar.
  template <class T>
  T eta_diff(const T& t, const T& u) const {
    if (p_.zero_perturbation) return T(0.0);
    return -band(t, u) * prof_.eta(t, u);
  }

  /// eta_diff restricted to the shells that are not narrow.
  template <class T>
  T eta_diff_wide(const T& t, const T& u) const {
    return -band(t, u, true) * prof_.eta(t, u);
  }

  template <class T>
  T eta_hat(const T& t, const T& u) const {
    return prof_.eta(t, u) + eta_diff(t, u);
  }

  // ---- one-dimensional profiles in y ----

  /// Scaled y-jet (coefficients (0, b)) of D(y) = int_0^inf (eta_hat - eta_bar)(z, y) dz.
  Jet<4> D_jet(double ly) const {
    return scale_by_y(d_jet(ly), ly);
  }

  /// Scaled y-jet of G(y) = int_0^inf d_y eta_hat(z, y) dz (orders <= 3 are meaningful).
  Jet<4> G_jet(double ly) const {
    if (p_.zero_perturbation) return Jet<4>(0.0);
    Jet<4> h = h_jet(ly);
    const Jet<3> Dp = Dprime_jet(ly);
    for (int b = 0; b < 4; ++b) h.coef(0, b) += Dp.coef(0, b);
    return h;
  }

  /// Scaled y-jet of D'(y) from d = D/y: D'_b = (b+1)(d_b + d_{b+1}), which never divides by y.
  Jet<3> Dprime_jet(double ly) const {
    const Jet<4> d = d_jet(ly);
    Jet<3> r(0.0);
    for (int b = 0; b <= 3; ++b) r.coef(0, b) = (b + 1) * (d.coef(0, b) + d.coef(0, b + 1));
    return r;
  }

  /// Scaled y-jet of d_y (theta_hat - theta_bar) = f' + D' on x-lines that miss every band.
  Jet<3> dyA_out_jet(double ly) const {
    Jet<3> r = detail::truncate<3>(chi_y(ly) * G_jet(ly)) * -1.0;
    r += Dprime_jet(ly);
    return r;
  }

  /// Scaled y-jet of f(y) - 1.
  Jet<4> F_jet(double ly) const {
    Jet<4> r(0.0);
    if (p_.zero_perturbation || ly >= log_delta_ + kLn2) return r;
    r.coef(0, 0) = F_value(ly);
    const Jet<4> cg = chi_y(ly) * G_jet(ly);
    const double y0 = std::exp(ly);
    for (int b = 0; b < 4; ++b) r.coef(0, b + 1) = -y0 * cg.coef(0, b) / (b + 1);
    return r;
  }

  /// f(y) from log y.
  double f_of_log(double ly) const { return 1.0 + F_jet(ly).value(); }
  double f(double y) const { return f_of_log(std::log(y)); }
  /// f_y(y) = -chi(y / delta) G(y).
  double f_y(double y) const {
    if (p_.zero_perturbation) return 0.0;
    const double ly = std::log(y);
    return -(chi_y(ly) * G_jet(ly)).value();
  }

  // ---- theta_hat - theta_bar = (f - 1) + int_0^x (eta_hat - eta_bar) dz ----

  /// True when the x-line through (x, y) reaches an angular band before z = x.
  bool in_band(double lx, double ly) const {
    if (p_.zero_perturbation) return false;
    auto [t, u] = tu_from_log(lx, ly, p_.alpha);
    thread_local std::vector<int> idx;
    active_dyadic_range(p_.alpha * ly, t, idx);
    if (idx.empty()) return false;
    const double l2 = p_.log_scale(idx.front()) + kLn2;
    if (l2 >= std::log(kPi / 2)) return true;
    return lx - ly < log_tan_from_log(l2);
  }

  /// True when the segment from (0, y) to (x, y) lies on the plateau of every shell active along it.
  /// There the bands sum to the partition of unity, eta_hat = 0 and int_0^x (eta_hat - eta_bar) = 1 - theta_bar.
  bool deep_in_band(double lx, double ly) const {
    if (p_.zero_perturbation) return false;
    auto [t, u] = tu_from_log(lx, ly, p_.alpha);
    thread_local std::vector<int> idx;
    active_dyadic_range(p_.alpha * ly, t, idx);
    if (idx.empty()) return false;
    const double lc = log_coangle(u);
    for (int i : idx)
      if (lc > p_.log_scale(i)) return false;
    return true;
  }

  /// theta_bar as a scaled Cartesian jet. For x/y < e^{-24} the leading term
  /// 1 + (6 alpha / c_*) y s^{1+alpha} g(y) / (1 + alpha), s = x/y, g = R/(1+R)^3, is exact to
  /// relative O(s^2), far below rounding; otherwise it is the x-line integral of eta_bar.
  template <int N>
  Jet<N> theta_bar_jet(double lx, double ly) const {
    if (lx - ly > kThetaSeriesLog) return prof_.template theta_jet<N>(lx, ly);
    using std::exp;
    const double al = p_.alpha;
    auto [LX, LY] = cart_seeds<N>(lx, ly);
    Jet<N> r = (6.0 * al / (prof_.c_star() * (1.0 + al))) *
               exp(LY + (1.0 + al) * (LX - LY) + al * LY - 3.0 * softplus(al * LY));
    r += 1.0;
    return r;
  }

  /// e^{(1+alpha) ls} Q(s e^{-ls}) for the jet log s, with Q(q) = int_0^q chi(w) w^alpha dw.
  template <int N>
  Jet<N> scaled_Q(const Jet<N>& log_s, double ls) const {
    using std::exp;
    using std::log;
    const double al = p_.alpha, l0 = log_s.value() - ls;
    if (l0 <= 0.0) return exp((1.0 + al) * log_s) / (1.0 + al);
    if (l0 >= kLn2) return Jet<N>(std::exp((1.0 + al) * ls) * q_total_);
    const double q0 = std::exp(l0);
    const double v = 1.0 / (1.0 + al) + integrate_1d([al](double w) { return chi(w) * std::pow(w, al); }, 1.0, q0);
    const Jet<N> W = Jet<N>::variable(q0, 0);
    const Jet<N> h = chi(W) * exp(al * log(W));
    const Jet<N> d = exp(log_s - ls) - q0;
    Jet<N> r(0.0);
    for (int k = N; k >= 1; --k) {
      r += h.coef(k - 1, 0) / k;
      r *= d;
    }
    r += v;
    return r * std::exp((1.0 + al) * ls);
  }

  /// int_0^x (eta_hat - eta_bar) dz for x/y < e^{-24}. Along such a segment t = alpha log y and
  /// pi/2 - beta = z/y up to relative O((x/y)^2), so the integral reduces to
  /// -(6 alpha / c_*) g(y) y sum_i Phi_i(alpha log y) e^{(1+alpha) ls_i} Q((x/y) e^{-ls_i}).
  template <int N>
  Jet<N> K_small_angle(double lx, double ly, bool narrow_only = false) const {
    using std::exp;
    const double al = p_.alpha;
    auto [LX, LY] = cart_seeds<N>(lx, ly);
    const Jet<N> ty = al * LY;
    thread_local std::vector<int> idx;
    active_dyadic(al * ly, kMaxDyadic, idx);
    Jet<N> s(0.0);
    for (int i : idx)
      if (!narrow_only || narrow_shell(i)) s += dyadic_phi(i, ty) * scaled_Q<N>(LX - LY, p_.log_scale(i));
    return s * ((-6.0 * al / prof_.c_star()) * exp(LY + ty - 3.0 * softplus(ty)));
  }

  /// xi_bar = d_y theta_bar as a scaled Cartesian jet.
  template <int N>
  Jet<N> xi_bar_jet(double lx, double ly) const {
    if (lx - ly > kThetaSeriesLog) return prof_.template xi_jet<N>(lx, ly);
    return detail::cart_partial(theta_bar_jet<N + 1>(lx, ly), 1, lx, ly);
  }

  /// Scaled Cartesian jet of int_0^x (eta_hat - eta_bar)(z, y) dz.
  template <int N>
  Jet<N> K_jet(double lx, double ly) const {
    if (p_.zero_perturbation) return Jet<N>(0.0);
    if (!in_band(lx, ly)) return detail::truncate<N>(D_jet(ly));
    if (lx - ly < kThetaSeriesLog) return K_small_angle<N>(lx, ly);
    if (deep_in_band(lx, ly)) return 1.0 - theta_bar_jet<N>(lx, ly);
    // narrow shells live at z/y < e^{-24} for every x: their part is the small-angle term;
    // the wide shells need the x-line integral
    Jet<N> r = K_small_angle<N>(lx, ly, true);
    auto [t, u] = tu_from_log(lx, ly, p_.alpha);
    thread_local std::vector<int> idx;
    active_dyadic_range(p_.alpha * ly, t, idx);
    std::vector<double> vb;
    bool wide = false;
    for (int i : idx) {
      if (narrow_shell(i)) continue;
      wide = true;
      for (double d : {0.0, kLn2}) {
        const double l = p_.log_scale(i) + d;
        if (l >= std::log(kPi / 2)) continue;
        const double v = ly - lx + log_tan_from_log(l);
        if (v < 0.0) vb.push_back(v);
      }
    }
    if (!wide) return r;
    for (double v : prof_.line_breaks(lx, ly)) vb.push_back(v);
    auto f = [this](const auto& a, const auto& b) { return eta_diff_wide(a, b); };
    LineIntOptions lo;
    lo.line = kBandLine;
    return r + line_integral_x<N>(f, lx, ly, p_.alpha, vb, lo);
  }

  /// theta_hat - theta_bar as a scaled Cartesian jet.
  template <int N>
  Jet<N> A_jet(double lx, double ly) const {
    return detail::truncate<N>(F_jet(ly)) + K_jet<N>(lx, ly);
  }

  /// chi(R/M) theta_hat as a scaled Cartesian jet (theta_0 = its value, grad = (eta_0, xi_0)).
  template <int N>
  Jet<N> localized_theta_hat(double lx, double ly) const {
    auto [T, U] = cart_tu<N>(lx, ly, p_.alpha);
    const Jet<N> chiM = chi_log(Jet<N>(T - logM_));
    if (chiM.value() == 0.0 && chiM.is_constant()) return Jet<N>(0.0);
    return chiM * (theta_bar_jet<N>(lx, ly) + A_jet<N>(lx, ly));
  }

  // ---- perturbation jets for the energy ----

  struct NodeJets {
    Jet<3> Om, eta, xi;         // Omega~0, eta~0, xi~0
    Jet<3> I1, I2, I3, I4;      // decomposition of eta~2 = I1 + I2 and xi~2 = I3 + I4
    Jet<3> eta1, xi1;           // truncation of theta_bar
  };

  /// Polar Jet<3> of every piece at (t, u). With `with_xi1` false the truncation part xi~1 is
  /// left out (set to zero), so that xi~0 reduces to I3 + I4.
  void node_jets(double t, double u, NodeJets& J, bool with_xi1 = true) const {
    J.Om = polar_jet<3>([this](const auto& a, const auto& b) { return Omega_tilde(a, b); }, t, u);
    const Jet<3> zero(0.0);
    J.eta = J.xi = J.I1 = J.I2 = J.I3 = J.I4 = J.eta1 = J.xi1 = zero;
    if (p_.zero_perturbation) return;
    const double al = p_.alpha;
    auto [lx, ly] = log_xy(t, u, al);
    const bool band_line = in_band(lx, ly);
    if (t <= logM_ && !band_line) {
      // chi(R/M) = 1 and eta_hat = eta_bar along the whole line: eta~0 = 0, xi~0 = f' + D'
      J.xi = J.I3 = cart_to_polar(dyA_out_jet(ly), t, u, al);
      return;
    }
    // Derivatives are assembled from local polar jets and one-dimensional y-jets, since dividing
    // a scaled jet by x (near beta = pi/2) or by y (near beta = 0) underflows. With
    // Theta~ = chi_M theta_hat - theta_bar and theta_hat = theta_bar + A:
    //   eta~0 = chi_M (eta_hat - eta_bar) + (d_x chi_M) A + [(d_x chi_M) theta_bar + (chi_M - 1) eta_bar]
    //   xi~0  = chi_M d_y A + (d_y chi_M) A + [(d_y chi_M) theta_bar + (chi_M - 1) xi_bar]
    const Jet<3> Tp = Jet<3>::variable(t, 0), Up = Jet<3>::variable(u, 1);
    const Jet<3> ediff = eta_diff(Tp, Up);
    // chi_M vanishes identically for R >= 2M, where A drops out
    const bool live = t < logM_ + kLn2;
    Jet<4> A(0.0);
    Jet<3> dyA(0.0);
    if (live) {
      A = A_jet<4>(lx, ly);
      if (!band_line) {
        dyA = dyA_out_jet(ly);
      } else {
        if (ly < kMinLogY) throw DomainError("2D perturbation: band point with y below the double range");
        dyA = detail::cart_partial(A, 1, lx, ly);
      }
    }
    const Jet<3> dyA3 = cart_to_polar(dyA, t, u, al);
    if (t <= logM_) {
      J.eta = J.I1 = ediff;
      J.xi = J.I3 = dyA3;
      return;
    }
    if (!live) {
      // chi_M = 0 with all its derivatives: only the truncation of theta_bar remains
      J.eta = J.eta1 = prof_.eta(Tp, Up) * -1.0;
      if (with_xi1) J.xi = J.xi1 = cart_to_polar(xi_bar_jet<3>(lx, ly), t, u, al) * -1.0;
      return;
    }
    // polar jets of chi_M and of its Cartesian gradient alpha (cos, sin)(beta) e^{-t/alpha} chi'(t - log M)
    const Jet<4> c1 = chi_log(Jet<4>::variable(t - logM_, 0));
    Jet<3> chi_p(0.0), dchi(0.0);
    for (int k = 0; k <= 3; ++k) {
      chi_p.coef(k, 0) = c1.coef(k, 0);
      dchi.coef(k, 0) = (k + 1) * c1.coef(k + 1, 0);
    }
    const Jet<3> dchix = dchi * (al * exp(log_cos_beta(Up) - Tp / al));
    const Jet<3> dchiy = dchi * (al * exp(log_sin_beta(Up) - Tp / al));
    const Jet<3> A3 = cart_to_polar(detail::truncate<3>(A), t, u, al);
    const Jet<3> thb3 = cart_to_polar(theta_bar_jet<3>(lx, ly), t, u, al);
    const Jet<3> xib3 = with_xi1 ? cart_to_polar(xi_bar_jet<3>(lx, ly), t, u, al) : zero;
    const Jet<3> etab = prof_.eta(Tp, Up);
    J.I1 = chi_p * ediff;
    J.I2 = dchix * A3;
    J.eta1 = dchix * thb3 + (chi_p - 1.0) * etab;
    J.I3 = chi_p * dyA3;
    J.I4 = dchiy * A3;
    if (with_xi1) J.xi1 = dchiy * thb3 + (chi_p - 1.0) * xib3;
    J.eta = J.I1 + J.I2 + J.eta1;
    J.xi = J.I3 + J.I4 + J.xi1;
  }

  std::vector<double> t_breaks() const {
    std::vector<double> b{0.0, kLn2, logM_, logM_ + kLn2};
    for (int k = 1; k <= 12; ++k) b.push_back(-k * kLn2);
    detail::sort_unique(b);
    return b;
  }

  /// Band edges near beta = pi/2 and the curves y = delta, 2 delta.
  void u_breaks(double t, std::vector<double>& out) const {
    out.assign({0.0});
    thread_local std::vector<int> idx;
    active_dyadic(t, kMaxDyadic, idx);
    for (int i : idx) detail::push_band_breaks(p_, i, false, true, out);
    for (double ly : {log_delta_, log_delta_ + kLn2}) {
      const double ls = ly - t / p_.alpha;  // log sin(beta) on the curve
      if (ls < -1e-12) out.push_back(ls - 0.5 * std::log1p(-std::exp(2.0 * ls)));
    }
    detail::sort_unique(out);
  }

  // ---- C1 estimate ----

  /// int_0^inf |(y d_y)^k d_y g(z, y)| dz for k = 0..3, g = eta_hat or eta_bar.
  std::array<double, 4> dy_moments(double ly, bool hat) const {
    std::array<double, 4> m{};
    const double al = p_.alpha;
    auto visit = [&](double w, double wt) {
      auto [T, U] = cart_tu<4>(ly + w, ly, al);
      const Jet<4> g = hat ? eta_hat(T, U) : prof_.eta(T, U);
      // c_b = y^b d_y^b g / b!; the integrand is in s = z / y, dz = y ds
      const double c1 = g.coef(0, 1), c2 = g.coef(0, 2), c3 = g.coef(0, 3), c4 = g.coef(0, 4);
      const double v[4] = {c1, 2.0 * c2, 2.0 * c2 + 6.0 * c3, 2.0 * c2 + 18.0 * c3 + 24.0 * c4};
      const double sw = wt * std::exp(w);
      double mag = 0.0;
      for (int k = 0; k < 4; ++k) {
        m[k] += sw * std::abs(v[k]);
        mag += sw * std::abs(v[k]);
      }
      return mag;
    };
    std::vector<double> br{0.0};
    if (ly < 0.0) br.push_back(-ly);
    if (hat) {
      std::vector<int> idx;
      active_dyadic_range(al * ly - 1.0, al * ly + 1.0, idx);
      for (int i : idx)
        for (double d : {0.0, kLn2}) {
          const double l = p_.log_scale(i) + d;
          if (l < std::log(kPi / 2)) br.push_back(log_tan_from_log(l));
        }
    }
    integrate_line(visit, -INFINITY, INFINITY, br, LineOptions{16, 1.0, 2, 1.0, 1e-15, 80}, "C1 moment");
    return m;
  }

  C1Estimate estimate_C1(int samples = 60, double y_min = 1e-8) const {
    C1Estimate r;
    const double al = p_.alpha;
    for (int n = 0; n < samples; ++n) {
      const double ly = std::log(y_min) * (1.0 - static_cast<double>(n) / (samples - 1));
      const double scale = std::exp(2.0 * al * ly);
      const auto mh = dy_moments(ly, true), mb = dy_moments(ly, false);
      const double rh = *std::max_element(mh.begin(), mh.end()) / ((al * al + p_.epsilon) * scale);
      const double rb = *std::max_element(mb.begin(), mb.end()) / (al * al * scale);
      r.ys.push_back(std::exp(ly));
      r.ratio_hat.push_back(rh);
      r.ratio_bar.push_back(rb);
      r.C1 = std::max(r.C1, rh);
      r.C_bar = std::max(r.C_bar, rb);
    }
    return r;
  }

  DeltaCheck check_delta(const C1Estimate& c, double safety = 2.0) const {
    DeltaCheck d;
    d.C1 = c.C1;
    d.safety = safety;
    d.delta = p_.delta;
    d.delta_max = std::min(0.25, 1.0 / (4.0 * safety * c.C1));
    d.ok = p_.delta < d.delta_max;
    return d;
  }

  nlohmann::ordered_json table_info() const {
    return {{"ell_min", ell0_},    {"h_step", o_.h_step}, {"h_nodes", htab_.size()},
            {"d_start", dl0_},     {"d_step", o_.d_step}, {"d_nodes", dtab_.size()},
            {"ell_top", ell_top_}};
  }

 private:
  using Row = std::array<double, 5>;

  /// chi(y / delta) as a scaled y-jet.
  Jet<4> chi_y(double ly) const {
    const Jet<4> Y = Jet<4>::variable(0.0, 1);
    return chi_log(Jet<4>(ly - log_delta_ + log1p(Y)));
  }

  /// y0 (1 + Y) d(Y).
  static Jet<4> scale_by_y(const Jet<4>& d, double ly) {
    const Jet<4> Y = Jet<4>::variable(0.0, 1);
    Jet<4> r = d * (1.0 + Y);
    r *= std::exp(ly);
    return r;
  }

  /// Lagrange interpolation of a coefficient table with nodes start + k step.
  static Jet<4> interp_rows(const std::vector<Row>& tab, double start, double step, double ell, double lnorm) {
    std::array<double, 8> w;
    const int k0 = detail::lagrange8((ell - start) / step, static_cast<int>(tab.size()), w);
    Jet<4> r(0.0);
    const double e = std::exp(lnorm);
    for (int b = 0; b <= 4; ++b) {
      double v = 0.0;
      for (int a = 0; a < 8; ++a) v += w[a] * tab[k0 + a][b];
      r.coef(0, b) = v * e;
    }
    return r;
  }

  /// d(y) = D(y)/y: table inside, direct quadrature above. Below the table only shells i >= 1
  /// contribute, at relative size (lambda_1 eps)^{1+alpha} < 1e-35, and d is set to zero.
  Jet<4> d_jet(double ly) const {
    if (p_.zero_perturbation) return Jet<4>(0.0);
    const double ell = p_.alpha * ly;
    if (ell < dl0_) return Jet<4>(0.0);
    if (ell > dl0_ + (dtab_.size() - 1) * o_.d_step) return d_direct(ly);
    return interp_rows(dtab_, dl0_, o_.d_step, ell, 0.0);
  }

  /// H(y) with normalized coefficients H / y^{2 alpha}, frozen below the table.
  Jet<4> h_jet(double ly) const {
    const double ell = p_.alpha * ly;
    if (ell > ell0_ + (htab_.size() - 1) * o_.h_step) return H_direct(ly);
    if (ell < ell0_) {
      Jet<4> r(0.0);
      const double e = std::exp(2.0 * ell);
      for (int b = 0; b <= 4; ++b) r.coef(0, b) = htab_[0][b] * e;
      return r;
    }
    return interp_rows(htab_, ell0_, o_.h_step, ell, 2.0 * ell);
  }

  /// d(y) = D(y) / y as a scaled y-jet, by direct quadrature in w = log(z / y).
  Jet<4> d_direct(double ly0) const {
    const double al = p_.alpha;
    const Jet<4> Y = Jet<4>::variable(0.0, 1);
    const Jet<4> ly = ly0 + log1p(Y);
    const double lmax = std::log(kPi / 2);
    // t along the band part of the line: R = y^alpha (1 + s^2)^{alpha/2}, s <= tan(2 eps)
    const double l0 = p_.log_scale(0) + kLn2;
    const double s_hi = l0 < lmax ? std::tan(std::exp(l0)) : 1e300;
    std::vector<int> idx;
    active_dyadic_range(al * ly0, al * ly0 + 0.5 * al * std::log1p(s_hi * s_hi), idx);
    Jet<4> acc(0.0);
    if (idx.empty()) return acc;
    std::vector<double> br;
    double w_hi = -INFINITY;
    for (int i : idx)
      for (double d : {0.0, kLn2}) {
        const double l = p_.log_scale(i) + d;
        if (l >= lmax) {
          w_hi = INFINITY;
          continue;
        }
        const double w = log_tan_from_log(l);
        br.push_back(w);
        w_hi = std::max(w_hi, w);
      }
    auto visit = [&](double w, double wt) {
      const double s = std::exp(w);
      const Jet<4> t = al * ly + 0.5 * al * softplus(2.0 * w);
      Jet<4> v = eta_diff(t, Jet<4>(-w));
      v *= wt * s;
      acc += v;
      return std::abs(v.value());
    };
    integrate_line(visit, -INFINITY, w_hi, br, kBandLine, "band integral");
    return acc;
  }

  /// H(y) = int_0^inf d_y eta_bar(z, y) dz as a scaled y-jet.
  Jet<4> H_direct(double ly0) const {
    const double al = p_.alpha;
    const Jet<4> Y = Jet<4>::variable(0.0, 1);
    const Jet<4> ly = ly0 + log1p(Y);
    Jet<4> acc(0.0);
    auto visit = [&](double w, double wt) {
      const double s = std::exp(w);
      const Jet<4> t = al * ly + 0.5 * al * softplus(2.0 * w);
      // y eta_y(z, y) with the factor y folded into the exponent: eta_y alone overflows for y < e^{-350}
      const double u = -w;
      Jet<4> v = (-18.0 * al * al / prof_.c_star()) *
                 exp(log_sin_beta(u) + al * log_cos_beta(u) + 2.0 * t - 4.0 * softplus(t) - t / al + ly);
      v *= wt * s;
      acc += v;
      return std::abs(v.value());
    };
    std::vector<double> br{0.0};
    if (ly0 < 0.0) br.push_back(-ly0);
    integrate_line(visit, -INFINITY, INFINITY, br, LineOptions{16, 1.0, 2, 1.0, 1e-16, 80}, "H integral");
    return acc;
  }

  /// int_a^b chi(y/delta) G(y) dy over alpha log y in [a, b], split into `parts` Gauss panels.
  double f_integral(double a, double b, int parts) const {
    const GaussRule& g = gauss_legendre(16);
    const double al = p_.alpha, h = (b - a) / parts;
    double sum = 0.0;
    for (int k = 0; k < parts; ++k)
      for (size_t q = 0; q < g.x.size(); ++q) {
        const double ell = a + h * (k + 0.5 * (1.0 + g.x[q]));
        const double ly = ell / al;
        sum += 0.5 * h * g.w[q] * (chi_y(ly) * G_jet(ly)).value() * std::exp(ly) / al;
      }
    return sum;
  }

  /// F(y) = f(y) - 1 = int_y^{2 delta} chi(y'/delta) G(y') dy'.
  double F_value(double ly) const {
    const double ell = p_.alpha * ly;
    if (ell >= ell_top_) return 0.0;
    if (ell < ell0_) {
      // G ~ g0 y^{2 alpha} below the table
      const double g0 = htab_[0][0];
      const double y = std::exp(ly), ym = std::exp(ell0_ / p_.alpha);
      return ftab_[0] + g0 * std::exp(2.0 * ell0_) * (ym - y * std::pow(y / ym, 2.0 * p_.alpha)) / (1.0 + 2.0 * p_.alpha);
    }
    const int k = std::min(static_cast<int>(std::floor((ell - ell0_) / o_.h_step)) + 1, k_top_);
    const double b = std::min(ell0_ + k * o_.h_step, ell_top_);
    return ftab_[k] + f_integral(ell, b, 1);
  }

  void build_tables() {
    const double al = p_.alpha;
    ell_top_ = al * (log_delta_ + kLn2);
    // H and F on a grid whose node k_top sits at ell_top
    const double hh = o_.h_step;
    k_top_ = static_cast<int>(std::ceil((ell_top_ - o_.ell_min) / hh));
    ell0_ = ell_top_ - k_top_ * hh;
    htab_.assign(k_top_ + 9, Row{});
    for (size_t k = 0; k < htab_.size(); ++k) {
      const double ell = ell0_ + k * hh;
      const Jet<4> H = H_direct(ell / al);
      const double e = std::exp(-2.0 * ell);
      for (int b = 0; b <= 4; ++b) htab_[k][b] = H.coef(0, b) * e;
      if (!std::isfinite(htab_[k][0])) throw DomainError("H table is not finite at alpha log y = " + std::to_string(ell));
    }
    // D from the onset of the i = 0 band (R > 1 somewhere on the band part of the line)
    const double l0 = p_.log_scale(0) + kLn2;
    const double hd = o_.d_step;
    double onset = o_.ell_min;
    if (l0 < std::log(kPi / 2)) {
      const double s_hi = std::tan(std::exp(l0));
      onset = std::max(o_.ell_min, -0.5 * al * std::log1p(s_hi * s_hi) - 8.0 * hd);
    }
    dl0_ = onset;
    const double ell_max = logM_ + kLn2 + 1.0;
    const int nd = static_cast<int>(std::ceil((ell_max - dl0_) / hd)) + 1;
    dtab_.assign(nd, Row{});
    for (int k = 0; k < nd; ++k) {
      const Jet<4> d = d_direct((dl0_ + k * hd) / al);
      for (int b = 0; b <= 4; ++b) dtab_[k][b] = d.coef(0, b);
    }
    // F at the H nodes, accumulated downward
    ftab_.assign(k_top_ + 1, 0.0);
    for (int k = k_top_ - 1; k >= 0; --k) ftab_[k] = ftab_[k + 1] + f_integral(ell0_ + k * hh, ell0_ + (k + 1) * hh, 4);
  }

  PerturbParams p_;
  Build2DOptions o_;
  Profile2D prof_;
  double logM_, log_delta_;
  double ell0_ = 0.0, ell_top_ = 0.0, dl0_ = 0.0;
  int k_top_ = 0;
  std::vector<Row> dtab_, htab_;
  double q_total_ = 0.0;  // int_0^2 chi(w) w^alpha dw
  std::vector<double> ftab_;
};

/// alpha^{-3} delta^{alpha/4} + eps^{alpha/6} + alpha^{-1} eps^{alpha/6} + alpha^{5/2}.
inline double envelope_2d(const PerturbParams& p) {
  const double a = p.alpha, e6 = std::pow(p.epsilon, a / 6.0);
  return std::pow(p.delta, a / 4.0) / (a * a * a) + e6 + e6 / a + std::pow(a, 2.5);
}

struct Smallness2D {
  PerturbParams params;
  EnergyReport E;       // E(Omega~0, eta~0, xi~0)
  EnergyReport E_omega; // E(Omega~0, 0, 0)
  EnergyReport E_I1;    // E(0, I1, 0)
  EnergyReport E_I2I4;  // E(0, I2, I4)
  EnergyReport E_I3;    // E(0, 0, I3): its H^3(psi) and C^1 parts
  EnergyReport E_trunc; // E(0, eta~1, xi~1) for the truncation of theta_bar
  // When the xi~1 part diverges: the quadrature failure, E and E_trunc become infinite, and
  // E_partial = E(Omega~0, eta~0, I3 + I4) and E_trunc = E(0, eta~1, 0) hold the finite remainder.
  std::string divergence;
  EnergyReport E_partial;
  double envelope = 0.0;
  double seconds = 0.0;
  bool divergent() const { return !divergence.empty(); }
  double ratio() const { return E.E / envelope; }

  NormReport report() const {
    NormReport r;
    const std::string div = "divergent (" + divergence + ")";
    r.add("E", E.E, divergent() ? INFINITY : 1e-10 * E.E, divergent() ? div : "analytic quadrature");
    const EnergyReport& shown = divergent() ? E_partial : E;
    const std::string tag = divergent() ? "E(Omega~0,eta~0,I3+I4): " : "E: ";
    if (divergent()) r.add("E(Omega~0,eta~0,I3+I4)", E_partial.E, 1e-10 * E_partial.E, "analytic quadrature");
    for (auto& [name, v] : shown.parts) r.add(tag + name, v, 1e-10 * std::abs(v), "analytic quadrature");
    r.add("E(Omega~0,0,0)", E_omega.E, 1e-10 * E_omega.E, "analytic quadrature");
    r.add("E(0,I1,0)", E_I1.E, 1e-10 * E_I1.E, "analytic quadrature");
    r.add("E(0,I2,I4)", E_I2I4.E, 1e-10 * E_I2I4.E, "analytic quadrature");
    r.add("||I3||_H3(psi)", E_I3.H3psi_xi.value, 1e-10 * E_I3.H3psi_xi.value, "analytic quadrature");
    r.add("||I3||_C1", E_I3.C1_xi.value, 0.0, "sup over quadrature nodes");
    r.add("E(0,eta~1,0)", std::sqrt(std::max(0.0, E_trunc.E2 - E_trunc.parts[5].second - E_trunc.parts[6].second)),
          0.0, "analytic quadrature");
    if (divergent())
      r.add("||xi~1||_H3(psi)", INFINITY, INFINITY, div);
    else
      r.add("||xi~1||_H3(psi)", E_trunc.H3psi_xi.value, 0.0, "analytic quadrature");
    r.add("envelope", envelope, 0.0, "closed form");
    r.add("C (single point)", ratio(), 0.0, "ratio");
    r.add("sum-of-squares residual", shown.identity_residual(), 0.0, "identity");
    return r;
  }
};

/// Energy of the constructed 2D perturbation with the I1..I4 decomposition, in one quadrature pass.
/// If that pass diverges, a second pass leaves out the truncation part xi~1: if it converges, the
/// divergence is attributed to xi~1 and the finite parts are reported; otherwise the error propagates.
inline Smallness2D smallness_2d(const Boussinesq2D& B, const EnergyOptions& opt = {}, const PolarQuadOptions& qo = {}) {
  const auto start = std::chrono::steady_clock::now();
  const PerturbParams& p = B.params();
  Smallness2D s;
  s.params = p;
  s.envelope = envelope_2d(p);
  const double al = p.alpha;
  auto pass = [&](bool with_xi1) {
    EnergyAccumulator aE(al, opt), aO(al, opt), a1(al, opt), a24(al, opt), a3(al, opt), aT(al, opt);
    Boussinesq2D::NodeJets J;
    const Jet<3> zero(0.0);
    auto node = [&](double t, double u, double w) {
      B.node_jets(t, u, J, with_xi1);
      const Jet<3> PE[3] = {J.Om, J.eta, J.xi}, PO[3] = {J.Om, zero, zero}, P1[3] = {zero, J.I1, zero},
                   P24[3] = {zero, J.I2, J.I4}, P3[3] = {zero, zero, J.I3}, PT[3] = {zero, J.eta1, J.xi1};
      double mag = aE.add(PE, t, u, w);
      aO.add(PO, t, u, w);
      mag += a1.add(P1, t, u, w) + a24.add(P24, t, u, w) + a3.add(P3, t, u, w) + aT.add(PT, t, u, w);
      return mag;
    };
    auto ub = [&](double t, std::vector<double>& out) { B.u_breaks(t, out); };
    integrate_polar(node, ub, B.t_breaks(), qo, "2D energy");
    (with_xi1 ? s.E : s.E_partial) = aE.result();
    s.E_omega = aO.result();
    s.E_I1 = a1.result();
    s.E_I2I4 = a24.result();
    s.E_I3 = a3.result();
    s.E_trunc = aT.result();
  };
  if (!p.zero_perturbation) {
    try {
      pass(true);
    } catch (const DivergentIntegral& e) {
      pass(false);
      s.divergence = "||xi~1||_H3(psi) with xi~1 = d_y((chi(R/M) - 1) theta_bar); " + std::string(e.what());
      s.E = s.E_partial;
      s.E.E = s.E.E2 = INFINITY;
      s.E.H3psi_xi.value = INFINITY;
      for (auto& part : s.E.parts)
        if (part.first.find("xi") != std::string::npos && part.first.find("H3") != std::string::npos) part.second = INFINITY;
    }
  }
  s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return s;
}

inline NormReport smallness_report_2d(const PerturbParams& p) { return smallness_2d(Boussinesq2D(p)).report(); }

/// delta above min(1/4, 1/(4 C1)) under the strict policy.
class DeltaConstraintError : public ParameterError {
 public:
  DeltaConstraintError(const DeltaCheck& d)
      : ParameterError("delta = " + std::to_string(d.delta) + " violates delta < min(1/4, 1/(4 C1)) = " +
                       std::to_string(d.delta_max) + " with estimated C1 = " + std::to_string(d.C1) +
                       " (safety factor " + std::to_string(d.safety) + ")"),
        check_(d) {}
  double C1() const { return check_.C1; }
  const DeltaCheck& check() const { return check_; }

 private:
  DeltaCheck check_;
};

struct BoussinesqData {
  Field Omega0;  // Omega_bar + Omega~0, odd in x
  Field eta0;    // d_x theta0 = eta_bar + eta~0, odd in x
  Field xi0;     // d_y theta0 = xi_bar + xi~0, even in x
  Field theta0;  // chi(R/M) theta_hat, even in x
  C1Estimate c1;
  DeltaCheck delta;
  double theta_hat_min = 0.0;  // min of theta_hat over the grid nodes with chi(R/M) > 0
  nlohmann::ordered_json provenance;
};

/// Samples the 2D data on a polar grid. Under DeltaPolicy::strict a delta above the constraint
/// throws DeltaConstraintError; under DeltaPolicy::report the check is recorded in provenance.
inline BoussinesqData build_boussinesq_data(const PerturbParams& p, const PolarGrid& g,
                                            DeltaPolicy policy = DeltaPolicy::report) {
  const Boussinesq2D B(p);
  BoussinesqData d;
  if (!p.zero_perturbation) {
    d.c1 = B.estimate_C1();
    d.delta = B.check_delta(d.c1);
  } else {
    d.delta.delta = p.delta;
    d.delta.delta_max = 0.25;
    d.delta.ok = p.delta < 0.25;
  }
  if (policy == DeltaPolicy::strict && !d.delta.ok) throw DeltaConstraintError(d.delta);
  const double al = p.alpha;
  d.Omega0 = sample_polar(g, [&](double t, double u) { return B.profile().Omega(t, u) + B.Omega_tilde(t, u); }, al,
                          "Omega0", Parity::odd_x);
  d.theta0 = Field{g, std::vector<double>(g.size()), Parity::even_x, al, "theta0"};
  d.eta0 = Field{g, std::vector<double>(g.size()), Parity::odd_x, al, "eta0"};
  d.xi0 = Field{g, std::vector<double>(g.size()), Parity::even_x, al, "xi0"};
  d.theta_hat_min = INFINITY;
  const double logM = std::log(p.M);
  for (int i = 0; i < g.n_t; ++i)
    for (int j = 0; j < g.n_u; ++j) {
      const double t = g.t(i), u = g.u(j);
      if (t >= logM + kLn2) continue;  // chi(R/M) = 0
      const auto [lx, ly] = log_xy(t, u, al);
      const Jet<1> th = B.localized_theta_hat<1>(lx, ly);
      d.theta0.at(i, j) = th.value();
      // scaled coefficients carry x0 and y0; divide in log space
      const double cx = th.coef(1, 0), cy = th.coef(0, 1);
      d.eta0.at(i, j) = cx == 0.0 ? 0.0 : std::copysign(std::exp(std::log(std::abs(cx)) - lx), cx);
      d.xi0.at(i, j) = cy == 0.0 ? 0.0 : std::copysign(std::exp(std::log(std::abs(cy)) - ly), cy);
      const double hat = (B.theta_bar_jet<0>(lx, ly) + B.A_jet<0>(lx, ly)).value();
      d.theta_hat_min = std::min(d.theta_hat_min, hat);
    }
  for (const Field* f : {&d.Omega0, &d.theta0, &d.eta0, &d.xi0})
    for (double v : f->values)
      if (!std::isfinite(v)) throw DomainError("non-finite value in " + f->name);
  if (d.theta_hat_min < 0.5)
    throw DomainError("theta_hat drops to " + std::to_string(d.theta_hat_min) + " < 1/2 on the grid");
  d.provenance["params"] = p.to_json();
  d.provenance["grid"] = {{"t_min", g.t_min}, {"t_max", g.t_max}, {"n_t", g.n_t},
                          {"u_min", g.u_min}, {"u_max", g.u_max}, {"n_u", g.n_u}};
  d.provenance["C1"] = d.c1.to_json();
  d.provenance["delta_check"] = d.delta.to_json();
  d.provenance["delta_policy"] = policy == DeltaPolicy::strict ? "strict" : "report";
  d.provenance["theta_hat_min"] = d.theta_hat_min;
  d.provenance["tables"] = B.table_info();
  return d;
}

}  // namespace blowlab
