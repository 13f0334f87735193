#pragma once
// Pseudo-spectral 2D Boussinesq evolution in the upper half plane,
//   omega_t + u . grad omega = theta_x,  theta_t + u . grad theta = 0,
//   u = (-psi_y, psi_x),  -Lap psi = omega,
// on the box [0, L]^2 of biotsavart.hpp. omega is odd in x and odd across the wall (sin_sin);
// theta is even in x and odd across the wall (cos_sin), so theta must vanish on y = 0.
// RK4 in time, 2/3-rule dealiasing, velocity recomputed at every stage.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "blowlab/biotsavart.hpp"
#include "blowlab/cutoff.hpp"
#include "blowlab/error.hpp"
#include "blowlab/grid.hpp"
#include "blowlab/holder.hpp"
#include "blowlab/norms.hpp"

namespace blowlab {

struct BoussinesqState {
  Spectrum omega;  // sin_sin
  Spectrum theta;  // cos_sin
  double t = 0.0;
};

struct SolverConfig {
  double horizon = 0.5;
  double dt = 0.0;               // 0: chosen from the CFL number at the start of the run
  double cfl = 0.5;              // dt <= cfl h / max(|u1| + |u2|)
  double dt_max = 0.01;
  bool transport_only = false;   // freeze omega (theta is transported by a fixed velocity)
  double velocity_sign = 1.0;    // -1 reverses the transporting velocity (with transport_only)
  std::vector<double> q = {2.0, 4.0};
  int snapshot_every = 0;        // steps between snapshots (0: none)
  int x_norm_every = 0;          // steps between X_sigma samples (0: first and last step only)
  std::vector<int> x_norm_k = {0, 1, 2};
  double x_sigma = 2.0, x_alpha = 0.5;
  double x_domain = 4.0;         // X_sigma norms are sampled on [-d, d] x [0, d]
  PairSchedule x_pairs{24, 48, 16, 512, 1.0, 1e-3, 0.0, 0.0, 1};
  double support_tol = 1e-6;     // relative level that defines the support bounding box
  double bounded_growth = 10.0;  // X_sigma growth factor below which a run is called bounded
};

struct DiagRow {
  double t = 0.0;
  double grad_theta_inf = 0.0, omega_inf = 0.0;
  std::vector<double> omega_lq;
  double theta_min = 0.0, theta_max = 0.0, theta_l2 = 0.0;
  double kinetic = 0.0;        // (1/2) ||u||^2 over the half plane
  double buoyancy_work = 0.0;  // int theta u2 over the half plane
  double bkm = 0.0;            // trapezoid of ||grad theta||_inf up to t
  std::array<double, 4> support{0.0, 0.0, 0.0, 0.0};  // x0, x1, y0, y1 where |omega| or |theta| is above tolerance
};

struct XNormSample {
  double t = 0.0;
  int k = 0;
  double value = 0.0;
};

struct Diagnostics {
  std::vector<double> q;
  std::vector<DiagRow> rows;
  std::vector<XNormSample> xnorms;
  bool completed = false;
  std::string termination;  // empty, or the reason the run stopped early

  std::string to_csv() const {
    std::ostringstream os;
    os << "t,grad_theta_inf,omega_inf";
    for (double qq : q) os << ",omega_L" << detail::fmt_double(qq);
    os << ",theta_min,theta_max,theta_L2,kinetic,buoyancy_work,bkm,support_x0,support_x1,support_y0,support_y1\r\n";
    for (auto& r : rows) {
      os << detail::fmt_double(r.t) << ',' << detail::fmt_double(r.grad_theta_inf) << ',' << detail::fmt_double(r.omega_inf);
      for (double v : r.omega_lq) os << ',' << detail::fmt_double(v);
      os << ',' << detail::fmt_double(r.theta_min) << ',' << detail::fmt_double(r.theta_max) << ',' << detail::fmt_double(r.theta_l2) << ','
         << detail::fmt_double(r.kinetic) << ',' << detail::fmt_double(r.buoyancy_work) << ',' << detail::fmt_double(r.bkm);
      for (double v : r.support) os << ',' << detail::fmt_double(v);
      os << "\r\n";
    }
    return os.str();
  }
};

struct BkmVerdict {
  double bkm = 0.0;
  double horizon = 0.0;
  double x_growth = 1.0;  // largest last/first ratio over the tracked X_sigma norms
  std::string verdict;    // bounded, growing or inconclusive
  nlohmann::json to_json() const {
    nlohmann::json g = x_growth;
    if (!std::isfinite(x_growth)) g = "inf";
    return {{"bkm_integral", bkm}, {"horizon", horizon}, {"x_sigma_growth", g}, {"verdict", verdict}};
  }
};

class BoussinesqSolver {
 public:
  BoussinesqSolver(int n, double L, SolverConfig cfg = {}) : sb_(n, L), cfg_(std::move(cfg)) {}

  const SpectralBox& box() const { return sb_; }
  const SolverConfig& config() const { return cfg_; }

  /// Initial state from grid fields (omega: sin_sin or odd_x, theta: cos_sin or even_x).
  BoussinesqState initial(const Field& omega, const Field& theta) const {
    Field w = omega, th = theta;
    if (w.parity == Parity::odd_x) w.parity = Parity::sin_sin;
    if (th.parity == Parity::even_x) th.parity = Parity::cos_sin;
    if (w.parity != Parity::sin_sin) throw DomainError("omega must be odd in x (sin_sin)");
    if (th.parity != Parity::cos_sin) throw DomainError("theta must be even in x and vanish on the wall (cos_sin)");
    for (const Field* f : {&w, &th})
      for (double v : f->values)
        if (!std::isfinite(v)) throw DomainError("initial field '" + f->name + "' has non-finite values");
    BoussinesqState s{analyze(sb_, w), analyze(sb_, th), 0.0};
    sb_.dealias(s.omega);
    sb_.dealias(s.theta);
    return s;
  }

  /// Initial state from functions of (x, y); omega must be odd in x and y, theta even in x and odd in y.
  template <class Fw, class Ft>
  BoussinesqState initial_fn(Fw&& omega, Ft&& theta) const {
    const BoxGrid g = sb_.grid();
    return initial(sample_box(g, omega, Parity::sin_sin, "omega"), sample_box(g, theta, Parity::cos_sin, "theta"));
  }

  struct Velocity {
    std::vector<double> u1, u2;
  };

  Velocity velocity_of(const Spectrum& omega) const {
    const Spectrum psi = stream_spectrum(sb_, omega);
    Spectrum u1 = sb_.derivative(psi, 1);
    for (double& v : u1.c) v = -v;
    return {sb_.synthesize(u1), sb_.synthesize(sb_.derivative(psi, 0))};
  }

  double max_speed(const BoussinesqState& s) const {
    const Velocity u = velocity_of(s.omega);
    double m = 0.0;
    for (size_t k = 0; k < u.u1.size(); ++k) m = std::max(m, std::abs(u.u1[k]) + std::abs(u.u2[k]));
    return m * std::abs(cfg_.velocity_sign);
  }

  /// Largest dt allowed by the CFL number.
  double cfl_dt(const BoussinesqState& s) const {
    const double m = max_speed(s);
    return m > 0.0 ? cfg_.cfl * sb_.h() / m : INFINITY;
  }

  /// One RK4 step.
  BoussinesqState step(const BoussinesqState& s, double dt) const {
    const double limit = cfl_dt(s);
    if (dt > limit * (1.0 + 1e-12))
      throw ParameterError("CFL violated: dt = " + detail::fmt_double(dt) + " exceeds " + detail::fmt_double(limit) +
                           "; use dt <= " + detail::fmt_double(limit));
    BoussinesqState k1 = rhs(s), k2 = rhs(axpy(s, 0.5 * dt, k1)), k3 = rhs(axpy(s, 0.5 * dt, k2)),
                    k4 = rhs(axpy(s, dt, k3));
    BoussinesqState r = s;
    for (size_t k = 0; k < r.omega.c.size(); ++k) {
      r.omega.c[k] += dt / 6.0 * (k1.omega.c[k] + 2.0 * k2.omega.c[k] + 2.0 * k3.omega.c[k] + k4.omega.c[k]);
      r.theta.c[k] += dt / 6.0 * (k1.theta.c[k] + 2.0 * k2.theta.c[k] + 2.0 * k3.theta.c[k] + k4.theta.c[k]);
    }
    r.t = s.t + dt;
    sb_.dealias(r.omega);
    sb_.dealias(r.theta);
    for (size_t k = 0; k < r.omega.c.size(); ++k)
      if (!std::isfinite(r.omega.c[k]) || !std::isfinite(r.theta.c[k]))
        throw NumericalDivergence("non-finite values after a step (blowup suspected)", r.t);
    return r;
  }

  /// Time derivative of the state.
  BoussinesqState rhs(const BoussinesqState& s) const {
    const Velocity u = velocity_of(s.omega);
    const double sg = cfg_.velocity_sign;
    BoussinesqState d{Spectrum{std::vector<double>(sb_.size(), 0.0), Trig::sine, Trig::sine},
                      Spectrum{std::vector<double>(sb_.size(), 0.0), Trig::cosine, Trig::sine}, 0.0};
    const Spectrum tx = sb_.derivative(s.theta, 0);
    {
      const auto ty = sb_.synthesize(sb_.derivative(s.theta, 1));
      const auto txg = sb_.synthesize(tx);
      std::vector<double> nl(sb_.size());
      for (size_t k = 0; k < nl.size(); ++k) nl[k] = sg * (u.u1[k] * txg[k] + u.u2[k] * ty[k]);
      d.theta = sb_.analyze(nl, Trig::cosine, Trig::sine);
      for (double& v : d.theta.c) v = -v;
    }
    if (!cfg_.transport_only) {
      const auto wx = sb_.synthesize(sb_.derivative(s.omega, 0));
      const auto wy = sb_.synthesize(sb_.derivative(s.omega, 1));
      std::vector<double> nl(sb_.size());
      for (size_t k = 0; k < nl.size(); ++k) nl[k] = u.u1[k] * wx[k] + u.u2[k] * wy[k];
      d.omega = sb_.analyze(nl, Trig::sine, Trig::sine);
      for (size_t k = 0; k < d.omega.c.size(); ++k) d.omega.c[k] = tx.c[k] - d.omega.c[k];
    }
    sb_.dealias(d.omega);
    sb_.dealias(d.theta);
    return d;
  }

  /// Per-step diagnostics (bkm is filled in by run()).
  DiagRow diagnose(const BoussinesqState& s) const {
    DiagRow r;
    r.t = s.t;
    const BoxGrid g = sb_.grid();
    const auto w = sb_.synthesize(s.omega), th = sb_.synthesize(s.theta);
    const auto tx = sb_.synthesize(sb_.derivative(s.theta, 0)), ty = sb_.synthesize(sb_.derivative(s.theta, 1));
    const Velocity u = velocity_of(s.omega);
    const int n = sb_.n();
    const double h2 = g.h() * g.h();
    std::vector<double> lq(cfg_.q.size(), 0.0);
    double th2 = 0.0, work = 0.0, wmax = 0.0, tmax = 0.0;
    r.theta_min = INFINITY;
    r.theta_max = -INFINITY;
    for (int a = 0; a <= n; ++a)
      for (int b = 0; b <= n; ++b) {
        const size_t k = sb_.idx(a, b);
        // trapezoid weight; the half plane is twice the quadrant
        const double wt = 2.0 * h2 * (a == 0 || a == n ? 0.5 : 1.0) * (b == 0 || b == n ? 0.5 : 1.0);
        r.grad_theta_inf = std::max(r.grad_theta_inf, std::hypot(tx[k], ty[k]));
        r.omega_inf = std::max(r.omega_inf, std::abs(w[k]));
        for (size_t m = 0; m < lq.size(); ++m) lq[m] += wt * std::pow(std::abs(w[k]), cfg_.q[m]);
        r.theta_min = std::min(r.theta_min, th[k]);
        r.theta_max = std::max(r.theta_max, th[k]);
        th2 += wt * th[k] * th[k];
        work += wt * th[k] * u.u2[k];
        wmax = std::max(wmax, std::abs(w[k]));
        tmax = std::max(tmax, std::abs(th[k]));
      }
    for (size_t m = 0; m < lq.size(); ++m) r.omega_lq.push_back(std::pow(lq[m], 1.0 / cfg_.q[m]));
    r.theta_l2 = std::sqrt(th2);
    r.buoyancy_work = work;
    // (1/2) int_{half plane} |u|^2 = int_{quadrant} psi omega, by Parseval
    const Spectrum psi = stream_spectrum(sb_, s.omega);
    double ke = 0.0;
    for (size_t k = 0; k < psi.c.size(); ++k) ke += psi.c[k] * s.omega.c[k];
    r.kinetic = ke * sb_.L() * sb_.L() / 4.0;
    // support box of the stored quadrant
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (int a = 0; a <= n; ++a)
      for (int b = 0; b <= n; ++b) {
        const size_t k = sb_.idx(a, b);
        if (std::abs(w[k]) > cfg_.support_tol * wmax || std::abs(th[k]) > cfg_.support_tol * tmax) {
          x0 = std::min(x0, g.x(a));
          x1 = std::max(x1, g.x(a));
          y0 = std::min(y0, g.x(b));
          y1 = std::max(y1, g.x(b));
        }
      }
    if (x0 <= x1) r.support = {x0, x1, y0, y1};
    return r;
  }

  /// ||omega||_{X_sigma^{k,alpha}} sampled on a pair set of the upper half plane.
  std::vector<double> x_norms(const BoussinesqState& s) const {
    if (cfg_.x_norm_k.empty()) return {};
    const PairSet ps = make_pair_set(Domain{-cfg_.x_domain, cfg_.x_domain, 0.0, cfg_.x_domain}, cfg_.x_pairs);
    SampledFn sw{&ps, {}};
    for (auto& p : ps.pts) sw.jets.push_back(sb_.point_jet(s.omega, p[0], p[1]));
    std::vector<double> v;
    for (int k : cfg_.x_norm_k) v.push_back(x_norm(sw, k, cfg_.x_alpha, {WeightFn::x_sigma, cfg_.x_sigma}));
    return v;
  }

  struct RunResult {
    Diagnostics diag;
    BoussinesqState last;
    int steps = 0;
  };

  /// Advances to the horizon. A non-finite step ends the run; the last valid state and the
  /// diagnostics so far are kept, and `termination` records the reason.
  RunResult run(BoussinesqState s,
                const std::function<void(const BoussinesqState&, int)>& on_snapshot = nullptr) const {
    RunResult res;
    res.diag.q = cfg_.q;
    double dt = cfg_.dt > 0.0 ? cfg_.dt : std::min(cfg_.dt_max, cfl_dt(s));
    const int nsteps = std::max(1, static_cast<int>(std::ceil(cfg_.horizon / dt - 1e-9)));
    dt = cfg_.horizon / nsteps;
    auto record_x = [&](const BoussinesqState& st) {
      const auto v = x_norms(st);
      for (size_t m = 0; m < v.size(); ++m) res.diag.xnorms.push_back({st.t, cfg_.x_norm_k[m], v[m]});
    };
    DiagRow row = diagnose(s);
    res.diag.rows.push_back(row);
    record_x(s);
    if (on_snapshot) on_snapshot(s, 0);
    for (int n = 1; n <= nsteps; ++n) {
      BoussinesqState next;
      try {
        next = step(s, dt);
      } catch (const NumericalDivergence& e) {
        res.diag.termination = e.what();
        res.last = s;
        res.steps = n - 1;
        return res;
      }
      s = std::move(next);
      DiagRow r = diagnose(s);
      r.bkm = res.diag.rows.back().bkm + 0.5 * dt * (r.grad_theta_inf + res.diag.rows.back().grad_theta_inf);
      res.diag.rows.push_back(r);
      if ((cfg_.x_norm_every > 0 && n % cfg_.x_norm_every == 0) || n == nsteps) record_x(s);
      if (on_snapshot && cfg_.snapshot_every > 0 && n % cfg_.snapshot_every == 0) on_snapshot(s, n);
    }
    res.diag.completed = true;
    res.last = s;
    res.steps = nsteps;
    return res;
  }

  /// Grid fields of a state.
  Field omega_field(const BoussinesqState& s) const { return to_field(sb_, s.omega, "omega"); }
  Field theta_field(const BoussinesqState& s) const { return to_field(sb_, s.theta, "theta"); }

 private:
  SpectralBox sb_;
  SolverConfig cfg_;

  static BoussinesqState axpy(const BoussinesqState& s, double a, const BoussinesqState& d) {
    BoussinesqState r = s;
    for (size_t k = 0; k < r.omega.c.size(); ++k) {
      r.omega.c[k] += a * d.omega.c[k];
      r.theta.c[k] += a * d.theta.c[k];
    }
    return r;
  }
};

struct BoxPrep {
  double mollify = 0.1;        // Gaussian filter exp(-(k ell)^2 / 2) on the spectrum
  double wall_layer = 0.2;     // fields are multiplied by 1 - exp(-(y / ell_w)^2)
  double window = 0.4;         // and by chi(r / (window L)), which vanishes beyond 2 window L
};

/// Box fields (omega sin_sin, theta cos_sin) from point samplers of the quadrant x, y > 0, made
/// compatible with the representation: tapered to zero on the wall and toward the box edge,
/// then mollified. Samplers are not called where the taper vanishes.
inline std::pair<Field, Field> prepare_box_data(const SpectralBox& sb, const std::function<double(double, double)>& omega,
                                                const std::function<double(double, double)>& theta,
                                                const BoxPrep& o = {}) {
  const BoxGrid g = sb.grid();
  const double rw = o.window * sb.L();
  auto taper = [&](double x, double y) {
    const double wall = o.wall_layer > 0.0 ? -std::expm1(-(y / o.wall_layer) * (y / o.wall_layer)) : 1.0;
    return wall * chi(std::hypot(x, y) / rw);
  };
  Field w{g, std::vector<double>(g.size(), 0.0), Parity::sin_sin, 0.0, "omega"};
  Field th{g, std::vector<double>(g.size(), 0.0), Parity::cos_sin, 0.0, "theta"};
  // points on x = 0 are sampled just inside the quadrant
  const double xmin = 1e-9 * g.h();
  for (int a = 0; a <= g.n; ++a)
    for (int b = 1; b < g.n; ++b) {
      const double x = std::max(g.x(a), xmin), y = g.x(b), tp = taper(x, y);
      if (tp == 0.0) continue;
      if (a > 0 && a < g.n) w.at(a, b) = tp * omega(x, y);
      th.at(a, b) = tp * theta(x, y);
    }
  for (Field* f : {&w, &th}) {
    Spectrum s = analyze(sb, *f);
    for (int a = 0; a <= g.n; ++a)
      for (int b = 0; b <= g.n; ++b) {
        const double k2 = sb.wavenumber(a) * sb.wavenumber(a) + sb.wavenumber(b) * sb.wavenumber(b);
        s.c[sb.idx(a, b)] *= std::exp(-0.5 * k2 * o.mollify * o.mollify);
      }
    f->values = sb.synthesize(s);
  }
  return {w, th};
}

/// BKM integral, X_sigma growth over the run, and a verdict.
inline BkmVerdict bkm_verdict(const Diagnostics& d, double horizon, double bounded_growth = 10.0) {
  BkmVerdict v;
  v.horizon = horizon;
  v.bkm = d.rows.empty() ? 0.0 : d.rows.back().bkm;
  std::map<int, std::pair<double, double>> first_last;
  for (auto& x : d.xnorms) {
    auto it = first_last.find(x.k);
    if (it == first_last.end()) first_last[x.k] = {x.value, x.value};
    else it->second.second = x.value;
  }
  if (!first_last.empty()) v.x_growth = 0.0;
  for (auto& [k, fl] : first_last) {
    const double g = fl.first > 0.0 ? fl.second / fl.first : (fl.second > 0.0 ? INFINITY : 1.0);
    v.x_growth = std::max(v.x_growth, g);
  }
  const bool reached = d.completed && !d.rows.empty() && d.rows.back().t >= horizon * (1.0 - 1e-9);
  if (!reached || !std::isfinite(v.bkm)) v.verdict = "inconclusive";
  else v.verdict = v.x_growth <= bounded_growth ? "bounded" : "growing";
  return v;
}

/// Energy balance d/dt (1/2)||u||^2 = -int theta u2 (with u = (-psi_y, psi_x), -Lap psi = omega):
/// |K(T) - K(0) + int_0^T W dt| / max(int_0^T |W| dt, K(0)), with W integrated by the trapezoid rule.
inline double energy_balance_residual(const Diagnostics& d) {
  if (d.rows.size() < 2) return 0.0;
  double iw = 0.0, iabs = 0.0;
  for (size_t k = 1; k < d.rows.size(); ++k) {
    const double h = d.rows[k].t - d.rows[k - 1].t;
    iw += 0.5 * h * (d.rows[k].buoyancy_work + d.rows[k - 1].buoyancy_work);
    iabs += 0.5 * h * (std::abs(d.rows[k].buoyancy_work) + std::abs(d.rows[k - 1].buoyancy_work));
  }
  const double dk = d.rows.back().kinetic - d.rows.front().kinetic;
  const double scale = std::max(iabs, std::abs(d.rows.front().kinetic));
  return scale > 0.0 ? std::abs(dk + iw) / scale : 0.0;
}

/// L^2 distance between two states on possibly different boxes of equal L (modes compared by index).
inline double spectral_distance(const SpectralBox& a, const Spectrum& sa, const SpectralBox& b, const Spectrum& sb) {
  if (a.L() != b.L()) throw ParameterError("states live on boxes of different size");
  const int n = std::max(a.n(), b.n());
  double s = 0.0;
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) {
      const double va = (i <= a.n() && j <= a.n()) ? sa.c[a.idx(i, j)] : 0.0;
      const double vb = (i <= b.n() && j <= b.n()) ? sb.c[b.idx(i, j)] : 0.0;
      s += (va - vb) * (va - vb);
    }
  return std::sqrt(s) * a.L() / 2.0;
}

struct ConvergenceReport {
  std::vector<int> n;
  std::vector<double> dt;
  double e_coarse = 0.0, e_fine = 0.0;  // |S_n - S_2n|, |S_2n - S_4n| (omega and theta together)
  double order = 0.0;
};

/// Self-convergence between resolutions n0, 2 n0, 4 n0 with dt halved together with h.
template <class Fw, class Ft>
ConvergenceReport self_convergence(int n0, double L, double dt0, double horizon, Fw&& omega, Ft&& theta,
                                   SolverConfig cfg = {}) {
  ConvergenceReport rep;
  std::vector<std::unique_ptr<BoussinesqSolver>> solvers;
  std::vector<BoussinesqState> finals;
  cfg.horizon = horizon;
  cfg.x_norm_k.clear();
  for (int lvl = 0; lvl < 3; ++lvl) {
    const int n = n0 << lvl;
    cfg.dt = dt0 / (1 << lvl);
    solvers.push_back(std::make_unique<BoussinesqSolver>(n, L, cfg));
    auto res = solvers.back()->run(solvers.back()->initial_fn(omega, theta));
    if (!res.diag.completed) throw NumericalDivergence("self-convergence run stopped: " + res.diag.termination, res.last.t);
    finals.push_back(res.last);
    rep.n.push_back(n);
    rep.dt.push_back(cfg.dt);
  }
  auto dist = [&](int i, int j) {
    const double dw = spectral_distance(solvers[i]->box(), finals[i].omega, solvers[j]->box(), finals[j].omega);
    const double dth = spectral_distance(solvers[i]->box(), finals[i].theta, solvers[j]->box(), finals[j].theta);
    return std::hypot(dw, dth);
  };
  rep.e_coarse = dist(0, 1);
  rep.e_fine = dist(1, 2);
  rep.order = std::log2(rep.e_coarse / rep.e_fine);
  return rep;
}

}  // namespace blowlab
