#pragma once
// Weighted norms in the modified polar variables: H^m(rho), C^1 and the energy E,
// on grid fields and on analytic functions given through polar jets. The Cartesian
// weighted Hoelder norms live in holder.hpp.

#include <algorithm>
#include <array>
#include <cfloat>
#include <random>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "blowlab/coords.hpp"
#include "blowlab/error.hpp"
#include "blowlab/grid.hpp"
#include "blowlab/holder.hpp"
#include "blowlab/jet.hpp"
#include "blowlab/lineint.hpp"
#include "blowlab/operators.hpp"
#include "blowlab/polarquad.hpp"

namespace blowlab {

// ---- reports ----

struct NormEntry {
  double value = 0.0;
  double error_estimate = 0.0;
  std::string strategy;
};

/// Ordered name -> entry map emitted as {name: {value, error_estimate, strategy}}.
struct NormReport {
  std::vector<std::pair<std::string, NormEntry>> entries;

  void add(const std::string& name, double value, double err, const std::string& strategy) {
    entries.emplace_back(name, NormEntry{value, err, strategy});
  }
  const NormEntry* find(const std::string& name) const {
    for (auto& [k, v] : entries)
      if (k == name) return &v;
    return nullptr;
  }
  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (auto& [k, v] : entries)
      j[k] = {{"value", v.value}, {"error_estimate", v.error_estimate}, {"strategy", v.strategy}};
    return j;
  }
  /// RFC-4180 CSV with header name,value,error_estimate,strategy.
  std::string to_csv() const;
};

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string o = "\"";
  for (char c : s) {
    if (c == '"') o += '"';
    o += c;
  }
  return o + "\"";
}

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline std::string NormReport::to_csv() const {
  std::string out = "name,value,error_estimate,strategy\r\n";
  for (auto& [k, v] : entries)
    out += detail::csv_field(k) + "," + detail::fmt_double(v.value) + "," + detail::fmt_double(v.error_estimate) +
           "," + detail::csv_field(v.strategy) + "\r\n";
  return out;
}

// ---- weights of H^m ----

/// (rho1, rho2) pairs: phi = ((1+R)^4/R^4 sin(2b)^{-s}, (1+R)^4/R^4 sin(2b)^{-g}) and
/// psi = ((1+R)^4/R^4 (sin b cos b)^{-s}, (1+R)^4/R^4 sin(b)^{-s} cos(b)^{-g}).
enum class HWeight { phi, psi };

inline std::string to_string(HWeight w) { return w == HWeight::phi ? "phi" : "psi"; }

inline double gamma_weight(double alpha) { return 1.0 + alpha / 10.0; }

/// log rho1 and log rho2 at (t, u) given log sin(beta) and log cos(beta).
inline void log_h_weights(HWeight w, double alpha, double t, double ls, double lc, double& l1, double& l2) {
  const double radial = 4.0 * (softplus(t) - t);
  const double s = weights::kSigma, g = gamma_weight(alpha);
  if (w == HWeight::phi) {
    const double l2b = kLn2 + ls + lc;
    l1 = radial - s * l2b;
    l2 = radial - g * l2b;
  } else {
    l1 = radial - s * (ls + lc);
    l2 = radial - s * ls - g * lc;
  }
}

inline WeightSpec h_weight_spec(HWeight w, double alpha, bool second) {
  if (w == HWeight::phi) return second ? weights::phi2(alpha) : weights::phi1();
  return second ? weights::psi2(alpha) : weights::psi1();
}

struct HTerm {
  int i = 0;  // D_R power
  int j = 0;  // D_beta power
  bool second = false;
  std::string name;
};

/// Terms of ||f||_{H^m}: D_R^k (k <= m) against rho1 and D_R^i D_beta^{j+1} (i + j <= m - 1) against rho2.
inline std::vector<HTerm> h_terms(int m) {
  if (m < 0 || m > 3) throw ParameterError("H^m norms are available for 0 <= m <= 3");
  std::vector<HTerm> t;
  for (int k = 0; k <= m; ++k) t.push_back({k, 0, false, "D_R^" + std::to_string(k)});
  for (int s = 0; s <= m - 1; ++s)
    for (int i = 0; i <= s; ++i) {
      const int j = s - i + 1;
      t.push_back({i, j, true, "D_R^" + std::to_string(i) + " D_beta^" + std::to_string(j)});
    }
  return t;
}

struct HNormResult {
  double value = 0.0;                 // sum of the component L^2 norms
  std::vector<std::string> names;     // per component
  std::vector<double> components;     // per component L^2 norm
  double error = 0.0;
};

/// Grid route: discrete derivatives and the grid quadrature.
inline HNormResult h_norm(const Field& f, int m, HWeight w, double alpha = -1.0) {
  if (!f.is_polar()) throw DomainError("H^m norms need a polar field");
  if (alpha <= 0.0) alpha = f.alpha;
  HNormResult r;
  for (const HTerm& term : h_terms(m)) {
    Field d = (term.i == 0 && term.j == 0) ? f : discrete_deriv(f, {term.i, term.j});
    for (double& v : d.values) v *= v;
    Integral I;
    try {
      I = integrate(d, h_weight_spec(w, alpha, term.second));
    } catch (const DivergentIntegral& e) {
      throw DivergentIntegral("H^" + std::to_string(m) + "(" + to_string(w) + ") term " + term.name + ": " + e.name(),
                              e.trend());
    }
    const double c = std::sqrt(std::max(0.0, I.value));
    r.names.push_back(term.name);
    r.components.push_back(c);
    r.value += c;
    r.error += c > 0.0 ? I.error / (2.0 * c) : std::sqrt(I.error);
  }
  return r;
}

/// Running sums of squared H^m components for the analytic route.
class HAccumulator {
 public:
  HAccumulator(int m, HWeight w, double alpha) : terms_(h_terms(m)), w_(w), alpha_(alpha), sums_(terms_.size(), 0.0) {}

  /// Adds one quadrature node: polar jet P (d_t, d_u), weight wq (per dt du). Returns |contribution|.
  template <int N>
  double add(const Jet<N>& P, double t, double ls, double lc, double wq) {
    double l1, l2;
    log_h_weights(w_, alpha_, t, ls, lc, l1, l2);
    const double la = t + ls + lc;  // dR dbeta per dt du
    double mag = 0.0;
    for (size_t k = 0; k < terms_.size(); ++k) {
      const HTerm& h = terms_[k];
      const double d = polar_deriv(P, h.i, h.j);
      if (d == 0.0) continue;
      const double c = wq * std::exp(2.0 * std::log(std::abs(d)) + (h.second ? l2 : l1) + la);
      sums_[k] += c;
      mag += c;
    }
    return mag;
  }

  HNormResult result(double rel_err = 1e-10) const {
    HNormResult r;
    for (size_t k = 0; k < terms_.size(); ++k) {
      const double c = std::sqrt(std::max(0.0, sums_[k]));
      r.names.push_back(terms_[k].name);
      r.components.push_back(c);
      r.value += c;
    }
    r.error = rel_err * r.value;
    return r;
  }

 private:
  std::vector<HTerm> terms_;
  HWeight w_;
  double alpha_;
  std::vector<double> sums_;
};

/// Analytic route: `src(t, u)` returns a polar Jet<N> (N >= m) of the function.
template <class Src, class UB>
HNormResult h_norm_fn(const Src& src, int m, HWeight w, double alpha, const std::vector<double>& t_breaks, UB& ub,
                      const PolarQuadOptions& o = {}) {
  HAccumulator acc(m, w, alpha);
  auto node = [&](double t, double u, double wq) {
    const auto P = src(t, u);
    return acc.add(P, t, log_sin_beta(u), log_cos_beta(u), wq);
  };
  integrate_polar(node, ub, t_breaks, o, "H^m norm");
  return acc.result();
}

// ---- C^1 ----

struct C1Result {
  double value = 0.0;
  double sup_f = 0.0;   // ||f||_inf
  double sup_DR = 0.0;  // ||(1+R)/R D_R f||_inf
  double sup_Db = 0.0;  // ||(1 + (R sin(2b)^alpha)^{-1/40}) D_beta f||_inf
  bool bounded = true;
  std::string note;
};

/// Running sups of the three C^1 terms.
class C1Accumulator {
 public:
  explicit C1Accumulator(double alpha) : alpha_(alpha) {}

  template <int N>
  void add(const Jet<N>& P, double t, double ls, double lc) {
    r_.sup_f = std::max(r_.sup_f, std::abs(P.value()));
    const double dr = polar_deriv(P, 1, 0), db = polar_deriv(P, 0, 1);
    if (dr != 0.0) r_.sup_DR = std::max(r_.sup_DR, std::exp(std::log(std::abs(dr)) + softplus(-t)));
    if (db != 0.0) {
      const double l2b = kLn2 + ls + lc;
      r_.sup_Db = std::max(r_.sup_Db, std::exp(std::log(std::abs(db)) + softplus(-(t + alpha_ * l2b) / 40.0)));
    }
  }
  C1Result result() const {
    C1Result r = r_;
    r.value = r.sup_f + r.sup_DR + r.sup_Db;
    return r;
  }

 private:
  double alpha_;
  C1Result r_;
};

/// Grid route: sups over the nodes; a sup attained on the outermost rows while still growing
/// toward the edge is reported as unbounded.
inline C1Result c1_norm(const Field& f, double alpha = -1.0) {
  if (!f.is_polar()) throw DomainError("C^1 norm needs a polar field");
  if (alpha <= 0.0) alpha = f.alpha;
  const PolarGrid& g = f.polar();
  const Field dr = discrete_deriv(f, {1, 0}), db = discrete_deriv(f, {0, 1});
  C1Result r;
  // derivative values at the roundoff level of the stencils are treated as zero
  double fmax = 0.0;
  for (double v : f.values) fmax = std::max(fmax, std::abs(v));
  const double floor_r = 64.0 * DBL_EPSILON * fmax / g.h_t(), floor_b = 128.0 * DBL_EPSILON * fmax / g.h_u();
  std::vector<double> row_sup(g.n_t, 0.0);
  for (int i = 0; i < g.n_t; ++i)
    for (int j = 0; j < g.n_u; ++j) {
      const double t = g.t(i), u = g.u(j);
      const double a = std::abs(f.at(i, j));
      const double vr = std::abs(dr.at(i, j)), vb = std::abs(db.at(i, j));
      const double b = vr > floor_r ? vr * std::exp(softplus(-t)) : 0.0;
      const double c = vb > floor_b ? vb * std::exp(softplus(-(t + alpha * std::log(sin2_beta(u))) / 40.0)) : 0.0;
      r.sup_f = std::max(r.sup_f, a);
      r.sup_DR = std::max(r.sup_DR, b);
      r.sup_Db = std::max(r.sup_Db, c);
      row_sup[i] = std::max({row_sup[i], b, c});
    }
  r.value = r.sup_f + r.sup_DR + r.sup_Db;
  // growth toward R -> 0 on the first rows signals an unbounded weighted derivative
  if (row_sup[0] > row_sup[1] && row_sup[1] > row_sup[2] && row_sup[0] >= 0.999 * std::max(r.sup_DR, r.sup_Db) &&
      row_sup[0] > 0.0) {
    r.bounded = false;
    r.note = "unbounded C^1: weighted derivative grows toward R -> 0";
  }
  return r;
}

// ---- energy ----

struct EnergyOptions {
  bool eta_squared = false;  // use ||eta||_{H^3}^2 instead of the unsquared term
};

struct EnergyReport {
  double E = 0.0;
  double E2 = 0.0;
  std::vector<std::pair<std::string, double>> parts;  // the seven summands of E^2
  HNormResult H3_omega, H3_eta, H3psi_xi;
  C1Result C1_xi;
  double L12 = 0.0;
  bool eta_squared = false;

  /// |E^2 - sum of parts| / max(E^2, tiny).
  double identity_residual() const {
    double s = 0.0;
    for (auto& p : parts) s += p.second;
    return std::abs(E2 - s) / std::max(E2, 1e-300);
  }
  NormReport report() const {
    NormReport r;
    r.add("E", E, 0.0, "sum of parts");
    for (auto& p : parts) r.add(p.first, p.second, 0.0, "quadrature");
    return r;
  }
};

inline const char* kEnergyPartNames[7] = {"L2D12(Omega)(0)^2",
                                          "int Omega^2 (R^-3+1) sin(2b)",
                                          "int eta^2 (R^-4+R) / Gamma",
                                          "||Omega||_H3^2",
                                          "||eta||_H3",
                                          "||xi||_H3(psi)^2",
                                          "alpha ||xi||_C1^2"};

inline EnergyReport assemble_energy(double L12, double l2o, double l2e, const HNormResult& ho, const HNormResult& he,
                                    const HNormResult& hx, const C1Result& cx, double alpha, bool eta_squared) {
  EnergyReport r;
  r.L12 = L12;
  r.H3_omega = ho;
  r.H3_eta = he;
  r.H3psi_xi = hx;
  r.C1_xi = cx;
  r.eta_squared = eta_squared;
  const double vals[7] = {L12 * L12,
                          l2o,
                          l2e,
                          ho.value * ho.value,
                          eta_squared ? he.value * he.value : he.value,
                          hx.value * hx.value,
                          alpha * cx.value * cx.value};
  for (int k = 0; k < 7; ++k) {
    std::string name = kEnergyPartNames[k];
    if (k == 4 && eta_squared) name = "||eta||_H3^2";
    r.parts.emplace_back(name, vals[k]);
    r.E2 += vals[k];
  }
  r.E = std::sqrt(r.E2);
  return r;
}

/// Energy of grid fields (Omega, eta, xi) on a common polar grid.
inline EnergyReport energy_E(const Field& Omega, const Field& eta, const Field& xi, double alpha,
                             const EnergyOptions& opt = {}) {
  auto named = [](const std::string& what, auto&& fn) {
    try {
      return fn();
    } catch (const DivergentIntegral& e) {
      throw DivergentIntegral(what + " diverges (" + e.name() + ")", e.trend());
    }
  };
  const double L12 = named("L2D12(Omega)", [&] { return L_functional(Omega, LKind::L2D12).value; });
  Field o2 = Omega, e2 = eta;
  for (double& v : o2.values) v *= v;
  for (double& v : e2.values) v *= v;
  const double l2o = named("int Omega^2 (R^-3+1) sin(2b)", [&] { return integrate(o2, weights::l2_omega()).value; });
  const double l2e = named("int eta^2 (R^-4+R)/Gamma", [&] { return integrate(e2, weights::l2_eta(alpha)).value; });
  const HNormResult ho = named("||Omega||_H3", [&] { return h_norm(Omega, 3, HWeight::phi, alpha); });
  const HNormResult he = named("||eta||_H3", [&] { return h_norm(eta, 3, HWeight::phi, alpha); });
  const HNormResult hx = named("||xi||_H3(psi)", [&] { return h_norm(xi, 3, HWeight::psi, alpha); });
  const C1Result cx = c1_norm(xi, alpha);
  return assemble_energy(L12, l2o, l2e, ho, he, hx, cx, alpha, opt.eta_squared);
}

/// Running sums of every energy component for the analytic route.
class EnergyAccumulator {
 public:
  explicit EnergyAccumulator(double alpha, const EnergyOptions& opt = {})
      : alpha_(alpha), opt_(opt), ho_(3, HWeight::phi, alpha), he_(3, HWeight::phi, alpha),
        hx_(3, HWeight::psi, alpha), cx_(alpha) {}

  /// Adds one node with polar Jet<3> of (Omega, eta, xi); returns |contribution|.
  double add(const Jet<3> P[3], double t, double u, double w) {
    const double ls = log_sin_beta(u), lc = log_cos_beta(u);
    const double la = t + ls + lc;
    double mag = 0.0;
    const double om = P[0].value(), et = P[1].value();
    const double l2b = kLn2 + ls + lc;
    if (om != 0.0) {
      const double c = w * om * 0.5 * std::exp(2.0 * l2b);
      L12_ += c;
      const double d = w * std::exp(2.0 * std::log(std::abs(om)) + softplus(-3.0 * t) + l2b + la);
      l2o_ += d;
      mag += std::abs(c) + d;
    }
    if (et != 0.0) {
      const double lw = std::max(-4.0 * t, t) + std::log1p(std::exp(-std::abs(5.0 * t))) - alpha_ * lc;
      const double d = w * std::exp(2.0 * std::log(std::abs(et)) + lw + la);
      l2e_ += d;
      mag += d;
    }
    mag += ho_.add(P[0], t, ls, lc, w);
    mag += he_.add(P[1], t, ls, lc, w);
    mag += hx_.add(P[2], t, ls, lc, w);
    cx_.add(P[2], t, ls, lc);
    return mag;
  }

  EnergyReport result() const {
    return assemble_energy(L12_, l2o_, l2e_, ho_.result(), he_.result(), hx_.result(), cx_.result(), alpha_,
                           opt_.eta_squared);
  }

 private:
  double alpha_;
  EnergyOptions opt_;
  HAccumulator ho_, he_, hx_;
  C1Accumulator cx_;
  double L12_ = 0.0, l2o_ = 0.0, l2e_ = 0.0;
};

/// One-pass analytic energy. `src(t, u, P)` fills P[0..2] with polar Jet<3> of (Omega, eta, xi).
template <class Src, class UB>
EnergyReport energy_E_fn(const Src& src, double alpha, const std::vector<double>& t_breaks, UB& ub,
                         const EnergyOptions& opt = {}, const PolarQuadOptions& o = {}) {
  EnergyAccumulator acc(alpha, opt);
  Jet<3> P[3];
  auto node = [&](double t, double u, double w) {
    src(t, u, P);
    return acc.add(P, t, u, w);
  };
  integrate_polar(node, ub, t_breaks, o, "energy");
  return acc.result();
}

// ---- embedding ----

struct EmbeddingRatios {
  double a = 0.0;       // ||f||_C1 / (alpha^{-1/2} ||f||_H3)
  double b = 0.0;       // ||f||_{C^{alpha/40}} / ||f||_C1
  double c1 = 0.0, h3 = 0.0, holder = 0.0;
  bool vacuous = false;  // f = 0: both ratios are 0/0
  std::string note;
};

/// Cartesian C^{alpha/40} norm (sup plus sampled seminorm) of a polar field, over node pairs:
/// neighbours at dyadic index offsets in both directions and seeded random far pairs.
inline double field_holder_norm(const Field& f, double exponent, uint64_t seed = 1, int far_pairs = 20000) {
  const PolarGrid& g = f.polar();
  const double alpha = f.alpha;
  auto xy = [&](int i, int j) {
    const double lr = g.t(i) / alpha;
    return std::array<double, 3>{lr, cos_beta(g.u(j)), sin_beta(g.u(j))};
  };
  auto dist = [&](int i1, int j1, int i2, int j2) {
    const auto p = xy(i1, j1), q = xy(i2, j2);
    // |r1 e1 - r2 e2| computed relative to the larger radius
    const double lm = std::max(p[0], q[0]);
    const double r1 = std::exp(p[0] - lm), r2 = std::exp(q[0] - lm);
    return std::log(std::hypot(r1 * p[1] - r2 * q[1], r1 * p[2] - r2 * q[2])) + lm;
  };
  double sup = 0.0, semi = 0.0;
  for (double v : f.values) sup = std::max(sup, std::abs(v));
  auto pair = [&](int i1, int j1, int i2, int j2) {
    const double d = std::abs(f.at(i1, j1) - f.at(i2, j2));
    if (d == 0.0) return;
    semi = std::max(semi, std::exp(std::log(d) - exponent * dist(i1, j1, i2, j2)));
  };
  for (int i = 0; i < g.n_t; ++i)
    for (int j = 0; j < g.n_u; ++j)
      for (int s = 1; s < std::max(g.n_t, g.n_u); s *= 2) {
        if (i + s < g.n_t) pair(i, j, i + s, j);
        if (j + s < g.n_u) pair(i, j, i, j + s);
      }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> I(0, g.n_t - 1), J(0, g.n_u - 1);
  for (int k = 0; k < far_pairs; ++k) {
    const int i1 = I(rng), j1 = J(rng), i2 = I(rng), j2 = J(rng);
    if (i1 != i2 || j1 != j2) pair(i1, j1, i2, j2);
  }
  return sup + semi;
}

/// Both embedding ratios for a polar field; a divergent H^3 norm is reported in `note`.
inline EmbeddingRatios verify_embedding(const Field& f, double alpha = -1.0, uint64_t seed = 1) {
  if (alpha <= 0.0) alpha = f.alpha;
  EmbeddingRatios r;
  r.c1 = c1_norm(f, alpha).value;
  r.holder = field_holder_norm(f, alpha / 40.0, seed);
  try {
    r.h3 = h_norm(f, 3, HWeight::phi, alpha).value;
  } catch (const DivergentIntegral& e) {
    r.h3 = INFINITY;
    r.note = std::string("H^3 diverges: ") + e.what();
  }
  if (r.c1 == 0.0 && r.h3 == 0.0) {
    r.vacuous = true;
    r.note = "vacuous: f = 0";
    return r;
  }
  r.a = r.c1 / (r.h3 / std::sqrt(alpha));
  r.b = r.c1 > 0.0 ? r.holder / r.c1 : INFINITY;
  return r;
}

}  // namespace blowlab
