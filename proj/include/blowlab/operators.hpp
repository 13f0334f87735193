#pragma once
// The nonlocal functionals L_{2D,12}, L_{3D,12} and the averaging operator
// J(f)(x, y) = (1/x) int_0^x f(z, y) dz, with numerical checks of the identities
// that let D_R and D_beta pass through J.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "blowlab/coords.hpp"
#include "blowlab/error.hpp"
#include "blowlab/grid.hpp"
#include "blowlab/jet.hpp"
#include "blowlab/lineint.hpp"
#include "blowlab/polarquad.hpp"
#include "blowlab/profiles.hpp"
#include "blowlab/quadrature.hpp"

namespace blowlab {

enum class LKind { L2D12, L3D12 };

inline std::string to_string(LKind k) { return k == LKind::L2D12 ? "L2D12" : "L3D12"; }

struct LFunctional {
  LKind kind = LKind::L2D12;
  double z = 0.0;  // lower limit in R
};

/// Density of the functional per dt du: kernel / R times dR dbeta = R sin cos dt du.
/// L2D12: sin(2b)/R -> sin^2(2b)/2; L3D12: 3 sin(b) cos^2(b)/R -> 3 sin^2(b) cos^3(b).
template <class T>
T l_density(LKind kind, const T& u) {
  using std::exp;
  if (kind == LKind::L2D12) {
    T s = sin2_beta(u);
    return 0.5 * s * s;
  }
  return 3.0 * exp(2.0 * log_sin_beta(u) + 3.0 * log_cos_beta(u));
}

namespace detail {

/// int_{tz}^{t_last} q(t) dt for samples q_i at t0 + i h, piecewise cubic, plus an
/// exponential tail past the last sample. Returns false if the tail does not decay.
inline bool integrate_samples_from(const std::vector<double>& q, double t0, double h, double tz, double& out,
                                   double& tail) {
  const int n = static_cast<int>(q.size());
  out = 0.0;
  tail = 0.0;
  static const double gx[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526};
  static const double gw[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538};
  const double first = std::max(0.0, (tz - t0) / h);
  const int k0 = std::min(n - 2, static_cast<int>(std::floor(first)));
  for (int k = k0; k + 1 < n; ++k) {
    const double a = std::max(first, static_cast<double>(k)), b = k + 1.0;
    if (b <= a) continue;
    const int s = std::clamp(k - 1, 0, n - 4);
    for (int g = 0; g < 4; ++g) {
      const double x = a + 0.5 * (gx[g] + 1.0) * (b - a);
      double v = 0.0;
      for (int m = 0; m < 4; ++m) {
        double l = 1.0;
        for (int p = 0; p < 4; ++p)
          if (p != m) l *= (x - (s + p)) / ((s + m) - (s + p));
        v += l * q[s + m];
      }
      out += 0.5 * gw[g] * (b - a) * h * v;
    }
  }
  return exp_tail(q[n - 2], q[n - 1], h, tail) || std::abs(q[n - 1]) == 0.0;
}

}  // namespace detail

/// L functional of a polar Field at lower limit z (grid route).
inline Integral L_functional(const Field& f, LKind kind, double z = 0.0) {
  if (!f.is_polar()) throw DomainError("L functionals need a polar field");
  if (!(z >= 0.0)) throw DomainError("lower limit z must be >= 0");
  const PolarGrid& g = f.polar();
  const WeightSpec w = kind == LKind::L2D12 ? weights::l2d12() : weights::l3d12();
  if (z <= g.R(0)) {
    try {
      return integrate(f, w);
    } catch (const DivergentIntegral& e) {
      throw DivergentIntegral("divergent functional " + to_string(kind), e.trend());
    }
  }
  if (std::log(z) >= g.t_max) return {0.0, 0.0};
  // row densities per dt, then a cubic rule from log z upward
  std::vector<double> q(g.n_t, 0.0);
  for (int i = 0; i < g.n_t; ++i) {
    double s = 0.0;
    for (int j = 0; j < g.n_u; ++j) {
      const double lo = j > 0 ? g.u(j - 1) : g.u(j), hi = j + 1 < g.n_u ? g.u(j + 1) : g.u(j);
      s += 0.5 * (hi - lo) * f.at(i, j) * l_density(kind, g.u(j));
    }
    q[i] = s;
  }
  double v = 0.0, tail = 0.0;
  if (!detail::integrate_samples_from(q, g.t_min, g.h_t(), std::log(z), v, tail))
    throw DivergentIntegral("divergent functional " + to_string(kind), {q[g.n_t - 3], q[g.n_t - 2], q[g.n_t - 1]});
  // error: compare with the trapezoid on the same samples
  double trap = 0.0;
  const double first = (std::log(z) - g.t_min) / g.h_t();
  for (int i = static_cast<int>(std::ceil(first)); i + 1 < g.n_t; ++i) trap += 0.5 * g.h_t() * (q[i] + q[i + 1]);
  return {v + tail, std::abs(v - trap) * 1e-2 + 0.01 * std::abs(tail)};
}

/// L functional of an analytic (t, u)-template function (quadrature route).
/// `t_breaks` and `u_breaks(t, out)` mark where the integrand changes character.
template <class F, class UB>
Integral L_functional_fn(const F& f, LKind kind, double z, const std::vector<double>& t_breaks, UB& u_breaks,
                         PolarQuadOptions o = {}) {
  if (!(z >= 0.0)) throw DomainError("lower limit z must be >= 0");
  if (z > 0.0) o.t_lower = std::log(z);
  double sum = 0.0;
  auto node = [&](double t, double u, double w) {
    const double v = w * f(t, u) * l_density(kind, u);
    sum += v;
    return std::abs(v);
  };
  double mag = 0.0;
  try {
    mag = integrate_polar(node, u_breaks, t_breaks, o, "functional");
  } catch (const DivergentIntegral& e) {
    throw DivergentIntegral("divergent functional " + to_string(kind), e.trend());
  }
  return {sum, 1e-13 * mag};
}

// ---- J ----

struct JContext {
  double alpha = 0.1;
  LineOptions line{16, 1.0, 2, 1.0, 1e-16, 60};
};

/// J(f)(x, y) for a callable f(z, y), computed in w = log(z / y) so that the behavior of
/// f near z = 0 (powers of z) becomes exponential decay in w.
template <class F>
double J_apply(const F& f, double x, double y, const JContext& ctx = {}) {
  if (!(x > 0.0)) throw DomainError("J needs x > 0");
  if (!(y > 0.0)) throw DomainError("J needs y > 0");
  const double wx = std::log(x / y);
  double sum = 0.0;
  auto visit = [&](double w, double wt) {
    const double z = y * std::exp(w);
    const double v = wt * z * f(z, y);
    sum += v;
    return std::abs(v);
  };
  std::vector<double> br{std::min(0.0, wx)};
  integrate_line(visit, -INFINITY, wx, br, ctx.line, "J");
  return sum / x;
}

/// J applied to a polar Field; samples come from bicubic interpolation in (t, u).
inline double J_apply(const Field& f, double x, double y, const JContext& ctx = {}) {
  if (!f.is_polar()) throw DomainError("J on a field needs the polar chart");
  const double a = f.alpha > 0.0 ? f.alpha : ctx.alpha;
  const PolarGrid& g = f.polar();
  auto sample = [&](double z, double yy) {
    auto [t, u] = tu_from_log(std::log(z), std::log(yy), a);
    return interpolate(f, std::clamp(t, g.t_min, g.t_max), std::clamp(u, g.u_min, g.u_max));
  };
  return J_apply(sample, x, y, ctx);
}

/// Smooth test function on the quarter plane, evaluable on doubles and on jets.
struct TestFunction {
  std::string name;
  std::function<double(double, double)> value;
  std::function<Jet<1>(const Jet<1>&, const Jet<1>&)> jet;
};

/// Builds a TestFunction from a generic lambda f(z, y).
template <class G>
TestFunction make_test_function(std::string name, G g) {
  return {std::move(name), [g](double z, double y) { return g(z, y); },
          [g](const Jet<1>& z, const Jet<1>& y) { return g(z, y); }};
}

struct JResidual {
  double dR = 0.0;     // max |D_R J(f) - J(D_S f)|
  double dbeta = 0.0;  // max |D_beta J(f) - J(D_tau f) - (correction terms)|
  double scale = 0.0;  // max |J(D_S f)| over the samples, for relative reading
  int points = 0;
};

/// Checks the commutation identities for J at the given sample points (x, y): D_R by a
/// fifth-order difference of quadratures in t = log R, and the right-hand sides by
/// quadrature of exact derivatives.
inline JResidual J_identity_residual(const TestFunction& f, const std::vector<std::pair<double, double>>& pts,
                                     const JContext& ctx = {}) {
  const double alpha = ctx.alpha;
  check_alpha(alpha);
  JResidual r;
  for (auto [x, y] : pts) {
    const double scale = std::max({1e-300, std::abs(f.value(x, y)), std::abs(f.value(0.5 * x, y))});
    if (std::abs(f.value(0.0, y)) > 1e-12 * scale) throw DomainError("J identities need f(0, y) = 0 (" + f.name + ")");
  }
  auto derivs = [&](double z, double y, double& DS, double& Dtau) {
    const Jet<1> Z = Jet<1>::variable(z, 0), Y = Jet<1>::variable(y, 1);
    const Jet<1> v = f.jet(Z, Y);
    const double fz = v.coef(1, 0), fy = v.coef(0, 1);
    DS = (z * fz + y * fy) / alpha;
    const double r2 = z * z + y * y;
    Dtau = 2.0 * z * y / r2 * (-y * fz + z * fy);  // sin(2 tau) d_tau
  };
  auto JDS = [&](double z, double y) {
    double a, b;
    derivs(z, y, a, b);
    return a;
  };
  auto JDtau = [&](double z, double y) {
    double a, b;
    derivs(z, y, a, b);
    return b;
  };
  auto JsDS = [&](double z, double y) {
    double a, b;
    derivs(z, y, a, b);
    return y * y / (z * z + y * y) * a;
  };
  for (auto [x, y] : pts) {
    const double t = alpha * 0.5 * std::log(x * x + y * y), u = std::log(y / x);
    auto Jat = [&](double tt, double uu) {
      const double lr = tt / alpha;
      const double xx = std::exp(lr + log_cos_beta(uu)), yy = std::exp(lr + log_sin_beta(uu));
      return J_apply(f.value, xx, yy, ctx);
    };
    // steps of 1e-2 in log r and in u
    auto d5 = [&](auto g, double h) { return (g(-2) - 8.0 * g(-1) + 8.0 * g(1) - g(2)) / (12.0 * h); };
    const double ht = 1e-2 * alpha, hu = 1e-2;
    const double DRJ = d5([&](int k) { return Jat(t + k * ht, u); }, ht);
    const double DbJ = 2.0 * d5([&](int k) { return Jat(t, u + k * hu); }, hu);
    const double jds = J_apply(JDS, x, y, ctx);
    const double jdt = J_apply(JDtau, x, y, ctx);
    const double jsds = J_apply(JsDS, x, y, ctx);
    const double sb2 = y * y / (x * x + y * y);
    r.dR = std::max(r.dR, std::abs(DRJ - jds));
    r.dbeta = std::max(r.dbeta, std::abs(DbJ - jdt - (-2.0 * alpha * sb2 * jds + 2.0 * alpha * jsds)));
    r.scale = std::max(r.scale, std::abs(jds));
    ++r.points;
  }
  return r;
}

/// 50 interior sample points on a log-spaced lattice of (x, y) in [0.2, 2]^2.
inline std::vector<std::pair<double, double>> j_sample_points(int nx = 10, int ny = 5) {
  std::vector<std::pair<double, double>> p;
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j)
      p.emplace_back(0.2 * std::pow(10.0, static_cast<double>(i) / (nx - 1)),
                     0.2 * std::pow(10.0, static_cast<double>(j) / (ny - 1)));
  return p;
}

/// Gaussian-type test family vanishing on x = 0.
inline std::vector<TestFunction> gaussian_test_family() {
  using std::exp;
  using std::sin;
  std::vector<TestFunction> fam;
  fam.push_back(make_test_function("x y exp(-r^2)", [](const auto& z, const auto& y) {
    return z * y * exp(-1.0 * (z * z + y * y));
  }));
  fam.push_back(make_test_function("x exp(-x^2 - (y-1)^2)", [](const auto& z, const auto& y) {
    return z * exp(-1.0 * (z * z + (y - 1.0) * (y - 1.0)));
  }));
  fam.push_back(make_test_function("x^2 y exp(-2 r^2)", [](const auto& z, const auto& y) {
    return z * z * y * exp(-2.0 * (z * z + y * y));
  }));
  fam.push_back(make_test_function("sin(x) exp(-(x-1/2)^2 - y^2)", [](const auto& z, const auto& y) {
    return sin(z) * exp(-1.0 * ((z - 0.5) * (z - 0.5) + y * y));
  }));
  fam.push_back(make_test_function("x y^2 exp(-(x^2+y^2)/2)", [](const auto& z, const auto& y) {
    return z * y * y * exp(-0.5 * (z * z + y * y));
  }));
  return fam;
}

/// eta_bar as a Cartesian test function.
inline TestFunction eta_bar_test_function(double alpha) {
  Profile2D p(alpha);
  return make_test_function("eta_bar", [p, alpha](const auto& z, const auto& y) {
    using std::log;
    using T = std::decay_t<decltype(z)>;
    if (value_of(z) <= 0.0) return T(0.0);
    auto [t, u] = tu_from_log(T(log(z)), T(log(y)), alpha);
    return p.eta(t, u);
  });
}

struct RemarkBound {
  double C = 0.0;  // sup of J(sin(tau) eta_bar) / (alpha^{-1/2} sin^{1/3}(beta) eta_bar)
  double t_at = 0.0, u_at = 0.0;
  int samples = 0;
};

/// Reports the constant in J(sin(tau) eta_bar) <= C alpha^{-1/2} sin(beta)^{1/3} eta_bar over an
/// n_t x n_u lattice of (t, u).
inline RemarkBound remark_bound(double alpha, int n_t = 41, int n_u = 41, double t_lo = -12.0, double t_hi = 12.0,
                                double u_lo = -12.0, double u_hi = 12.0) {
  Profile2D p(alpha);
  RemarkBound rb;
  JContext ctx{alpha};
  for (int a = 0; a < n_t; ++a)
    for (int b = 0; b < n_u; ++b) {
      const double t = t_lo + (t_hi - t_lo) * a / (n_t - 1), u = u_lo + (u_hi - u_lo) * b / (n_u - 1);
      auto [lx, ly] = log_xy(t, u, alpha);
      // (1/x) int_0^x sin(tau) eta dz in w = log(z / y), kept in log space
      double sum = 0.0;
      auto visit = [&](double w, double wt) {
        // z = y e^w ; sin(tau) = y / sqrt(z^2 + y^2)
        const double lz = ly + w;
        auto [tt, uu] = tu_from_log(lz, ly, alpha);
        const double v = wt * std::exp(w + log_sin_beta(uu)) * p.eta(tt, uu);
        sum += v;
        return std::abs(v);
      };
      const double wx = lx - ly;
      integrate_line(visit, -INFINITY, wx, {std::min(0.0, wx)}, ctx.line, "remark");
      const double J = sum * std::exp(ly - lx);
      const double rhs = std::exp(-0.5 * std::log(alpha) + log_sin_beta(u) / 3.0) * p.eta(t, u);
      const double c = J / rhs;
      if (c > rb.C) rb = {c, t, u, rb.samples};
      ++rb.samples;
    }
  return rb;
}

}  // namespace blowlab
