#pragma once
// Cartesian jets at points of the open quarter plane, conversion to log-polar
// jets, and x-line integrals theta(x, y) = int_0^x f(z, y) dz carried as jets.
//
// A point is stored as (lx, ly) = (log x, log y). Cartesian jets use the scaled
// variables X = x/x0 - 1, Y = y/y0 - 1, so coefficient (a, b) equals
// x0^a y0^b d_x^a d_y^b f / (a! b!). This keeps every coefficient O(1) even
// when x0 or y0 is far outside double range relative to each other.

#include <cmath>
#include <type_traits>
#include <utility>
#include <vector>

#include "blowlab/coords.hpp"
#include "blowlab/jet.hpp"
#include "blowlab/quadrature.hpp"

namespace blowlab {

/// (t, u) from (log x, log y).
template <class T>
std::pair<T, T> tu_from_log(const T& lx, const T& ly, double alpha) {
  T lrho = ly + 0.5 * softplus(T(2.0 * (lx - ly)));
  return {alpha * lrho, ly - lx};
}

/// log x and log y from (t, u).
inline std::pair<double, double> log_xy(double t, double u, double alpha) {
  const double lrho = t / alpha;
  return {lrho + log_cos_beta(u), lrho + log_sin_beta(u)};
}

/// Scaled Cartesian seeds (log x, log y) as jets at (lx0, ly0).
template <int N>
std::pair<Jet<N>, Jet<N>> cart_seeds(double lx0, double ly0) {
  using std::log1p;
  Jet<N> X = Jet<N>::variable(0.0, 0), Y = Jet<N>::variable(0.0, 1);
  return {lx0 + log1p(X), ly0 + log1p(Y)};
}

/// Log-polar jets (t, u) in scaled Cartesian variables at (lx0, ly0).
template <int N>
std::pair<Jet<N>, Jet<N>> cart_tu(double lx0, double ly0, double alpha) {
  auto [lx, ly] = cart_seeds<N>(lx0, ly0);
  return tu_from_log(lx, ly, alpha);
}

/// Re-expands a scaled Cartesian jet g(X, Y) at (t0, u0) as a jet in (dt, du).
template <int N>
Jet<N> cart_to_polar(const Jet<N>& g, double t0, double u0, double alpha) {
  using std::exp;
  Jet<N> dt = Jet<N>::variable(0.0, 0), du = Jet<N>::variable(0.0, 1);
  Jet<N> u = u0 + du;
  // X = x/x0 - 1 = exp(dt/alpha + log cos(u) - log cos(u0)) - 1, Y likewise with sin
  Jet<N> X = exp(dt / alpha + log_cos_beta(u) - log_cos_beta(u0)) - 1.0;
  Jet<N> Y = exp(dt / alpha + log_sin_beta(u) - log_sin_beta(u0)) - 1.0;
  (void)t0;
  // Horner in X over polynomials in Y
  Jet<N> result(0.0);
  for (int a = N; a >= 0; --a) {
    Jet<N> inner(0.0);
    for (int b = N - a; b >= 0; --b) inner = inner * Y + g.coef(a, b);
    result = result * X + inner;
  }
  return result;
}

/// Polar jet of a (t, u)-template function at (t0, u0): coefficient (i, j) is d_t^i d_u^j f / (i! j!).
template <int N, class F>
Jet<N> polar_jet(const F& f, double t0, double u0) {
  return f(Jet<N>::variable(t0, 0), Jet<N>::variable(u0, 1));
}

/// D_R^i D_beta^j f from a polar jet (D_R = d/dt, D_beta = 2 d/du).
template <int N>
double polar_deriv(const Jet<N>& j, int i, int k) {
  return j.derivative(i, k) * std::ldexp(1.0, k);
}

struct LineIntOptions {
  LineOptions line{12, 1.0, 2, 1.0, 1e-16, 60};
};

/// theta(x, y) = int_0^x f(z, y) dz as a scaled Cartesian jet at (lx0, ly0).
/// f is a (t, u)-template functor; `vbreaks` are extra breakpoints in v = log(z / x0) <= 0.
/// If f also accepts a third argument lw, it must return f(t, u) e^{lw}. The quadrature
/// weight dz then enters through lw, so integrands that overflow near z = 0 while dz
/// underflows are formed in log space.
template <int N, class F>
Jet<N> line_integral_x(const F& f, double lx0, double ly0, double alpha, const std::vector<double>& vbreaks,
                       const LineIntOptions& o = {}) {
  using std::log1p;
  // first term: int_0^{x0} f(z, y0 (1 + Y)) dz, a jet in Y only
  using J1 = Jet<N, 1>;
  const J1 Yv = J1::variable(0.0, 1);
  const J1 ly = ly0 + log1p(Yv);
  J1 acc(0.0);
  auto visit = [&](double v, double w) {
    J1 lx(lx0 + v);
    auto [t, u] = tu_from_log(lx, ly, alpha);
    J1 val;
    if constexpr (std::is_invocable_v<const F&, const J1&, const J1&, double>) {
      val = f(t, u, std::log(w) + v + lx0);
    } else {
      val = f(t, u);
      val *= w * std::exp(v + lx0);
    }
    acc += val;
    return std::abs(val.value());
  };
  std::vector<double> br = vbreaks;
  br.push_back(std::min(0.0, ly0 - lx0));
  integrate_line(visit, -INFINITY, 0.0, br, o.line, "x-line integral");
  // second term: int_{x0}^{x0 (1 + X)} f dz from the jet of f at the base point
  auto [t0, u0] = cart_tu<N>(lx0, ly0, alpha);
  const Jet<N> g = f(t0, u0);
  Jet<N> r(0.0);
  for (int a = N - 1; a >= 0; --a)
    for (int b = 0; a + b + 1 <= N; ++b) r.coef(a + 1, b) += g.coef(a, b) / (a + 1);
  r *= std::exp(lx0);
  for (int b = 0; b <= N; ++b) r.coef(0, b) += acc.coef(0, b);
  return r;
}

}  // namespace blowlab
