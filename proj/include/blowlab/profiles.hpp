#pragma once
// Approximate self-similar profiles: F_* for 3D axisymmetric Euler and
// (Omega_bar, eta_bar, xi_bar, theta_bar) for 2D Boussinesq.
// All evaluators take the log chart (t, u) and work for double or Jet<N>.

#include <cmath>
#include <string>
#include <vector>

#include "blowlab/coords.hpp"
#include "blowlab/error.hpp"
#include "blowlab/grid.hpp"
#include "blowlab/lineint.hpp"
#include "blowlab/quadrature.hpp"

namespace blowlab {

inline void check_alpha_unit(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("alpha must lie in (0, 1)");
}

/// c_* = (2/pi) int_0^{pi/2} cos^alpha(beta) sin(2 beta) dbeta, by quadrature.
inline double cstar(double alpha) {
  check_alpha_unit(alpha);
  // cos^alpha has an algebraic endpoint singularity at pi/2, so use double-exponential quadrature
  const double v = tanh_sinh([alpha](double b) { return std::pow(std::cos(b), alpha) * std::sin(2.0 * b); }, 0.0,
                             kPi / 2, 1e-15, 12);
  return 2.0 / kPi * v;
}

/// Closed form 4 / (pi (alpha + 2)).
inline double cstar_closed(double alpha) { return 4.0 / (kPi * (alpha + 2.0)); }

class Profile3D {
 public:
  explicit Profile3D(double alpha, double c_norm = 1.0) : alpha_(alpha), c_(c_norm) {
    check_alpha_unit(alpha);
    if (!(c_norm >= 0.1 && c_norm <= 10.0)) throw ParameterError("normalization c must lie in [1/10, 10]");
  }
  double alpha() const { return alpha_; }
  double c_norm() const { return c_; }

  /// Gamma_3D = (sin(beta) cos^2(beta))^{alpha/3}.
  template <class T>
  T Gamma(const T& u) const {
    using std::exp;
    return exp(alpha_ / 3.0 * (log_sin_beta(u) + 2.0 * log_cos_beta(u)));
  }

  /// F_* = (Gamma_3D / c) 4 alpha R / (1+R)^2.
  template <class T>
  T F_star(const T& t, const T& u) const {
    using std::exp;
    return (4.0 * alpha_ / c_) * exp(alpha_ / 3.0 * (log_sin_beta(u) + 2.0 * log_cos_beta(u)) + t - 2.0 * softplus(t));
  }

 private:
  double alpha_;
  double c_;
};

class Profile2D {
 public:
  explicit Profile2D(double alpha) : alpha_(alpha), cstar_(cstar(alpha)) {}
  double alpha() const { return alpha_; }
  double c_star() const { return cstar_; }

  template <class T>
  T Gamma(const T& u) const {
    using std::exp;
    return exp(alpha_ * log_cos_beta(u));
  }

  /// (alpha/c_*) Gamma 3R/(1+R)^2.
  template <class T>
  T Omega(const T& t, const T& u) const {
    using std::exp;
    return (3.0 * alpha_ / cstar_) * exp(alpha_ * log_cos_beta(u) + t - 2.0 * softplus(t));
  }

  /// (alpha/c_*) Gamma 6R/(1+R)^3.
  template <class T>
  T eta(const T& t, const T& u) const {
    using std::exp;
    return (6.0 * alpha_ / cstar_) * exp(alpha_ * log_cos_beta(u) + t - 3.0 * softplus(t));
  }

  /// d_y eta_bar = -(18 alpha^2 / c_*) (sin(beta)/r) R^2 cos^alpha(beta) / (1+R)^4.
  template <class T>
  T eta_y(const T& t, const T& u, double lw = 0.0) const {
    using std::exp;
    return (-18.0 * alpha_ * alpha_ / cstar_) *
           exp(log_sin_beta(u) + alpha_ * log_cos_beta(u) + 2.0 * t - 4.0 * softplus(t) - t / alpha_ + lw);
  }

  /// Breakpoints in v = log(z/x) for x-line integrals of the profiles at (lx, ly).
  std::vector<double> line_breaks(double lx, double ly) const {
    std::vector<double> b;
    // the radius switches from |y| to |z| dominated where z ~ y; R crosses 1 where rho ~ 1
    if (ly < lx) b.push_back(ly - lx);
    if (ly < 0.0 && lx > 0.0) b.push_back(-lx);
    return b;
  }

  /// theta_bar = 1 + int_0^x eta_bar dz as a scaled Cartesian jet at (lx, ly).
  template <int N>
  Jet<N> theta_jet(double lx, double ly) const {
    auto f = [this](const auto& t, const auto& u) { return eta(t, u); };
    Jet<N> r = line_integral_x<N>(f, lx, ly, alpha_, line_breaks(lx, ly));
    r += 1.0;
    return r;
  }

  /// xi_bar = int_0^x d_y eta_bar dz as a scaled Cartesian jet at (lx, ly).
  template <int N>
  Jet<N> xi_jet(double lx, double ly) const {
    auto f = [this](const auto& t, const auto& u, double lw = 0.0) { return eta_y(t, u, lw); };
    return line_integral_x<N>(f, lx, ly, alpha_, line_breaks(lx, ly));
  }

  double theta(double t, double u) const {
    auto [lx, ly] = log_xy(t, u, alpha_);
    return theta_jet<0>(lx, ly).value();
  }
  double xi(double t, double u) const {
    auto [lx, ly] = log_xy(t, u, alpha_);
    return xi_jet<0>(lx, ly).value();
  }

 private:
  double alpha_;
  double cstar_;
};

enum class ProfileTag { F_star, Omega_bar, eta_bar, eta_bar_y, xi_bar, theta_bar, Gamma2D, Gamma3D };

inline ProfileTag profile_tag(const std::string& s) {
  if (s == "F_star") return ProfileTag::F_star;
  if (s == "Omega_bar") return ProfileTag::Omega_bar;
  if (s == "eta_bar") return ProfileTag::eta_bar;
  if (s == "eta_bar_y") return ProfileTag::eta_bar_y;
  if (s == "xi_bar") return ProfileTag::xi_bar;
  if (s == "theta_bar") return ProfileTag::theta_bar;
  if (s == "Gamma2D") return ProfileTag::Gamma2D;
  if (s == "Gamma3D") return ProfileTag::Gamma3D;
  throw ParameterError("unknown profile tag '" + s + "'");
}

/// Profile value at (R, beta). Endpoints beta = 0, pi/2 and R = 0 are handled by limits.
inline double eval_profile(ProfileTag which, ModPolar p, double alpha, double c_norm = 1.0) {
  check_alpha_unit(alpha);
  const double R = p.R, b = p.beta;
  if (R < 0.0 || b < 0.0 || b > kPi / 2) throw ParameterError("point outside R >= 0, 0 <= beta <= pi/2");
  const double s = std::sin(b), c = b >= kPi / 2 ? 0.0 : std::cos(b);
  const double cs = cstar(alpha);
  switch (which) {
    case ProfileTag::Gamma2D: return std::pow(c, alpha);
    case ProfileTag::Gamma3D: return std::pow(s * c * c, alpha / 3.0);
    case ProfileTag::F_star: return std::pow(s * c * c, alpha / 3.0) / c_norm * 4.0 * alpha * R / ((1 + R) * (1 + R));
    case ProfileTag::Omega_bar: return alpha / cs * std::pow(c, alpha) * 3.0 * R / ((1 + R) * (1 + R));
    case ProfileTag::eta_bar: return alpha / cs * std::pow(c, alpha) * 6.0 * R / std::pow(1 + R, 3);
    case ProfileTag::eta_bar_y: {
      if (R == 0.0) return 0.0;
      const double r = std::pow(R, 1.0 / alpha);
      return -18.0 * alpha * alpha / cs * s / r * R * R * std::pow(c, alpha) / std::pow(1 + R, 4);
    }
    case ProfileTag::theta_bar:
    case ProfileTag::xi_bar: {
      if (c <= 0.0 || b >= kPi / 2) return which == ProfileTag::theta_bar ? 1.0 : 0.0;  // x = 0
      if (R == 0.0) return which == ProfileTag::theta_bar ? 1.0 : 0.0;
      Profile2D prof(alpha);
      const double t = std::log(R);
      if (b == 0.0) {
        // y = 0: d_y eta_bar vanishes on the axis, theta_bar = 1 + int_0^x eta_bar(z, 0) dz
        if (which == ProfileTag::xi_bar) return 0.0;
        const double lx = t / alpha;
        const double v = integrate_1d(
            [&](double w) {
              const double tz = alpha * (lx + w);
              return prof.eta(tz, -800.0) * std::exp(w);
            },
            -INFINITY, 0.0, {-lx});
        return 1.0 + std::exp(lx) * v;
      }
      const double u = std::log(std::tan(b));
      return which == ProfileTag::theta_bar ? prof.theta(t, u) : prof.xi(t, u);
    }
  }
  throw ParameterError("unknown profile tag");
}

inline Field eval_profile_field(ProfileTag which, const PolarGrid& g, double alpha, double c_norm = 1.0) {
  Field f{g, std::vector<double>(g.size()), Parity::none, alpha, ""};
  Profile2D p2(alpha);
  Profile3D p3(alpha, c_norm);
  for (int i = 0; i < g.n_t; ++i)
    for (int j = 0; j < g.n_u; ++j) {
      const double t = g.t(i), u = g.u(j);
      double v = 0.0;
      switch (which) {
        case ProfileTag::F_star: v = p3.F_star(t, u); break;
        case ProfileTag::Gamma3D: v = p3.Gamma(u); break;
        case ProfileTag::Gamma2D: v = p2.Gamma(u); break;
        case ProfileTag::Omega_bar: v = p2.Omega(t, u); break;
        case ProfileTag::eta_bar: v = p2.eta(t, u); break;
        case ProfileTag::eta_bar_y: v = p2.eta_y(t, u); break;
        case ProfileTag::theta_bar: v = p2.theta(t, u); break;
        case ProfileTag::xi_bar: v = p2.xi(t, u); break;
      }
      f.at(i, j) = v;
    }
  return f;
}

struct RatioReport {
  std::string profile;
  int i = 0, j = 0;
  double sup = 0.0;
  double at_t = 0.0, at_u = 0.0;
};

/// Sup over a (t, u) sample of the Lemma ratios
///   |D_R^i D_beta^j Omega| / ((alpha sin)^{l(j)} Omega),
///   |D_R^i D_beta^{j+1} eta| / ((alpha sin)^{l(j)} eta),
///   |D_R^i D_beta^j xi| / (-xi),   with l(j) = 1 if j >= 1.
/// Derivatives come from exact jets, not stencils.
inline std::vector<RatioReport> profile_deriv_bound_check(const Profile2D& p, int i, int j, int n_t = 41, int n_u = 41,
                                                          double t_lo = -12.0, double t_hi = 12.0,
                                                          double u_lo = -12.0, double u_hi = 12.0) {
  if (i < 0 || j < 0 || i + j > 5) throw ParameterError("profile_deriv_bound_check needs i + j <= 5");
  constexpr int N = 6;
  const double alpha = p.alpha();
  std::vector<RatioReport> out(3);
  out[0].profile = "Omega_bar";
  out[1].profile = "eta_bar";
  out[2].profile = "xi_bar";
  for (auto& r : out) r.i = i, r.j = j;
  for (int a = 0; a < n_t; ++a)
    for (int b = 0; b < n_u; ++b) {
      const double t = t_lo + (t_hi - t_lo) * a / (n_t - 1);
      const double u = u_lo + (u_hi - u_lo) * b / (n_u - 1);
      const double sfac = j >= 1 ? alpha * sin_beta(u) : 1.0;
      auto upd = [&](RatioReport& r, double v) {
        if (std::isfinite(v) && v > r.sup) r.sup = v, r.at_t = t, r.at_u = u;
      };
      const Jet<N> O = polar_jet<N>([&](const auto& tt, const auto& uu) { return p.Omega(tt, uu); }, t, u);
      upd(out[0], std::abs(polar_deriv(O, i, j)) / (sfac * O.value()));
      if (i + j + 1 <= N) {
        const Jet<N> E = polar_jet<N>([&](const auto& tt, const auto& uu) { return p.eta(tt, uu); }, t, u);
        upd(out[1], std::abs(polar_deriv(E, i, j + 1)) / (sfac * E.value()));
      }
      auto [lx, ly] = log_xy(t, u, alpha);
      const Jet<5> xc = p.xi_jet<5>(lx, ly);
      const Jet<5> xp = cart_to_polar(xc, t, u, alpha);
      upd(out[2], std::abs(polar_deriv(xp, i, j)) / (-xp.value()));
    }
  return out;
}

}  // namespace blowlab
