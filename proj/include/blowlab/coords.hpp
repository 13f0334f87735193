#pragma once
// Modified polar coordinates R = rho^alpha, beta = arctan(y/x), and the
// logarithmic chart t = log R, u = log tan(beta) used throughout.
//
// In the log chart D_R = R d/dR = d/dt and D_beta = sin(2 beta) d/dbeta = 2 d/du,
// and dR dbeta = R sin(beta) cos(beta) dt du.

#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "blowlab/error.hpp"
#include "blowlab/jet.hpp"

namespace blowlab {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kLn2 = std::numbers::ln2;

struct ModPolar {
  double R;
  double beta;
};

struct Cartesian {
  double x;
  double y;
};

inline void check_alpha(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ParameterError("alpha must be positive and finite");
}

inline ModPolar to_modpolar(double x, double y, double alpha) {
  check_alpha(alpha);
  if (x == 0.0 && y == 0.0) throw CoordinateSingularity("modified polar chart undefined at the origin");
  const double rho = std::hypot(x, y);
  return {std::pow(rho, alpha), std::atan2(y, x)};
}

inline Cartesian from_modpolar(double R, double beta, double alpha) {
  check_alpha(alpha);
  if (R < 0.0) throw ParameterError("R must be nonnegative");
  const double rho = std::pow(R, 1.0 / alpha);
  return {rho * std::cos(beta), rho * std::sin(beta)};
}

/// Log chart of a point of the open quarter plane.
struct LogPolar {
  double t;  // log R
  double u;  // log tan(beta)
};

inline LogPolar to_logpolar(double R, double beta) {
  if (!(R > 0.0)) throw CoordinateSingularity("log chart needs R > 0");
  if (!(beta > 0.0 && beta < kPi / 2)) throw CoordinateSingularity("log chart needs 0 < beta < pi/2");
  return {std::log(R), std::log(std::tan(beta))};
}

// ---- templated elementary helpers valid for double and Jet<N> ----

/// log(1 + e^x) without overflow.
template <class T>
T softplus(const T& x) {
  using std::exp;
  using std::log1p;
  if (value_of(x) > 0.0) return x + log1p(exp(-x));
  return log1p(exp(x));
}

/// 1/(1+e^{-x}).
template <class T>
T sigmoid(const T& x) {
  using std::exp;
  if (value_of(x) >= 0.0) return 1.0 / (1.0 + exp(-x));
  T e = exp(x);
  return e / (1.0 + e);
}

template <class T>
T log_sin_beta(const T& u) {
  return -0.5 * softplus(T(-2.0 * u));
}

template <class T>
T log_cos_beta(const T& u) {
  return -0.5 * softplus(T(2.0 * u));
}

template <class T>
T sin_beta(const T& u) {
  using std::exp;
  return exp(log_sin_beta(u));
}

template <class T>
T cos_beta(const T& u) {
  using std::exp;
  return exp(log_cos_beta(u));
}

/// sin(2 beta) = 1/cosh(u).
template <class T>
T sin2_beta(const T& u) {
  using std::exp;
  if (value_of(u) >= 0.0) {
    T e = exp(-u);
    return 2.0 * e / (1.0 + e * e);
  }
  T e = exp(u);
  return 2.0 * e / (1.0 + e * e);
}

/// log(beta) as a function of u, accurate for beta far below double range.
template <class T>
T log_beta(const T& u) {
  using std::atan;
  using std::exp;
  using std::log;
  const double u0 = value_of(u);
  if (u0 < -40.0) return u - exp(2.0 * u) / 3.0;
  if (u0 <= 0.0) return log(atan(exp(u)));
  return log(kPi / 2 - atan(exp(-u)));
}

/// log(pi/2 - beta) as a function of u.
template <class T>
T log_coangle(const T& u) {
  return log_beta(T(-u));
}

/// beta itself.
template <class T>
T beta_of(const T& u) {
  using std::exp;
  return exp(log_beta(u));
}

/// log tan(x) for 0 < x < pi/2 given log x (x may underflow).
inline double log_tan_from_log(double lx) {
  if (lx < -30.0) return lx;
  const double x = std::exp(lx);
  return std::log(std::tan(x));
}

// ---- derivative identities ----

/// d/dx f from D_R f and d_beta f.
inline double partial_x(double DRf, double dbf, double R, double beta, double alpha) {
  const double rho = std::pow(R, 1.0 / alpha);
  return (alpha * std::cos(beta) * DRf - std::sin(beta) * dbf) / rho;
}

/// d/dy f from D_R f and d_beta f.
inline double partial_y(double DRf, double dbf, double R, double beta, double alpha) {
  const double rho = std::pow(R, 1.0 / alpha);
  return (alpha * std::sin(beta) * DRf + std::cos(beta) * dbf) / rho;
}

/// y d_y f = sin^2(beta) alpha D_R f + (1/2) D_beta f.
inline double y_dy(double DRf, double Dbf, double beta, double alpha) {
  const double s = std::sin(beta);
  return alpha * s * s * DRf + 0.5 * Dbf;
}

// ---- symbolic layer: sums of coef R^a (1+R)^b sin^c(beta) cos^d(beta) ----

class Expr {
 public:
  using Key = std::array<double, 4>;  // exponents (a, b, c, d)

  Expr() = default;
  static Expr monomial(double coef, double a, double b, double c, double d) {
    Expr e;
    e.add({a, b, c, d}, coef);
    return e;
  }

  const std::map<Key, double>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  Expr& operator+=(const Expr& o) {
    for (const auto& [k, v] : o.terms_) add(k, v);
    return *this;
  }
  friend Expr operator+(Expr a, const Expr& b) { return a += b; }
  friend Expr operator-(Expr a, const Expr& b) { return a += (-1.0) * b; }
  friend Expr operator*(double s, const Expr& e) {
    Expr r;
    for (const auto& [k, v] : e.terms_) r.add(k, s * v);
    return r;
  }
  friend Expr operator*(const Expr& a, const Expr& b) {
    Expr r;
    for (const auto& [ka, va] : a.terms_)
      for (const auto& [kb, vb] : b.terms_)
        r.add({ka[0] + kb[0], ka[1] + kb[1], ka[2] + kb[2], ka[3] + kb[3]}, va * vb);
    return r;
  }

  /// R d/dR.
  Expr D_R() const {
    Expr r;
    for (const auto& [k, v] : terms_) {
      r.add(k, v * k[0]);
      r.add({k[0] + 1, k[1] - 1, k[2], k[3]}, v * k[1]);
    }
    return r;
  }

  /// d/dbeta.
  Expr d_beta() const {
    Expr r;
    for (const auto& [k, v] : terms_) {
      r.add({k[0], k[1], k[2] - 1, k[3] + 1}, v * k[2]);
      r.add({k[0], k[1], k[2] + 1, k[3] - 1}, -v * k[3]);
    }
    return r;
  }

  /// sin(2 beta) d/dbeta.
  Expr D_beta() const { return monomial(2.0, 0, 0, 1, 1) * d_beta(); }

  /// y d/dy = alpha sin^2 D_R + D_beta / 2.
  Expr y_dy(double alpha) const { return monomial(alpha, 0, 0, 2, 0) * D_R() + 0.5 * D_beta(); }

  /// d/dx with rho = R^{1/alpha}.
  Expr dx(double alpha) const {
    check_alpha(alpha);
    return monomial(alpha, -1.0 / alpha, 0, 0, 1) * D_R() + monomial(-1.0, -1.0 / alpha, 0, 1, 0) * d_beta();
  }

  /// d/dy with rho = R^{1/alpha}.
  Expr dy(double alpha) const {
    check_alpha(alpha);
    return monomial(alpha, -1.0 / alpha, 0, 1, 0) * D_R() + monomial(1.0, -1.0 / alpha, 0, 0, 1) * d_beta();
  }

  double operator()(double R, double beta) const {
    const double s = std::sin(beta), c = std::cos(beta);
    double sum = 0.0;
    for (const auto& [k, v] : terms_) sum += v * pw(R, k[0]) * pw(1.0 + R, k[1]) * pw(s, k[2]) * pw(c, k[3]);
    return sum;
  }

  std::string str() const {
    std::ostringstream os;
    bool first = true;
    for (const auto& [k, v] : terms_) {
      if (!first) os << " + ";
      first = false;
      os << v << "*R^" << k[0] << "*(1+R)^" << k[1] << "*sin^" << k[2] << "*cos^" << k[3];
    }
    return first ? "0" : os.str();
  }

 private:
  static double pw(double x, double p) { return p == 0.0 ? 1.0 : std::pow(x, p); }

  void add(const Key& k, double v) {
    if (v == 0.0) return;
    auto it = terms_.find(k);
    if (it == terms_.end()) {
      terms_.emplace(k, v);
    } else {
      it->second += v;
      if (it->second == 0.0) terms_.erase(it);
    }
  }

  std::map<Key, double> terms_;
};

/// Builds a monomial Expr from named factors; rejects anything outside the family.
class ExprBuilder {
 public:
  explicit ExprBuilder(double alpha = 0.0) : alpha_(alpha) {}

  ExprBuilder& coef(double c) {
    coef_ *= c;
    return *this;
  }

  ExprBuilder& factor(const std::string& name, double power = 1.0) {
    if (name == "R") {
      e_[0] += power;
    } else if (name == "1+R") {
      e_[1] += power;
    } else if (name == "sin") {
      e_[2] += power;
    } else if (name == "cos") {
      e_[3] += power;
    } else if (name == "sin2beta") {
      coef_ *= std::pow(2.0, power);
      e_[2] += power;
      e_[3] += power;
    } else if (name == "Gamma") {  // cos^alpha
      need_alpha(name);
      e_[3] += alpha_ * power;
    } else if (name == "Gamma3D") {  // (sin cos^2)^{alpha/3}
      need_alpha(name);
      e_[2] += alpha_ / 3.0 * power;
      e_[3] += 2.0 * alpha_ / 3.0 * power;
    } else if (name == "rho") {
      need_alpha(name);
      e_[0] += power / alpha_;
    } else {
      throw UnsupportedFactor("factor '" + name + "' is outside the symbolic family");
    }
    return *this;
  }

  Expr build() const { return Expr::monomial(coef_, e_[0], e_[1], e_[2], e_[3]); }

 private:
  void need_alpha(const std::string& name) const {
    if (!(alpha_ > 0.0)) throw ParameterError("factor '" + name + "' needs alpha > 0");
  }

  double alpha_;
  double coef_ = 1.0;
  std::array<double, 4> e_{0, 0, 0, 0};
};

/// Derivative of an opaque function f(R, beta) when no symbolic form exists.
struct NumericDerivative {
  double value;
  bool numeric_fallback;
};

/// D_R^i D_beta^j by nested central differences in the log chart.
inline NumericDerivative numeric_derivative(const std::function<double(double, double)>& f, int i, int j, double R,
                                            double beta, double h = 1e-3) {
  const LogPolar p = to_logpolar(R, beta);
  std::function<double(double, double)> g = [&](double t, double u) {
    return f(std::exp(t), std::atan(std::exp(u)));
  };
  // d/dt^i (2 d/du)^j with a five-point stencil applied recursively.
  std::function<double(int, int, double, double)> rec = [&](int a, int b, double t, double u) -> double {
    if (a == 0 && b == 0) return g(t, u);
    if (a > 0) {
      return (-rec(a - 1, b, t + 2 * h, u) + 8 * rec(a - 1, b, t + h, u) - 8 * rec(a - 1, b, t - h, u) +
              rec(a - 1, b, t - 2 * h, u)) /
             (12 * h);
    }
    return 2.0 *
           (-rec(a, b - 1, t, u + 2 * h) + 8 * rec(a, b - 1, t, u + h) - 8 * rec(a, b - 1, t, u - h) +
            rec(a, b - 1, t, u - 2 * h)) /
           (12 * h);
  };
  return {rec(i, j, p.t, p.u), true};
}

}  // namespace blowlab
