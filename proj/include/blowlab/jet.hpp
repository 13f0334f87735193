#pragma once
// Truncated Taylor polynomials (forward-mode derivatives up to order N) in D = 2 variables,
// or in D = 1 variable for integrands that only vary along one direction.

#include <array>
#include <cmath>
#include <type_traits>

namespace blowlab {

template <int N, int D = 2>
class Jet {
 public:
  static_assert(N >= 0 && N <= 8, "jet order out of range");
  static_assert(D == 1 || D == 2, "jets have one or two variables");
  static constexpr int kOrder = N;
  static constexpr int kDim = D;
  static constexpr int kSize = D == 2 ? (N + 1) * (N + 2) / 2 : N + 1;

  /// Coefficient slot of d1^i d2^j; a one-variable jet stores the second variable only (i = 0).
  static constexpr int index(int i, int j) { return D == 2 ? i * (2 * N + 3 - i) / 2 + j : j; }

  Jet() { c_.fill(0.0); }
  Jet(double v) {  // NOLINT: implicit promotion from scalars is intended
    c_.fill(0.0);
    c_[0] = v;
  }

  /// Independent variable: value v, unit derivative in direction `which` (0 or 1).
  static Jet variable(double v, int which, double scale = 1.0) {
    Jet r(v);
    if (N >= 1) r.c_[(which == 0 && D == 2) ? index(1, 0) : index(0, 1)] = scale;
    return r;
  }

  double value() const { return c_[0]; }
  double coef(int i, int j) const { return c_[index(i, j)]; }
  double& coef(int i, int j) { return c_[index(i, j)]; }
  double operator[](int k) const { return c_[k]; }
  double& operator[](int k) { return c_[k]; }

  /// Partial derivative d^{i+j} / d1^i d2^j at the base point.
  double derivative(int i, int j) const { return coef(i, j) * fact(i) * fact(j); }

  bool is_constant() const {
    for (int k = 1; k < kSize; ++k)
      if (c_[k] != 0.0) return false;
    return true;
  }

  Jet& operator+=(const Jet& o) {
    for (int k = 0; k < kSize; ++k) c_[k] += o.c_[k];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    for (int k = 0; k < kSize; ++k) c_[k] -= o.c_[k];
    return *this;
  }
  Jet& operator*=(double s) {
    for (auto& v : c_) v *= s;
    return *this;
  }
  Jet& operator/=(double s) { return *this *= (1.0 / s); }
  Jet& operator+=(double s) {
    c_[0] += s;
    return *this;
  }
  Jet& operator-=(double s) {
    c_[0] -= s;
    return *this;
  }
  Jet& operator*=(const Jet& o) {
    *this = *this * o;
    return *this;
  }
  Jet& operator/=(const Jet& o) {
    *this = *this / o;
    return *this;
  }

  friend Jet operator-(const Jet& a) {
    Jet r;
    for (int k = 0; k < kSize; ++k) r.c_[k] = -a.c_[k];
    return r;
  }
  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator+(Jet a, double s) { return a += s; }
  friend Jet operator+(double s, Jet a) { return a += s; }
  friend Jet operator-(Jet a, double s) { return a -= s; }
  friend Jet operator-(double s, const Jet& a) { return (-a) += s; }
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator/(Jet a, double s) { return a /= s; }

  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet r;
    if constexpr (D == 1) {
      for (int k1 = 0; k1 <= N; ++k1) {
        const double av = a.c_[k1];
        if (av == 0.0) continue;
        for (int k2 = 0; k1 + k2 <= N; ++k2) r.c_[k1 + k2] += av * b.c_[k2];
      }
      return r;
    }
    for (int i1 = 0; i1 <= N; ++i1) {
      for (int j1 = 0; i1 + j1 <= N; ++j1) {
        const double av = a.c_[index(i1, j1)];
        if (av == 0.0) continue;
        const int rem = N - i1 - j1;
        for (int i2 = 0; i2 <= rem; ++i2) {
          const int base_r = index(i1 + i2, j1);
          const int base_b = index(i2, 0);
          for (int j2 = 0; i2 + j2 <= rem; ++j2) r.c_[base_r + j2] += av * b.c_[base_b + j2];
        }
      }
    }
    return r;
  }

  /// g(a) where coeffs[k] = g^{(k)}(a0)/k!.
  template <class Coeffs>
  static Jet compose(const Jet& a, const Coeffs& coeffs) {
    Jet d = a;
    d.c_[0] = 0.0;
    Jet r(coeffs[N]);
    for (int k = N - 1; k >= 0; --k) {
      r = r * d;
      r.c_[0] += coeffs[k];
    }
    return r;
  }

  friend Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }
  friend Jet operator/(double s, const Jet& b) { return reciprocal(b) *= s; }

  friend Jet reciprocal(const Jet& b) {
    std::array<double, N + 1> cf;
    const double inv = 1.0 / b.c_[0];
    double p = inv;
    for (int k = 0; k <= N; ++k) {
      cf[k] = (k % 2 == 0 ? p : -p);
      p *= inv;
    }
    return compose(b, cf);
  }

  static constexpr double fact(int k) {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
  }

 private:
  std::array<double, kSize> c_;
};

template <class T>
struct is_jet : std::false_type {};
template <int N, int D>
struct is_jet<Jet<N, D>> : std::true_type {};
template <class T>
inline constexpr bool is_jet_v = is_jet<std::decay_t<T>>::value;

inline double value_of(double x) { return x; }
template <int N, int D>
double value_of(const Jet<N, D>& x) {
  return x.value();
}

// ---- elementary functions on jets ----

template <int N, int D>
Jet<N, D> exp(const Jet<N, D>& a) {
  std::array<double, N + 1> cf;
  const double e = std::exp(a.value());
  for (int k = 0; k <= N; ++k) cf[k] = e / Jet<N, D>::fact(k);
  return Jet<N, D>::compose(a, cf);
}

template <int N, int D>
Jet<N, D> log(const Jet<N, D>& a) {
  std::array<double, N + 1> cf;
  const double a0 = a.value();
  cf[0] = std::log(a0);
  double p = 1.0 / a0;
  for (int k = 1; k <= N; ++k) {
    cf[k] = (k % 2 == 1 ? p : -p) / k;
    p /= a0;
  }
  return Jet<N, D>::compose(a, cf);
}

/// log(1 + a) with an accurate constant term for small a.
template <int N, int D>
Jet<N, D> log1p(const Jet<N, D>& a) {
  std::array<double, N + 1> cf;
  const double b0 = 1.0 + a.value();
  cf[0] = std::log1p(a.value());
  double p = 1.0 / b0;
  for (int k = 1; k <= N; ++k) {
    cf[k] = (k % 2 == 1 ? p : -p) / k;
    p /= b0;
  }
  return Jet<N, D>::compose(a, cf);
}

template <int N, int D>
Jet<N, D> pow(const Jet<N, D>& a, double p) {
  std::array<double, N + 1> cf;
  const double a0 = a.value();
  double binom = 1.0;
  for (int k = 0; k <= N; ++k) {
    cf[k] = binom * std::pow(a0, p - k);
    binom *= (p - k) / (k + 1);
  }
  return Jet<N, D>::compose(a, cf);
}

template <int N, int D>
Jet<N, D> sqrt(const Jet<N, D>& a) {
  return pow(a, 0.5);
}

template <int N, int D>
Jet<N, D> sin(const Jet<N, D>& a) {
  std::array<double, N + 1> cf;
  const double s = std::sin(a.value()), c = std::cos(a.value());
  const double cyc[4] = {s, c, -s, -c};
  for (int k = 0; k <= N; ++k) cf[k] = cyc[k % 4] / Jet<N, D>::fact(k);
  return Jet<N, D>::compose(a, cf);
}

template <int N, int D>
Jet<N, D> cos(const Jet<N, D>& a) {
  std::array<double, N + 1> cf;
  const double s = std::sin(a.value()), c = std::cos(a.value());
  const double cyc[4] = {c, -s, -c, s};
  for (int k = 0; k <= N; ++k) cf[k] = cyc[k % 4] / Jet<N, D>::fact(k);
  return Jet<N, D>::compose(a, cf);
}

template <int N, int D>
Jet<N, D> atan(const Jet<N, D>& a) {
  // Taylor coefficients of 1/(1+x^2) at x0, integrated once.
  const double x0 = a.value();
  const double p[3] = {1.0 + x0 * x0, 2.0 * x0, 1.0};
  std::array<double, N + 1> q{};
  for (int k = 0; k < N; ++k) {
    double s = (k == 0) ? 1.0 : 0.0;
    for (int m = 1; m <= std::min(k, 2); ++m) s -= p[m] * q[k - m];
    q[k] = s / p[0];
  }
  std::array<double, N + 1> cf;
  cf[0] = std::atan(x0);
  for (int k = 1; k <= N; ++k) cf[k] = q[k - 1] / k;
  return Jet<N, D>::compose(a, cf);
}

template <int N, int D>
Jet<N, D> abs(const Jet<N, D>& a) {
  return a.value() < 0.0 ? -a : a;
}

}  // namespace blowlab
