#pragma once
// Smooth cutoff chi (1 on s <= 1, 0 on s >= 2), the dyadic partition Phi_i
// and the angular scales lambda_i = 2^{-12 i / alpha}.

#include <cmath>
#include <vector>

#include "blowlab/coords.hpp"
#include "blowlab/jet.hpp"

namespace blowlab {

namespace detail {

/// exp(-1/a) for a > 0, 0 otherwise.
template <class T>
T flat_bump(const T& a) {
  using std::exp;
  const double a0 = value_of(a);
  if (a0 <= 1.0 / 700.0) return T(0.0);
  return exp(-1.0 / a);
}

}  // namespace detail

/// chi(s) = b(2-s) / (b(2-s) + b(s-1)) with b(a) = exp(-1/a); C^infinity and monotone.
template <class T>
T chi(const T& s) {
  const double s0 = value_of(s);
  if (s0 <= 1.0) return T(1.0);
  if (s0 >= 2.0) return T(0.0);
  T p = detail::flat_bump(T(2.0 - s));
  T q = detail::flat_bump(T(s - 1.0));
  return p / (p + q);
}

/// chi evaluated at exp(log_s); avoids overflow for huge or tiny ratios.
template <class T>
T chi_log(const T& log_s) {
  using std::exp;
  const double l0 = value_of(log_s);
  if (l0 <= 0.0) return T(1.0);
  if (l0 >= kLn2) return T(0.0);
  return chi(T(exp(log_s)));
}

/// Even extension chi(|s|).
template <class T>
T chi_even(const T& s) {
  return value_of(s) < 0.0 ? chi(T(-s)) : chi(s);
}

/// Phi_0(R) = 1 - chi(R), Phi_i(R) = chi(2^{i-1} R) - chi(2^i R); argument is t = log R.
template <class T>
T dyadic_phi(int i, const T& t) {
  if (i == 0) return 1.0 - chi_log(t);
  return chi_log(T(t + (i - 1) * kLn2)) - chi_log(T(t + i * kLn2));
}

/// Indices i >= 0 with Phi_i(e^t) possibly nonzero (support of Phi_i is (2^{-i}, 2^{2-i})).
inline void active_dyadic(double t, int i_max, std::vector<int>& out) {
  out.clear();
  const double l2 = t / kLn2;  // log2 R
  if (l2 > 0.0) out.push_back(0);
  const int lo = std::max(1, static_cast<int>(std::floor(-l2)));
  const int hi = std::min(i_max, static_cast<int>(std::ceil(2.0 - l2)));
  for (int i = lo; i <= hi; ++i) {
    if (l2 > -i && l2 < 2 - i) out.push_back(i);
  }
}

/// log lambda_i = -exponent * i * ln 2 / alpha (lambda_i itself underflows for small alpha).
inline double log_lambda(int i, double alpha, double exponent = 12.0) { return -exponent * i * kLn2 / alpha; }

}  // namespace blowlab
