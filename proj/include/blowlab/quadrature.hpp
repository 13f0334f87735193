#pragma once
// Gauss-Legendre panels with breakpoints and geometric tails, and tanh-sinh.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include "blowlab/error.hpp"

namespace blowlab {

struct GaussRule {
  std::vector<double> x;  // nodes on [-1, 1]
  std::vector<double> w;
};

/// n-point Gauss-Legendre rule (Newton on P_n), cached.
inline const GaussRule& gauss_legendre(int n) {
  static std::mutex mu;
  static std::map<int, GaussRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  GaussRule r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it2 = 0; it2 < 100; ++it2) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0, p1 = z;
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    r.x[n - 1 - i] = z;
    r.w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return cache.emplace(n, std::move(r)).first->second;
}

/// Tail panels in a row that each exceed the running total before an integral is declared divergent.
inline constexpr int kTailGrowthPanels = 8;

struct LineOptions {
  int order = 16;
  double max_panel = 1.0;     // widest panel inside the core
  int min_split = 4;          // panels per short gap between breakpoints
  double tail_width = 1.0;    // first tail panel width (doubles outward)
  double tail_rel_tol = 1e-15;
  int max_tail_panels = 48;
};

/// Visitor receives (x, w) and returns |contribution| used for tail stopping.
template <class Visitor>
double gl_panel(double a, double b, int order, Visitor& visit) {
  const GaussRule& g = gauss_legendre(order);
  const double h = 0.5 * (b - a), m = 0.5 * (a + b);
  double size = 0.0;
  for (size_t k = 0; k < g.x.size(); ++k) size += visit(m + h * g.x[k], h * g.w[k]);
  return size;
}

namespace detail {

inline void push_gap(double a, double b, const LineOptions& o, std::vector<std::pair<double, double>>& out) {
  const double g = b - a;
  if (!(g > 0.0)) return;
  if (g <= 4.0 * o.max_panel) {
    const int n = std::max(o.min_split, static_cast<int>(std::ceil(g / o.max_panel)));
    for (int k = 0; k < n; ++k) out.emplace_back(a + g * k / n, a + g * (k + 1) / n);
    return;
  }
  // graded from both ends toward the middle
  std::vector<double> left{a}, right{b};
  double w = o.max_panel;
  while (right.back() - left.back() > 2.0 * w) {
    left.push_back(left.back() + w);
    right.push_back(right.back() - w);
    w *= 2.0;
  }
  std::vector<double> pts = left;
  if (right.back() - left.back() > w) pts.push_back(0.5 * (left.back() + right.back()));
  for (auto it = right.rbegin(); it != right.rend(); ++it) pts.push_back(*it);
  for (size_t k = 0; k + 1 < pts.size(); ++k) out.emplace_back(pts[k], pts[k + 1]);
}

}  // namespace detail

/// Integrates over [lo, hi] (either end may be infinite) with panels split at `breaks`.
/// Infinite ends are covered by geometrically widening tail panels that stop once
/// their contribution is negligible; a tail that does not decay raises DivergentIntegral.
template <class Visitor>
double integrate_line(Visitor& visit, double lo, double hi, std::vector<double> breaks, const LineOptions& o,
                    const char* name = "line integral") {
  const bool lo_inf = std::isinf(lo), hi_inf = std::isinf(hi);
  std::vector<double> pts;
  for (double b : breaks)
    if (b > lo && b < hi && std::isfinite(b)) pts.push_back(b);
  if (!lo_inf) pts.push_back(lo);
  if (!hi_inf) pts.push_back(hi);
  if (pts.empty()) pts.push_back(0.0);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  std::vector<std::pair<double, double>> panels;
  for (size_t k = 0; k + 1 < pts.size(); ++k) detail::push_gap(pts[k], pts[k + 1], o, panels);
  double total = 0.0;
  for (auto& [a, b] : panels) total += gl_panel(a, b, o.order, visit);

  auto tail = [&](double start, double dir) {
    double w = o.tail_width;
    double x = start;
    int quiet = 0, growing = 0;
    std::vector<double> trend;
    for (int k = 0; k < o.max_tail_panels; ++k) {
      const double nx = x + dir * w;
      const double c = dir > 0 ? gl_panel(x, nx, o.order, visit) : gl_panel(nx, x, o.order, visit);
      trend.push_back(c);
      if (!std::isfinite(c)) throw DivergentIntegral(name, trend);
      // a panel outweighing everything before it, panel after panel, is growth without decay
      growing = c > total ? growing + 1 : 0;
      if (growing >= kTailGrowthPanels) throw DivergentIntegral(name, trend);
      total += c;
      if (c <= o.tail_rel_tol * total || c == 0.0) {
        if (++quiet >= 2) return;
      } else {
        quiet = 0;
      }
      x = nx;
      w *= 2.0;
    }
    const double last = trend.back();
    if (last > 1e-8 * total) throw DivergentIntegral(name, trend);
  };
  if (lo_inf) tail(pts.front(), -1.0);
  if (hi_inf) tail(pts.back(), +1.0);
  return total;
}

/// Convenience: scalar integral of f over [lo, hi].
template <class F>
double integrate_1d(F&& f, double lo, double hi, const std::vector<double>& breaks = {},
                    const LineOptions& o = LineOptions{}) {
  double sum = 0.0;
  auto visit = [&](double x, double w) {
    const double v = w * f(x);
    sum += v;
    return std::abs(v);
  };
  integrate_line(visit, lo, hi, breaks, o);
  return sum;
}

/// Double-exponential (tanh-sinh) quadrature on [a, b]; tolerates endpoint singularities.
template <class F>
double tanh_sinh(F&& f, double a, double b, double tol = 1e-12, int max_level = 10) {
  const double h2 = 0.5 * (b - a);
  // node pair at +-t: offsets from each endpoint computed without cancellation
  auto pair = [&](double t) {
    const double s = 0.5 * M_PI * std::sinh(t);
    const double e = std::exp(-2.0 * s);
    const double gap = 2.0 * e / (1.0 + e);  // 1 - tanh(s)
    const double ch = std::cosh(s);
    const double w = 0.5 * M_PI * std::cosh(t) / (ch * ch);
    if (gap == 0.0 || !std::isfinite(w) || w == 0.0) return 0.0;
    return w * (f(a + h2 * gap) + f(b - h2 * gap));
  };
  const double tmax = 4.0;
  double h = 1.0;
  double sum = f(a + h2);
  sum *= 0.5 * M_PI;
  for (double t = h; t <= tmax; t += h) sum += pair(t);
  double prev = sum * h * h2;
  for (int level = 1; level <= max_level; ++level) {
    h *= 0.5;
    for (double t = h; t <= tmax; t += 2.0 * h) sum += pair(t);
    const double cur = sum * h * h2;
    if (level >= 3 && std::abs(cur - prev) <= tol * std::max(1.0, std::abs(cur))) return cur;
    prev = cur;
  }
  return prev;
}

}  // namespace blowlab
