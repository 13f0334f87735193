#pragma once
// Tensor Gauss-Legendre integration over the log-polar chart (t, u) = (log R, log tan beta)
// for functions given analytically. Rows in u are integrated over the whole line with
// per-row breakpoints; in t a core of panels between breakpoints is followed by a geometric
// tail toward large R and a march of fixed-width panels toward R -> 0 that stops once the
// contributions become negligible.

#include <algorithm>
#include <cmath>
#include <vector>

#include "blowlab/coords.hpp"
#include "blowlab/error.hpp"
#include "blowlab/quadrature.hpp"

namespace blowlab {

struct PolarQuadOptions {
  int t_order = 16;
  double t_panel = 0.5 * kLn2;  // panel width in the t core and in the downward march
  double rel_tol = 1e-14;       // downward march stops after `quiet_panels` panels below this
  int quiet_panels = 4;
  double t_floor = -600.0;      // march limit; reaching it without decay is a divergence
  double t_lower = -INFINITY;   // optional finite lower limit in t
  LineOptions u_line{16, 1.0, 1, 1.0, 1e-15, 60};
  LineOptions t_tail{16, 1.0, 1, 1.0, 1e-15, 60};
};

/// Integrates sum_nodes node(t, u, w) over the chart. `node` returns |contribution|, and
/// `u_breaks(t, out)` fills the u breakpoints of the row at t. Returns the summed magnitude.
template <class Node, class UBreaks>
double integrate_polar(Node& node, UBreaks& u_breaks, std::vector<double> t_breaks, const PolarQuadOptions& o,
                       const char* name = "polar integral") {
  std::vector<double> ub;
  auto row = [&](double t, double wt) {
    u_breaks(t, ub);
    auto visit = [&](double u, double wu) { return node(t, u, wt * wu); };
    return integrate_line(visit, -INFINITY, INFINITY, ub, o.u_line, name);
  };

  const bool bounded_below = std::isfinite(o.t_lower);
  std::vector<double> pts;
  for (double b : t_breaks)
    if (std::isfinite(b) && (!bounded_below || b > o.t_lower)) pts.push_back(b);
  if (bounded_below) pts.push_back(o.t_lower);
  if (pts.empty()) pts.push_back(0.0);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  double total = 0.0;
  for (size_t k = 0; k + 1 < pts.size(); ++k) {
    const double a = pts[k], b = pts[k + 1];
    const int n = std::max(1, static_cast<int>(std::ceil((b - a) / o.t_panel - 1e-9)));
    for (int p = 0; p < n; ++p) total += gl_panel(a + (b - a) * p / n, a + (b - a) * (p + 1) / n, o.t_order, row);
  }
  total += integrate_line(row, pts.back(), INFINITY, {}, o.t_tail, name);
  if (bounded_below) return total;

  // toward R -> 0: fixed-width panels aligned with the lowest breakpoint
  double a = pts.front();
  int quiet = 0;
  std::vector<double> trend;
  while (quiet < o.quiet_panels) {
    if (a < o.t_floor) throw DivergentIntegral(name, trend);
    const double c = gl_panel(a - o.t_panel, a, o.t_order, row);
    total += c;
    trend.push_back(c);
    if (trend.size() > 3) trend.erase(trend.begin());
    quiet = (c <= o.rel_tol * total) ? quiet + 1 : 0;
    a -= o.t_panel;
  }
  return total;
}

/// dR dbeta = R sin(beta) cos(beta) dt du, returned as a log.
inline double log_area_element(double t, double u) { return t + log_sin_beta(u) + log_cos_beta(u); }

}  // namespace blowlab
