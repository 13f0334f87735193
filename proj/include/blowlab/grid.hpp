#pragma once
// Sampled fields on the log-polar grid (uniform in t = log R and u = log tan beta)
// or on the Cartesian box [0, L]^2, with quadrature, finite differences and file I/O.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "blowlab/coords.hpp"
#include "blowlab/error.hpp"

namespace blowlab {

/// Uniform grid in (t, u); node (i, j) sits at R = e^{t_i}, beta = arctan(e^{u_j}).
struct PolarGrid {
  double t_min = -40 * kLn2;
  double t_max = 40 * kLn2;
  int n_t = 512;
  double u_min = -30.0;
  double u_max = 30.0;
  int n_u = 256;

  static PolarGrid make(int n_R, int n_beta, double R_min = std::ldexp(1.0, -40), double R_max = std::ldexp(1.0, 40),
                        double u_extent = 30.0) {
    if (n_R < 4 || n_beta < 4) throw ParameterError("polar grid needs at least 4 nodes per direction");
    if (!(R_min > 0.0) || !(R_max > R_min)) throw ParameterError("polar grid needs 0 < R_min < R_max");
    if (!(u_extent > 0.0)) throw ParameterError("polar grid needs positive angular extent");
    return PolarGrid{std::log(R_min), std::log(R_max), n_R, -u_extent, u_extent, n_beta};
  }

  double h_t() const { return (t_max - t_min) / (n_t - 1); }
  double h_u() const { return (u_max - u_min) / (n_u - 1); }
  double t(int i) const { return t_min + i * h_t(); }
  double u(int j) const { return u_min + j * h_u(); }
  double R(int i) const { return std::exp(t(i)); }
  double beta(int j) const { return beta_of(u(j)); }
  size_t size() const { return static_cast<size_t>(n_t) * n_u; }

  /// Weights for dR over [R_{i0}, R_{i1}], exact for cubics in R on every cell.
  std::vector<double> weights_R(int i0 = 0, int i1 = -1) const;

  /// Trapezoid weights for dbeta = sin(beta) cos(beta) du.
  std::vector<double> weights_beta() const {
    std::vector<double> w(n_u);
    for (int j = 0; j < n_u; ++j) {
      const double ends = (j == 0 || j == n_u - 1) ? 0.5 : 1.0;
      w[j] = ends * h_u() * 0.5 * sin2_beta(u(j));
    }
    return w;
  }
};

namespace detail {
inline std::vector<double> cubic_cell_weights(const std::vector<double>& R);
}

inline std::vector<double> PolarGrid::weights_R(int i0, int i1) const {
  if (i1 < 0) i1 = n_t - 1;
  if (i1 - i0 < 3) {
    // a single short range: take the cubic through four neighbouring nodes
    std::vector<double> w(n_t, 0.0);
    const int s = std::clamp(i0 - 1, 0, n_t - 4);
    std::vector<double> R4(4);
    for (int m = 0; m < 4; ++m) R4[m] = R(s + m);
    // integrate the cubic interpolant over [R(i0), R(i1)] with 4-point Gauss
    static const double gx[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526};
    static const double gw[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538};
    const double a = R(i0), b = R(i1);
    for (int g = 0; g < 4; ++g) {
      const double x = a + 0.5 * (gx[g] + 1.0) * (b - a);
      for (int m = 0; m < 4; ++m) {
        double l = 1.0;
        for (int q = 0; q < 4; ++q)
          if (q != m) l *= (x - R4[q]) / (R4[m] - R4[q]);
        w[s + m] += 0.5 * gw[g] * l * (b - a);
      }
    }
    return w;
  }
  std::vector<double> Rs;
  for (int i = i0; i <= i1; ++i) Rs.push_back(R(i));
  const std::vector<double> sub = detail::cubic_cell_weights(Rs);
  std::vector<double> w(n_t, 0.0);
  for (int i = i0; i <= i1; ++i) w[i] = sub[i - i0];
  return w;
}

/// Nodes x_j = j L / n, j = 0..n in both directions of [0, L]^2.
struct BoxGrid {
  double L = 8.0;
  int n = 128;
  double h() const { return L / n; }
  double x(int j) const { return j * L / n; }
  size_t size() const { return static_cast<size_t>(n + 1) * (n + 1); }
};

enum class Parity { none, odd_x, even_x, sin_sin, cos_cos, sin_cos, cos_sin };

inline std::string to_string(Parity p) {
  switch (p) {
    case Parity::none: return "none";
    case Parity::odd_x: return "odd_x";
    case Parity::even_x: return "even_x";
    case Parity::sin_sin: return "sin_sin";
    case Parity::cos_cos: return "cos_cos";
    case Parity::sin_cos: return "sin_cos";
    case Parity::cos_sin: return "cos_sin";
  }
  return "none";
}

inline Parity parity_from_string(const std::string& s) {
  for (Parity p : {Parity::none, Parity::odd_x, Parity::even_x, Parity::sin_sin, Parity::cos_cos, Parity::sin_cos,
                   Parity::cos_sin})
    if (to_string(p) == s) return p;
  throw FormatError("unknown parity '" + s + "'");
}

struct Field {
  std::variant<PolarGrid, BoxGrid> grid;
  std::vector<double> values;  // row-major: polar (i_t, j_u), box (i_x, j_y)
  Parity parity = Parity::none;
  double alpha = 0.0;
  std::string name;

  bool is_polar() const { return std::holds_alternative<PolarGrid>(grid); }
  const PolarGrid& polar() const { return std::get<PolarGrid>(grid); }
  const BoxGrid& box() const { return std::get<BoxGrid>(grid); }
  int rows() const { return is_polar() ? polar().n_t : box().n + 1; }
  int cols() const { return is_polar() ? polar().n_u : box().n + 1; }
  double& at(int i, int j) { return values[static_cast<size_t>(i) * cols() + j]; }
  double at(int i, int j) const { return values[static_cast<size_t>(i) * cols() + j]; }
};

/// Samples f(t, u) on a polar grid.
template <class F>
Field sample_polar(const PolarGrid& g, F&& f, double alpha, std::string name = {}, Parity parity = Parity::none) {
  Field out{g, std::vector<double>(g.size()), parity, alpha, std::move(name)};
  for (int i = 0; i < g.n_t; ++i)
    for (int j = 0; j < g.n_u; ++j) out.at(i, j) = f(g.t(i), g.u(j));
  return out;
}

/// Samples f(x, y) on a box grid.
template <class F>
Field sample_box(const BoxGrid& g, F&& f, Parity parity, std::string name = {}) {
  Field out{g, std::vector<double>(g.size()), parity, 0.0, std::move(name)};
  for (int i = 0; i <= g.n; ++i)
    for (int j = 0; j <= g.n; ++j) out.at(i, j) = f(g.x(i), g.x(j));
  return out;
}

// ---- weights ----

/// Weight multiplying the integrand, given as log w(t, u) so that extreme values stay finite.
struct WeightSpec {
  std::string name = "plain";
  std::function<double(double, double)> log_weight = [](double, double) { return 0.0; };
};

namespace weights {

inline WeightSpec plain() { return {}; }

/// (1+R)^4 / R^4 times an angular factor.
inline double log_radial(double t) { return 4.0 * (softplus(t) - t); }

inline constexpr double kSigma = 0.99;

inline WeightSpec phi1() {
  return {"phi1", [](double t, double u) { return log_radial(t) - kSigma * std::log(sin2_beta(u)); }};
}
inline WeightSpec phi2(double alpha) {
  const double gamma = 1.0 + alpha / 10.0;
  return {"phi2", [gamma](double t, double u) { return log_radial(t) - gamma * std::log(sin2_beta(u)); }};
}
inline WeightSpec psi1() {
  return {"psi1", [](double t, double u) {
            return log_radial(t) - kSigma * (log_sin_beta(u) + log_cos_beta(u));
          }};
}
inline WeightSpec psi2(double alpha) {
  const double gamma = 1.0 + alpha / 10.0;
  return {"psi2", [gamma](double t, double u) {
            return log_radial(t) - kSigma * log_sin_beta(u) - gamma * log_cos_beta(u);
          }};
}
/// (R^{-3} + 1) sin(2 beta)
inline WeightSpec l2_omega() {
  return {"L2_omega", [](double t, double u) { return softplus(-3.0 * t) + std::log(sin2_beta(u)); }};
}
/// (R^{-4} + R) / Gamma(beta), Gamma = cos^alpha
inline WeightSpec l2_eta(double alpha) {
  return {"L2_eta", [alpha](double t, double u) {
            return std::max(-4.0 * t, t) + std::log1p(std::exp(-std::abs(5.0 * t))) - alpha * log_cos_beta(u);
          }};
}
/// sin(2 beta) / R  (the 2D functional density)
inline WeightSpec l2d12() {
  return {"L2D12", [](double t, double u) { return std::log(sin2_beta(u)) - t; }};
}
/// 3 sin(beta) cos^2(beta) / R  (the 3D functional density)
inline WeightSpec l3d12() {
  return {"L3D12", [](double t, double u) {
            return std::log(3.0) + log_sin_beta(u) + 2.0 * log_cos_beta(u) - t;
          }};
}

}  // namespace weights

struct Integral {
  double value = 0.0;
  double error = 0.0;
};

namespace detail {

/// Weights for dR on arbitrary increasing nodes, exact for cubics in R on every cell.
inline std::vector<double> cubic_cell_weights(const std::vector<double>& R) {
  const int n = static_cast<int>(R.size());
  std::vector<double> w(n, 0.0);
  static const double gx[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526};
  static const double gw[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538};
  for (int k = 0; k + 1 < n; ++k) {
    const int s = std::clamp(k - 1, 0, n - 4);
    const double a = R[k], b = R[k + 1];
    double nodes[4];
    for (int m = 0; m < 4; ++m) nodes[m] = (R[s + m] - a) / (b - a);
    for (int g = 0; g < 4; ++g) {
      const double x = 0.5 * (gx[g] + 1.0);
      for (int m = 0; m < 4; ++m) {
        double l = 1.0;
        for (int q = 0; q < 4; ++q)
          if (q != m) l *= (x - nodes[q]) / (nodes[m] - nodes[q]);
        w[s + m] += 0.5 * gw[g] * l * (b - a);
      }
    }
  }
  return w;
}

/// Tail of a density d(x) ~ d_end e^{-k |x - x_end|} fitted from the two outermost samples.
inline bool exp_tail(double d_prev, double d_end, double spacing, double& tail) {
  tail = 0.0;
  if (d_end == 0.0) return true;
  if (d_prev == 0.0 || (d_prev > 0) != (d_end > 0)) return false;
  const double k = std::log(d_prev / d_end) / spacing;
  if (!(k > 0.0)) return false;
  tail = d_end / k;
  return true;
}

/// Power-law tail int_{R_end}^{inf} (hi=true) or int_0^{R_end} of G ~ A R^p from two samples.
inline bool power_tail(double R1, double G1, double R2, double G2, bool hi, double& tail) {
  tail = 0.0;
  if (G2 == 0.0) return true;
  if (G1 == 0.0 || (G1 > 0) != (G2 > 0)) return false;
  const double p = std::log(G2 / G1) / std::log(R2 / R1);
  if (hi) {
    if (p >= -1.0 - 1e-3) return false;  // too slow to sum as a tail
    tail = -G2 * R2 / (p + 1.0);
  } else {
    if (p <= -1.0 + 1e-3) return false;
    tail = G2 * R2 / (p + 1.0);
  }
  return true;
}

inline std::vector<int> strided(int n, int stride) {
  std::vector<int> idx;
  for (int k = 0; k < n; k += stride) idx.push_back(k);
  if (idx.back() != n - 1) idx.push_back(n - 1);
  return idx;
}

inline double polar_sum(const Field& f, const WeightSpec& w, int stride, double& tails, double tail_scale,
                        bool throw_on_divergence) {
  const PolarGrid& g = f.polar();
  const std::vector<int> it = strided(g.n_t, stride), iu = strided(g.n_u, stride);
  const int n = static_cast<int>(it.size()), m = static_cast<int>(iu.size());
  std::vector<double> Rs(n), us(m);
  for (int a = 0; a < n; ++a) Rs[a] = g.R(it[a]);
  for (int b = 0; b < m; ++b) us[b] = g.u(iu[b]);
  const std::vector<double> wr = cubic_cell_weights(Rs);
  std::vector<double> wu(m), sb(m);
  for (int b = 0; b < m; ++b) {
    const double lo = b > 0 ? us[b - 1] : us[b], hi = b + 1 < m ? us[b + 1] : us[b];
    sb[b] = 0.5 * sin2_beta(us[b]);
    wu[b] = 0.5 * (hi - lo) * sb[b];
  }
  std::vector<double> row(n, 0.0), col(m, 0.0);  // row: int f w dbeta; col: int f w dR
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < m; ++b) {
      const double v = f.at(it[a], iu[b]);
      if (v == 0.0) continue;
      const double ww = v * std::exp(w.log_weight(std::log(Rs[a]), us[b]));
      row[a] += ww * wu[b];
      col[b] += ww * wr[a];
    }
  }
  double sum = 0.0;
  for (int a = 0; a < n; ++a) sum += row[a] * wr[a];
  tails = 0.0;
  auto diverge = [&](const char* where, std::vector<double> v) {
    if (throw_on_divergence) throw DivergentIntegral(w.name + " (" + where + ")", std::move(v));
  };
  double tail = 0.0;
  if (!power_tail(Rs[n - 2], row[n - 2], Rs[n - 1], row[n - 1], true, tail) &&
      std::abs(row[n - 1] * Rs[n - 1]) > tail_scale * 1e-12)
    diverge("R -> infinity", {row[n - 3], row[n - 2], row[n - 1]});
  tails += tail;
  if (!power_tail(Rs[1], row[1], Rs[0], row[0], false, tail) && std::abs(row[0] * Rs[0]) > tail_scale * 1e-12)
    diverge("R -> 0", {row[2], row[1], row[0]});
  tails += tail;
  // densities per unit u at the angular ends
  auto dens = [&](int b) { return col[b] * sb[b]; };
  if (!exp_tail(dens(m - 2), dens(m - 1), us[m - 1] - us[m - 2], tail) && std::abs(dens(m - 1)) > tail_scale * 1e-12)
    diverge("beta -> pi/2", {dens(m - 3), dens(m - 2), dens(m - 1)});
  tails += tail;
  if (!exp_tail(dens(1), dens(0), us[1] - us[0], tail) && std::abs(dens(0)) > tail_scale * 1e-12)
    diverge("beta -> 0", {dens(2), dens(1), dens(0)});
  tails += tail;
  return sum;
}

}  // namespace detail

/// int int f w dR dbeta over the grid with extrapolated tails; the error estimate compares full and
/// half resolution.
inline Integral integrate(const Field& f, const WeightSpec& w = weights::plain(), bool include_tails = true) {
  if (!f.is_polar()) {
    const BoxGrid& b = f.box();
    // trapezoid on [0, L]^2 with plain weight
    double s = 0.0;
    for (int i = 0; i <= b.n; ++i)
      for (int j = 0; j <= b.n; ++j) {
        const double wi = (i == 0 || i == b.n) ? 0.5 : 1.0, wj = (j == 0 || j == b.n) ? 0.5 : 1.0;
        s += wi * wj * f.at(i, j);
      }
    return {s * b.h() * b.h(), 0.0};
  }
  double scale = 0.0;
  for (double v : f.values) scale = std::max(scale, std::abs(v));
  double tails_full = 0.0, tails_half = 0.0;
  const double full = detail::polar_sum(f, w, 1, tails_full, scale, include_tails);
  double half = full;
  tails_half = tails_full;
  const PolarGrid& g = f.polar();
  if (g.n_t >= 9 && g.n_u >= 9) half = detail::polar_sum(f, w, 2, tails_half, scale, false);
  // one Richardson step against the stride-2 sub-grid (the cell rule is fourth order)
  const double a = full + (include_tails ? tails_full : 0.0);
  const double b = half + (include_tails ? tails_half : 0.0);
  Integral r;
  r.value = a + (a - b) / 15.0;
  r.error = std::abs(a - b) / 15.0 + (include_tails ? 0.01 * std::abs(tails_full) : 0.0);
  return r;
}

// ---- finite differences ----

/// Fornberg weights for the m-th derivative at x0 from the given nodes.
inline std::vector<double> fd_weights(double x0, const std::vector<double>& x, int m) {
  const int n = static_cast<int>(x.size()) - 1;
  std::vector<std::vector<double>> c(n + 1, std::vector<double>(m + 1, 0.0));
  double c1 = 1.0, c4 = x[0] - x0;
  c[0][0] = 1.0;
  for (int i = 1; i <= n; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n + 1);
  for (int i = 0; i <= n; ++i) w[i] = c[i][m];
  return w;
}

namespace detail {

/// First derivative along one axis with 9-point stencils (centered inside, one-sided at the ends).
inline void diff_axis(const std::vector<double>& in, std::vector<double>& out, int n, int stride, int count,
                      int other_stride, double h) {
  constexpr int kW = 9;
  std::vector<std::vector<double>> stencils(n);
  std::vector<int> start(n);
  for (int i = 0; i < n; ++i) {
    const int s = std::clamp(i - kW / 2, 0, n - kW);
    start[i] = s;
    std::vector<double> x(kW);
    for (int k = 0; k < kW; ++k) x[k] = (s + k - i) * h;
    stencils[i] = fd_weights(0.0, x, 1);
  }
  for (int c = 0; c < count; ++c) {
    const size_t base = static_cast<size_t>(c) * other_stride;
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int k = 0; k < kW; ++k) acc += stencils[i][k] * in[base + static_cast<size_t>(start[i] + k) * stride];
      out[base + static_cast<size_t>(i) * stride] = acc;
    }
  }
}

}  // namespace detail

struct DerivOp {
  int i = 0;  // powers of D_R
  int j = 0;  // powers of D_beta
};

/// D_R^i D_beta^j of a polar field (8th-order differences; D_R = d/dt, D_beta = 2 d/du).
inline Field discrete_deriv(const Field& f, DerivOp op) {
  if (!f.is_polar()) throw DomainError("discrete_deriv expects a polar field");
  const PolarGrid& g = f.polar();
  if (g.n_t < 9 || g.n_u < 9) throw ParameterError("discrete_deriv needs at least 9 nodes per direction");
  Field out = f;
  std::vector<double> tmp(f.values.size());
  for (int k = 0; k < op.i; ++k) {
    detail::diff_axis(out.values, tmp, g.n_t, g.n_u, g.n_u, 1, g.h_t());
    out.values.swap(tmp);
  }
  for (int k = 0; k < op.j; ++k) {
    detail::diff_axis(out.values, tmp, g.n_u, 1, g.n_t, g.n_u, g.h_u());
    for (double& v : tmp) v *= 2.0;
    out.values.swap(tmp);
  }
  out.name = f.name + "_D" + std::to_string(op.i) + std::to_string(op.j);
  return out;
}

/// Local bicubic interpolation of a polar field at (t, u); clamps outside the grid.
inline double interpolate(const Field& f, double t, double u) {
  const PolarGrid& g = f.polar();
  auto lagr = [](double s, double w[4]) {
    // nodes -1, 0, 1, 2
    w[0] = -s * (s - 1) * (s - 2) / 6.0;
    w[1] = (s + 1) * (s - 1) * (s - 2) / 2.0;
    w[2] = -(s + 1) * s * (s - 2) / 2.0;
    w[3] = (s + 1) * s * (s - 1) / 6.0;
  };
  const double ft = std::clamp((t - g.t_min) / g.h_t(), 0.0, g.n_t - 1.0);
  const double fu = std::clamp((u - g.u_min) / g.h_u(), 0.0, g.n_u - 1.0);
  const int it = std::clamp(static_cast<int>(std::floor(ft)), 1, g.n_t - 3);
  const int iu = std::clamp(static_cast<int>(std::floor(fu)), 1, g.n_u - 3);
  double wt[4], wu[4];
  lagr(ft - it, wt);
  lagr(fu - iu, wu);
  double s = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) s += wt[a] * wu[b] * f.at(it - 1 + a, iu - 1 + b);
  return s;
}

// ---- I/O ----

namespace detail {

inline uint64_t fnv1a(const void* data, size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  uint64_t h = 1469598103934665603ULL;
  for (size_t k = 0; k < n; ++k) {
    h ^= p[k];
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace detail

inline constexpr const char* kFieldMagic = "BLOWLAB-FIELD 1";

inline nlohmann::json grid_to_json(const Field& f) {
  nlohmann::json j;
  if (f.is_polar()) {
    const PolarGrid& g = f.polar();
    j = {{"coords", "polar"}, {"t_min", g.t_min}, {"t_max", g.t_max}, {"n_t", g.n_t},
         {"u_min", g.u_min},  {"u_max", g.u_max}, {"n_u", g.n_u}};
  } else {
    const BoxGrid& g = f.box();
    j = {{"coords", "box"}, {"L", g.L}, {"n", g.n}};
  }
  return j;
}

inline void save_field(const Field& f, const std::string& path) {
  nlohmann::json h;
  h["grid"] = grid_to_json(f);
  h["parity"] = to_string(f.parity);
  h["alpha"] = f.alpha;
  h["name"] = f.name;
  h["count"] = f.values.size();
  h["checksum"] = std::to_string(detail::fnv1a(f.values.data(), f.values.size() * sizeof(double)));
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  os << kFieldMagic << "\n" << h.dump() << "\n";
  os.write(reinterpret_cast<const char*>(f.values.data()), static_cast<std::streamsize>(f.values.size() * sizeof(double)));
  if (!os) throw Error("write failed for '" + path + "'");
}

inline Field load_field(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open field file '" + path + "'");
  std::string magic, header;
  std::getline(is, magic);
  if (magic != kFieldMagic) throw FormatError("'" + path + "' is not a field file");
  std::getline(is, header);
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(header);
  } catch (const std::exception& e) {
    throw FormatError("corrupt field header in '" + path + "': " + e.what());
  }
  Field f;
  try {
    const auto& g = h.at("grid");
    if (g.at("coords") == "polar") {
      PolarGrid pg{g.at("t_min"), g.at("t_max"), g.at("n_t"), g.at("u_min"), g.at("u_max"), g.at("n_u")};
      f.grid = pg;
    } else if (g.at("coords") == "box") {
      f.grid = BoxGrid{g.at("L"), g.at("n")};
    } else {
      throw FormatError("unknown coordinate tag");
    }
    f.parity = parity_from_string(h.at("parity"));
    f.alpha = h.at("alpha");
    f.name = h.value("name", "");
    const size_t count = h.at("count");
    const size_t expect = f.is_polar() ? f.polar().size() : f.box().size();
    if (count != expect) throw FormatError("value count does not match grid in '" + path + "'");
    f.values.resize(count);
    is.read(reinterpret_cast<char*>(f.values.data()), static_cast<std::streamsize>(count * sizeof(double)));
    if (static_cast<size_t>(is.gcount()) != count * sizeof(double)) throw FormatError("truncated field file '" + path + "'");
    if (std::to_string(detail::fnv1a(f.values.data(), count * sizeof(double))) != h.at("checksum").get<std::string>())
      throw FormatError("checksum mismatch in '" + path + "'");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("corrupt field header in '" + path + "': " + e.what());
  }
  return f;
}

}  // namespace blowlab
