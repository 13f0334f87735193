#pragma once
// Half-plane Biot-Savart law on the box [0, L]^2. A field odd in x is stored on x >= 0;
// the wall condition psi(x, 0) = 0 is an odd reflection in y. Both become sine series,
// so the symmetry and Dirichlet conditions hold exactly. Even directions use cosine series.
//
// Nodes are x_j = j L / n, j = 0..n (the BoxGrid of grid.hpp). A sine direction has modes
// m = 1..n-1 (DST-I on the interior nodes), a cosine direction m = 0..n (DCT-I).
// Coefficient arrays share the (n+1) x (n+1) layout of the grid values.

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "blowlab/coords.hpp"
#include "blowlab/error.hpp"
#include "blowlab/grid.hpp"
#include "blowlab/holder.hpp"
#include "blowlab/jet.hpp"
#include "blowlab/quadrature.hpp"

namespace blowlab {

enum class Trig { sine, cosine };

inline Trig trig_x(Parity p) {
  switch (p) {
    case Parity::sin_sin:
    case Parity::sin_cos: return Trig::sine;
    case Parity::cos_sin:
    case Parity::cos_cos: return Trig::cosine;
    default: throw DomainError("box field needs a sin/cos parity tag, got " + to_string(p));
  }
}
inline Trig trig_y(Parity p) {
  switch (p) {
    case Parity::sin_sin:
    case Parity::cos_sin: return Trig::sine;
    case Parity::sin_cos:
    case Parity::cos_cos: return Trig::cosine;
    default: throw DomainError("box field needs a sin/cos parity tag, got " + to_string(p));
  }
}
inline Parity parity_of(Trig x, Trig y) {
  if (x == Trig::sine) return y == Trig::sine ? Parity::sin_sin : Parity::sin_cos;
  return y == Trig::sine ? Parity::cos_sin : Parity::cos_cos;
}
inline Trig other(Trig k) { return k == Trig::sine ? Trig::cosine : Trig::sine; }

/// Coefficients of a box field: amplitude of sin/cos(m pi x / L) sin/cos(n pi y / L) at (m, n).
struct Spectrum {
  std::vector<double> c;
  Trig kx = Trig::sine, ky = Trig::sine;
};

/// Sine/cosine transforms on one box size, with spectral derivatives and point evaluation.
class SpectralBox {
 public:
  SpectralBox(int n, double L) : n_(n), L_(L), buf_in_(nullptr, fftw_free), buf_out_(nullptr, fftw_free) {
    if (n < 4) throw ParameterError("spectral box needs n >= 4");
    if (!(L > 0.0)) throw ParameterError("spectral box needs L > 0");
    const size_t sz = static_cast<size_t>(n + 1) * (n + 1);
    buf_in_.reset(static_cast<double*>(fftw_malloc(sizeof(double) * sz)));
    buf_out_.reset(static_cast<double*>(fftw_malloc(sizeof(double) * sz)));
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        const Trig kx = a ? Trig::cosine : Trig::sine, ky = b ? Trig::cosine : Trig::sine;
        plans_[a][b] = fftw_plan_r2r_2d(len(kx), len(ky), buf_in_.get(), buf_out_.get(), kind(kx), kind(ky),
                                        FFTW_ESTIMATE);
        if (!plans_[a][b]) throw Error("FFTW plan creation failed");
      }
  }
  SpectralBox(const SpectralBox&) = delete;
  SpectralBox& operator=(const SpectralBox&) = delete;
  ~SpectralBox() {
    for (auto& row : plans_)
      for (auto& p : row)
        if (p) fftw_destroy_plan(p);
  }

  int n() const { return n_; }
  double L() const { return L_; }
  double h() const { return L_ / n_; }
  BoxGrid grid() const { return BoxGrid{L_, n_}; }
  double wavenumber(int m) const { return m * kPi / L_; }
  size_t size() const { return static_cast<size_t>(n_ + 1) * (n_ + 1); }

  /// Grid values (row-major, x index first) -> coefficients.
  Spectrum analyze(const std::vector<double>& f, Trig kx, Trig ky) const {
    check_size(f);
    copy_in(f, kx, ky);
    fftw_execute(plans_[kx == Trig::cosine][ky == Trig::cosine]);
    Spectrum s{std::vector<double>(size(), 0.0), kx, ky};
    const int o0 = offset(kx), o1 = offset(ky), l0 = len(kx), l1 = len(ky);
    for (int a = 0; a < l0; ++a)
      for (int b = 0; b < l1; ++b)
        s.c[idx(a + o0, b + o1)] = buf_out_.get()[a * l1 + b] * analysis_scale(kx, a + o0) * analysis_scale(ky, b + o1);
    return s;
  }

  /// Coefficients -> grid values.
  std::vector<double> synthesize(const Spectrum& s) const {
    check_size(s.c);
    const int o0 = offset(s.kx), o1 = offset(s.ky), l0 = len(s.kx), l1 = len(s.ky);
    for (int a = 0; a < l0; ++a)
      for (int b = 0; b < l1; ++b)
        buf_in_.get()[a * l1 + b] = s.c[idx(a + o0, b + o1)] * synthesis_scale(s.kx, a + o0) * synthesis_scale(s.ky, b + o1);
    fftw_execute_r2r(plans_[s.kx == Trig::cosine][s.ky == Trig::cosine], buf_in_.get(), buf_out_.get());
    std::vector<double> f(size(), 0.0);
    for (int a = 0; a < l0; ++a)
      for (int b = 0; b < l1; ++b) f[idx(a + o0, b + o1)] = buf_out_.get()[a * l1 + b];
    return f;
  }

  /// d/dx (dir = 0) or d/dy (dir = 1) of a spectrum; sine and cosine swap in that direction.
  Spectrum derivative(const Spectrum& s, int dir) const {
    Spectrum d{std::vector<double>(size(), 0.0), s.kx, s.ky};
    Trig& k = dir == 0 ? d.kx : d.ky;
    const Trig from = k;
    k = other(k);
    // cos(n pi x / L) differentiates to a multiple of sin(n pi x / L), which vanishes at the nodes
    const double sign = from == Trig::sine ? 1.0 : -1.0;
    for (int a = 0; a <= n_; ++a)
      for (int b = 0; b <= n_; ++b) {
        const int m = dir == 0 ? a : b;
        if (m == 0 || m == n_) continue;
        d.c[idx(a, b)] = sign * wavenumber(m) * s.c[idx(a, b)];
      }
    return d;
  }

  /// Unscaled Cartesian Jet<4> of the series at an arbitrary point (x, y), any sign.
  Jet<4> point_jet(const Spectrum& s, double x, double y) const {
    std::array<std::vector<double>, 5> bx, by;
    basis(s.kx, x, bx);
    basis(s.ky, y, by);
    std::array<std::vector<double>, 5> v;
    for (int q = 0; q <= 4; ++q) {
      v[q].assign(n_ + 1, 0.0);
      for (int a = 0; a <= n_; ++a) {
        const double* row = &s.c[idx(a, 0)];
        double acc = 0.0;
        for (int b = 0; b <= n_; ++b) acc += row[b] * by[q][b];
        v[q][a] = acc;
      }
    }
    Jet<4> J;
    for (int p = 0; p <= 4; ++p)
      for (int q = 0; p + q <= 4; ++q) {
        double acc = 0.0;
        for (int a = 0; a <= n_; ++a) acc += bx[p][a] * v[q][a];
        J.coef(p, q) = acc / (factorial(p) * factorial(q));
      }
    return J;
  }

  /// Zeroes the modes above the 2/3 cutoff in either direction.
  void dealias(Spectrum& s) const {
    const int kmax = (2 * n_) / 3;
    for (int a = 0; a <= n_; ++a)
      for (int b = 0; b <= n_; ++b)
        if (a > kmax || b > kmax) s.c[idx(a, b)] = 0.0;
  }

  size_t idx(int a, int b) const { return static_cast<size_t>(a) * (n_ + 1) + b; }

 private:
  int n_;
  double L_;
  std::unique_ptr<double, decltype(&fftw_free)> buf_in_, buf_out_;
  fftw_plan plans_[2][2] = {{nullptr, nullptr}, {nullptr, nullptr}};

  static double factorial(int k) {
    double r = 1.0;
    for (int i = 2; i <= k; ++i) r *= i;
    return r;
  }
  int len(Trig k) const { return k == Trig::sine ? n_ - 1 : n_ + 1; }
  static int offset(Trig k) { return k == Trig::sine ? 1 : 0; }
  static fftw_r2r_kind kind(Trig k) { return k == Trig::sine ? FFTW_RODFT00 : FFTW_REDFT00; }
  double analysis_scale(Trig k, int m) const {
    if (k == Trig::cosine && (m == 0 || m == n_)) return 0.5 / n_;
    return 1.0 / n_;
  }
  double synthesis_scale(Trig k, int m) const {
    if (k == Trig::cosine && (m == 0 || m == n_)) return 1.0;
    return 0.5;
  }
  void check_size(const std::vector<double>& f) const {
    if (f.size() != size()) throw DomainError("array size does not match the spectral box");
  }
  void copy_in(const std::vector<double>& f, Trig kx, Trig ky) const {
    const int o0 = offset(kx), o1 = offset(ky), l0 = len(kx), l1 = len(ky);
    for (int a = 0; a < l0; ++a)
      for (int b = 0; b < l1; ++b) buf_in_.get()[a * l1 + b] = f[idx(a + o0, b + o1)];
  }
  /// p-th derivatives of the basis functions at x, for p = 0..4.
  void basis(Trig k, double x, std::array<std::vector<double>, 5>& out) const {
    for (auto& v : out) v.assign(n_ + 1, 0.0);
    const int m0 = k == Trig::sine ? 1 : 0, m1 = k == Trig::sine ? n_ - 1 : n_;
    for (int m = m0; m <= m1; ++m) {
      const double kap = wavenumber(m), s = std::sin(kap * x), c = std::cos(kap * x);
      // derivatives of sin cycle through (s, c, -s, -c); cos through (c, -s, -c, s)
      const double cyc[4] = {s, c, -s, -c};
      const int start = k == Trig::sine ? 0 : 1;
      double kp = 1.0;
      for (int p = 0; p <= 4; ++p) {
        out[p][m] = kp * cyc[(start + p) % 4];
        kp *= kap;
      }
    }
  }
};

/// Field <-> spectrum for fields on the box of `sb`.
inline Spectrum analyze(const SpectralBox& sb, const Field& f) {
  if (f.is_polar() || f.box().n != sb.n() || f.box().L != sb.L())
    throw DomainError("field '" + f.name + "' is not on the spectral box");
  return sb.analyze(f.values, trig_x(f.parity), trig_y(f.parity));
}
inline Field to_field(const SpectralBox& sb, const Spectrum& s, std::string name) {
  return Field{sb.grid(), sb.synthesize(s), parity_of(s.kx, s.ky), 0.0, std::move(name)};
}

// ---- stream function and velocity ----

/// Stream spectrum: -Lap psi = omega with omega, psi sine in both directions.
inline Spectrum stream_spectrum(const SpectralBox& sb, const Spectrum& w) {
  if (w.kx != Trig::sine || w.ky != Trig::sine) throw DomainError("vorticity must be odd in x and odd across the wall");
  Spectrum p{std::vector<double>(sb.size(), 0.0), Trig::sine, Trig::sine};
  for (int a = 1; a < sb.n(); ++a)
    for (int b = 1; b < sb.n(); ++b) {
      const double k2 = sb.wavenumber(a) * sb.wavenumber(a) + sb.wavenumber(b) * sb.wavenumber(b);
      p.c[sb.idx(a, b)] = w.c[sb.idx(a, b)] / k2;
    }
  return p;
}

struct StreamResult {
  Field psi;
  double residual = 0.0;      // ||Lap psi + omega||_inf / ||omega||_inf away from the box edges
  double boundary_sup = 0.0;  // max |omega| on the outer box edges relative to max |omega|
  std::vector<std::string> warnings;
};

struct StreamOptions {
  int edge_cells = 4;            // cells excluded from the residual near every box edge
  double decay_tol = 1e-10;      // relative |omega| allowed on the outer edges
};

inline StreamResult solve_stream(const SpectralBox& sb, const Field& omega, const StreamOptions& o = {}) {
  if (omega.parity != Parity::sin_sin && omega.parity != Parity::odd_x)
    throw DomainError("vorticity must carry parity odd_x (stored as sin_sin)");
  Field w = omega;
  w.parity = Parity::sin_sin;
  for (double v : w.values)
    if (!std::isfinite(v)) throw DomainError("vorticity has non-finite values");
  const Spectrum ws = analyze(sb, w);
  const Spectrum ps = stream_spectrum(sb, ws);
  StreamResult r{to_field(sb, ps, "psi"), 0.0, 0.0, {}};
  const int n = sb.n();
  double wmax = 0.0, edge = 0.0;
  for (int a = 0; a <= n; ++a)
    for (int b = 0; b <= n; ++b) {
      const double v = std::abs(w.at(a, b));
      wmax = std::max(wmax, v);
      if (a == n || b == n) edge = std::max(edge, v);
    }
  r.boundary_sup = wmax > 0.0 ? edge / wmax : 0.0;
  if (r.boundary_sup > o.decay_tol)
    r.warnings.push_back("truncation: vorticity on the outer box edge reaches " + std::to_string(r.boundary_sup) +
                         " of its maximum");
  // residual from the synthesized stream function, differentiated afresh
  const Spectrum p2 = analyze(sb, r.psi);
  const auto lx = sb.synthesize(sb.derivative(sb.derivative(p2, 0), 0));
  const auto ly = sb.synthesize(sb.derivative(sb.derivative(p2, 1), 1));
  double res = 0.0;
  for (int a = o.edge_cells; a <= n - o.edge_cells; ++a)
    for (int b = o.edge_cells; b <= n - o.edge_cells; ++b) {
      const size_t k = sb.idx(a, b);
      res = std::max(res, std::abs(lx[k] + ly[k] + w.values[k]));
    }
  r.residual = wmax > 0.0 ? res / wmax : res;
  return r;
}

/// u = grad^perp psi = (-d_y psi, d_x psi); u1 is sin_cos, u2 cos_sin, so u1(0, y) = 0 and u2(x, 0) = 0.
inline std::pair<Field, Field> velocity(const SpectralBox& sb, const Field& psi) {
  Spectrum p = analyze(sb, psi);
  Spectrum u1 = sb.derivative(p, 1);
  for (double& v : u1.c) v = -v;
  return {to_field(sb, u1, "u1"), to_field(sb, sb.derivative(p, 0), "u2")};
}

// ---- singular kernels ----

enum class Kernel { K11, K20 };

inline std::string to_string(Kernel k) { return k == Kernel::K11 ? "K11" : "K20"; }

/// K11 = y1 y2 / |y|^4, K20 = (y1^2 - y2^2) / |y|^4.
inline double kernel_value(Kernel k, double y1, double y2) {
  const double r2 = y1 * y1 + y2 * y2;
  if (r2 == 0.0) throw CoordinateSingularity("kernel evaluated at the origin");
  return (k == Kernel::K11 ? y1 * y2 : y1 * y1 - y2 * y2) / (r2 * r2);
}

struct ConvolveOptions {
  double r_max = 12.0;      // outer radius of the integration disc
  double panel = 0.125;     // radial panel width
  int gauss = 8;            // Gauss-Legendre nodes per radial panel
  int angles = 256;         // trapezoid nodes on each circle
};

/// P.V. int K(x - z) F(z) dz over the plane for a scalar function F.
/// In polar coordinates about x the kernel is k(phi) / s^2, and the angular mean of k vanishes.
/// The trapezoid rule keeps that cancellation exact on every circle, so each circle contributes
/// int k(phi) [F(x - s e) - F(x)] dphi = O(s^2) and the radial integrand s^{-1} A(s) is regular.
inline double kernel_convolve(const std::function<double(double, double)>& F, Kernel k, double x, double y,
                              const ConvolveOptions& o = {}) {
  const auto gl = gauss_legendre(o.gauss);
  std::vector<double> kc(o.angles), ce(o.angles), se(o.angles);
  for (int m = 0; m < o.angles; ++m) {
    const double phi = 2.0 * kPi * m / o.angles;
    ce[m] = std::cos(phi);
    se[m] = std::sin(phi);
    kc[m] = kernel_value(k, ce[m], se[m]);
  }
  const double f0 = F(x, y);
  double total = 0.0;
  const int panels = static_cast<int>(std::ceil(o.r_max / o.panel));
  for (int p = 0; p < panels; ++p) {
    const double a = p * o.panel, b = std::min(o.r_max, a + o.panel);
    for (size_t g = 0; g < gl.x.size(); ++g) {
      const double s = a + 0.5 * (gl.x[g] + 1.0) * (b - a), w = 0.5 * gl.w[g] * (b - a);
      double acc = 0.0;
      for (int m = 0; m < o.angles; ++m) acc += kc[m] * (F(x - s * ce[m], y - s * se[m]) - f0);
      total += w * acc * (2.0 * kPi / o.angles) / s;
    }
  }
  return total;
}

struct KernelFit {
  Kernel kernel = Kernel::K11;
  double C = 0.0;             // least-squares constant: spectral derivative ~ C * P.V. convolution
  double rel_residual = 0.0;  // max |d - C p| / max |d|
  std::vector<std::array<double, 4>> samples;  // (x, y, spectral derivative, convolution)
};

/// Fits the constant between second derivatives of psi and the P.V. convolutions:
/// d_xy psi ~ C11 (K11 * F) and (d_xx - d_yy) psi ~ C20 (K20 * F). F is the odd-odd extension.
inline KernelFit fit_kernel_constant(const SpectralBox& sb, const Spectrum& psi,
                                     const std::function<double(double, double)>& F, Kernel k,
                                     const std::vector<std::array<double, 2>>& points,
                                     const ConvolveOptions& o = {}) {
  KernelFit fit;
  fit.kernel = k;
  double num = 0.0, den = 0.0, dmax = 0.0;
  for (auto& p : points) {
    const Jet<4> J = sb.point_jet(psi, p[0], p[1]);
    const double d = k == Kernel::K11 ? J.derivative(1, 1) : J.derivative(2, 0) - J.derivative(0, 2);
    const double c = kernel_convolve(F, k, p[0], p[1], o);
    fit.samples.push_back({p[0], p[1], d, c});
    num += d * c;
    den += c * c;
    dmax = std::max(dmax, std::abs(d));
  }
  fit.C = den > 0.0 ? num / den : 0.0;
  double r = 0.0;
  for (auto& s : fit.samples) r = std::max(r, std::abs(s[2] - fit.C * s[3]));
  fit.rel_residual = dmax > 0.0 ? r / dmax : r;
  return fit;
}

// ---- velocity estimates ----

/// x-derivative of a Gaussian, h(x, y) = -2 (x - a) / s^2 exp(-((x - a)^2 + (y - c)^2) / s^2), made odd
/// in x and odd across the wall y = 0 by images: F = sum over signs sx sy h(sx x, sy y) (times amp).
struct OddBump {
  double a = 0.0, c = 2.0, s = 0.5, amp = 1.0;

  template <class T>
  T eval(const T& x, const T& y) const {
    using std::exp;
    T r(0.0);
    for (int sx : {1, -1})
      for (int sy : {1, -1}) {
        const T dx = sx * x - a, dy = sy * y - c;
        r += (sx * sy * -2.0 / (s * s)) * dx * exp((dx * dx + dy * dy) * (-1.0 / (s * s)));
      }
    return amp * r;
  }
  double operator()(double x, double y) const { return eval(x, y); }
  Jet<4> jet(double x, double y) const { return eval(Jet<4>::variable(x, 0), Jet<4>::variable(y, 1)); }
  OddBump scaled(double tau) const { return {a * tau, c * tau, s * tau, amp}; }
};

/// Seeded family: a in [0, 1.5], c in [1, 3], s in [0.4, 1], |amp| in [0.5, 1].
inline std::vector<OddBump> odd_bump_family(uint64_t seed, int count) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<OddBump> v;
  for (int k = 0; k < count; ++k) {
    OddBump b;
    b.a = 1.5 * U(rng);
    b.c = 1.0 + 2.0 * U(rng);
    b.s = 0.4 + 0.6 * U(rng);
    b.amp = (U(rng) < 0.5 ? -1.0 : 1.0) * (0.5 + 0.5 * U(rng));
    v.push_back(b);
  }
  return v;
}

struct VelocityOptions {
  int n = 192;          // spectral resolution of the stream solve
  double L = 12.0;      // box side
  double domain = 5.0;  // norms are sampled on [-domain, domain] x [0, domain]
  double q = 2.0;       // L^q exponent
  PairSchedule pairs{40, 96, 20, 1024, 1.0, 1e-3, 0.0, 0.0, 1};
};

struct VelocityRatio {
  int k = 0;
  double lhs = 0.0, rhs = 0.0, ratio = 0.0;
};

struct VelocityReport {
  int k = 0;
  double sigma = 0.0, alpha = 0.0, q = 0.0;
  std::vector<VelocityRatio> samples;
  double max_ratio = 0.0;
};

/// ||F||_{L^q} over the half plane from the box nodes (trapezoid, both signs of x).
inline double lq_norm_box(const std::function<double(double, double)>& F, const BoxGrid& g, double q) {
  double s = 0.0;
  for (int a = 0; a <= g.n; ++a)
    for (int b = 0; b <= g.n; ++b) {
      const double w = (a == 0 || a == g.n ? 0.5 : 1.0) * (b == 0 || b == g.n ? 0.5 : 1.0);
      s += w * std::pow(std::abs(F(g.x(a), g.x(b))), q);
    }
  return std::pow(2.0 * s * g.h() * g.h(), 1.0 / q);
}

/// For each sample omega and each k in `ks`:
///   lhs = sum over u components of ||<x>^{k+a} nabla^{k+1} u||_{C^a-dot} + ||<x>^k nabla^{k+1} u||_inf,
///   rhs = ||omega||_{X_sigma^{k,a}} + ||omega||_{L^q} + ||omega||_{C^a-dot},
/// all sampled on one seeded pair set of the upper half plane; u comes from the spectral stream solve.
inline std::vector<VelocityReport> verify_velocity_estimates(const std::vector<OddBump>& samples, double sigma,
                                                             const std::vector<int>& ks, double alpha,
                                                             const VelocityOptions& o = {}) {
  for (int k : ks)
    if (k < 0 || k > 2) throw ParameterError("velocity estimates are checked for k in {0, 1, 2}");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("Hoelder exponent must lie in (0, 1)");
  SpectralBox sb(o.n, o.L);
  const BoxGrid g = sb.grid();
  const PairSet ps = make_pair_set(Domain{-o.domain, o.domain, 0.0, o.domain}, o.pairs);
  const WeightFn w{WeightFn::x_sigma, sigma};
  std::vector<VelocityReport> out;
  for (int k : ks) out.push_back({k, sigma, alpha, o.q, {}, 0.0});
  for (const OddBump& b : samples) {
    Field om = sample_box(g, [&](double x, double y) { return b(x, y); }, Parity::sin_sin, "omega");
    const Spectrum psi = stream_spectrum(sb, analyze(sb, om));
    SampledFn u1{&ps, {}}, u2{&ps, {}};
    for (auto& p : ps.pts) {
      const Jet<4> J = sb.point_jet(psi, p[0], p[1]);
      Jet<4> a1, a2;
      for (int i = 0; i <= 3; ++i)
        for (int j = 0; i + j <= 3; ++j) {
          a1.coef(i, j) = -(j + 1) * J.coef(i, j + 1);
          a2.coef(i, j) = (i + 1) * J.coef(i + 1, j);
        }
      u1.jets.push_back(a1);
      u2.jets.push_back(a2);
    }
    const SampledFn sw = sample_fn([&](double x, double y) { return b.jet(x, y); }, ps);
    const double lq = lq_norm_box(b, g, o.q), ca = holder_weighted(sw, 0, alpha);
    for (auto& rep : out) {
      const int k = rep.k;
      VelocityRatio r{k, 0.0, 0.0, 0.0};
      for (const SampledFn* u : {&u1, &u2})
        r.lhs += holder_weighted(*u, k + 1, alpha, w, k + alpha) + sup_weighted(*u, k + 1, w, k);
      r.rhs = x_norm(sw, k, alpha, w) + lq + ca;
      r.ratio = safe_ratio(r.lhs, r.rhs);
      rep.samples.push_back(r);
      rep.max_ratio = std::max(rep.max_ratio, r.ratio);
    }
  }
  return out;
}

/// Errors of the stream solve and velocity against psi = x y e^{-r^2}, for which
/// omega = -Lap psi = x y (12 - 4 r^2) e^{-r^2}.
struct ManufacturedErrors {
  int n = 0;
  double L = 0.0;
  double psi_err = 0.0, u_err = 0.0, residual = 0.0;
};

inline ManufacturedErrors manufactured_check(int n, double L = 12.0) {
  const SpectralBox sb(n, L);
  const BoxGrid g = sb.grid();
  const Field om = sample_box(
      g, [](double x, double y) { const double r2 = x * x + y * y; return x * y * (12.0 - 4.0 * r2) * std::exp(-r2); },
      Parity::sin_sin, "omega");
  const StreamResult r = solve_stream(sb, om);
  const auto [u1, u2] = velocity(sb, r.psi);
  ManufacturedErrors e{n, L, 0.0, 0.0, r.residual};
  for (int a = 0; a <= n; ++a)
    for (int b = 0; b <= n; ++b) {
      const double x = g.x(a), y = g.x(b), E = std::exp(-x * x - y * y);
      e.psi_err = std::max(e.psi_err, std::abs(r.psi.at(a, b) - x * y * E));
      e.u_err = std::max({e.u_err, std::abs(u1.at(a, b) + x * (1.0 - 2.0 * y * y) * E),
                          std::abs(u2.at(a, b) - y * (1.0 - 2.0 * x * x) * E)});
    }
  return e;
}

}  // namespace blowlab
