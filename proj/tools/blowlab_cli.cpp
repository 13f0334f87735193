// blowlab: build initial data, evaluate norms, run verification suites, evolve the 2D
// Boussinesq system and write reports.
//
// Exit codes: 0 success, 1 check failure, 2 usage or config error, 3 numerical divergence.

#include <nlohmann/json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "CLI11.hpp"
#include "blowlab/biotsavart.hpp"
#include "blowlab/cutoff.hpp"
#include "blowlab/error.hpp"
#include "blowlab/grid.hpp"
#include "blowlab/holder.hpp"
#include "blowlab/norms.hpp"
#include "blowlab/operators.hpp"
#include "blowlab/perturbation.hpp"
#include "blowlab/profiles.hpp"
#include "blowlab/solver.hpp"

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;
using namespace blowlab;

namespace {

constexpr int kExitOk = 0, kExitCheck = 1, kExitUsage = 2, kExitDivergence = 3;

/// Bad command-line or config input discovered after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Files written by one command; removed again if the command fails.
class OutputSet {
 public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {
    if (!fs::exists(dir_)) {
      fs::create_directories(dir_);
      created_ = true;
    }
  }

  void text(const std::string& name, const std::string& content) {
    const fs::path p = dir_ / name;
    files_.push_back(p);
    std::ofstream os(p, std::ios::binary);
    os << content;
    if (!os) throw std::runtime_error("cannot write " + p.string());
  }
  void json(const std::string& name, const ojson& j) { text(name, j.dump(2) + "\n"); }
  void field(const std::string& name, const Field& f) {
    const fs::path p = dir_ / name;
    files_.push_back(p);
    save_field(f, p.string());
  }

  void discard() {
    std::error_code ec;
    for (auto& p : files_) fs::remove(p, ec);
    if (created_ && fs::is_empty(dir_, ec)) fs::remove(dir_, ec);
    files_.clear();
  }

 private:
  fs::path dir_;
  std::vector<fs::path> files_;
  bool created_ = false;
};

int workers_from_env() {
  const char* s = std::getenv("BLOWLAB_WORKERS");
  if (!s || !*s) return 1;
  char* end = nullptr;
  const long v = std::strtol(s, &end, 10);
  if (*end != '\0' || v < 1 || v > 256) throw UsageError(std::string("BLOWLAB_WORKERS must be an integer in [1, 256], got '") + s + "'");
  return static_cast<int>(v);
}

void add_param_options(CLI::App* c, PerturbParams& p) {
  c->add_option("--alpha", p.alpha, "Hoelder exponent alpha in (0, 1)")->capture_default_str();
  c->add_option("--epsilon", p.epsilon, "angular band scale epsilon in (0, 1]")->capture_default_str();
  c->add_option("--M", p.M, "outer cutoff radius M >= 1")->capture_default_str();
  c->add_option("--lambda-exponent", p.lambda_exponent, "lambda_i = 2^(-e i / alpha)")->capture_default_str();
  c->add_option("--c-norm", p.c_norm, "normalization of the 3D profile")->capture_default_str();
  c->add_flag("--zero", p.zero_perturbation, "use identically zero perturbations");
}

struct PolarOpts {
  int n_R = 512, n_beta = 256;
  double log2_R_min = -40.0, log2_R_max = 40.0, u_extent = 30.0;
  PolarGrid grid() const {
    return PolarGrid::make(n_R, n_beta, std::exp2(log2_R_min), std::exp2(log2_R_max), u_extent);
  }
};

void add_polar_options(CLI::App* c, PolarOpts& g) {
  c->add_option("--n-R", g.n_R, "radial nodes")->capture_default_str();
  c->add_option("--n-beta", g.n_beta, "angular nodes")->capture_default_str();
  c->add_option("--log2-R-min", g.log2_R_min, "log2 of the smallest radius")->capture_default_str();
  c->add_option("--log2-R-max", g.log2_R_max, "log2 of the largest radius")->capture_default_str();
  c->add_option("--u-extent", g.u_extent, "angular extent in u = log tan beta")->capture_default_str();
}

ojson grid_json(const PolarGrid& g) {
  return {{"t_min", g.t_min}, {"t_max", g.t_max}, {"n_t", g.n_t}, {"u_min", g.u_min}, {"u_max", g.u_max}, {"n_u", g.n_u}};
}

// ---------------------------------------------------------------------------------------
// build
// ---------------------------------------------------------------------------------------

struct BuildOpts {
  std::string mode;
  PerturbParams p;
  bool strict_delta = false;
  PolarOpts grid;
  std::string out = "build";
};

int cmd_build(const BuildOpts& o, bool has_delta, const std::string& config) {
  const bool two_d = o.mode == "2d";
  if (two_d && !has_delta) throw UsageError("--delta is required with --mode 2d");
  o.p.validate(two_d);
  const PolarGrid g = o.grid.grid();
  OutputSet out(o.out);
  try {
    if (!two_d) {
      const Build3D b = build_F_tilde_3d(o.p, g);
      out.field("F_tilde0.field", b.F0);
      ojson prov;
      prov["mode"] = "3d";
      prov["params"] = o.p.to_json();
      prov["grid"] = grid_json(g);
      prov["report"] = b.report.to_json();
      prov["files"] = {"F_tilde0.field"};
      out.json("provenance.json", prov);
    } else {
      const BoussinesqData d =
          build_boussinesq_data(o.p, g, o.strict_delta ? DeltaPolicy::strict : DeltaPolicy::report);
      out.field("Omega0.field", d.Omega0);
      out.field("eta0.field", d.eta0);
      out.field("xi0.field", d.xi0);
      out.field("theta0.field", d.theta0);
      ojson prov = d.provenance;
      prov["mode"] = "2d";
      prov["files"] = {"Omega0.field", "eta0.field", "xi0.field", "theta0.field"};
      out.json("provenance.json", prov);
      if (!d.delta.ok)
        std::cerr << "warning: delta = " << d.delta.delta << " exceeds the estimated limit " << d.delta.delta_max
                  << " (C1 = " << d.delta.C1 << "); pass --strict-delta to reject\n";
    }
    out.text("config.ini", config);
  } catch (...) {
    out.discard();
    throw;
  }
  std::cout << "wrote " << (two_d ? 4 : 1) << " field file(s) and provenance.json to " << o.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------------------
// norms
// ---------------------------------------------------------------------------------------

struct NormsOpts {
  std::vector<std::string> inputs;
  int m = 3;
  double alpha = -1.0;
  std::string out = "norms";
};

int cmd_norms(const NormsOpts& o, const std::string& config) {
  NormReport rep;
  std::vector<std::string> divergent;
  std::vector<Field> fields;
  for (auto& path : o.inputs) fields.push_back(load_field(path));
  for (size_t i = 0; i < fields.size(); ++i) {
    const Field& f = fields[i];
    const std::string tag = (f.name.empty() ? fs::path(o.inputs[i]).stem().string() : f.name) + ": ";
    for (double v : f.values)
      if (!std::isfinite(v)) throw FormatError("field " + o.inputs[i] + " has non-finite values");
    auto guarded = [&](const std::string& name, auto&& eval) {
      try {
        eval();
      } catch (const DivergentIntegral& e) {
        std::string trend;
        for (double v : e.trend()) trend += (trend.empty() ? "" : " ") + detail::fmt_double(v);
        rep.add(tag + name, INFINITY, INFINITY, "divergent (" + e.name() + "; trend " + trend + ")");
        divergent.push_back(tag + name + " (" + e.name() + ")");
      }
    };
    if (f.is_polar()) {
      const double al = o.alpha > 0.0 ? o.alpha : f.alpha;
      if (!(al > 0.0 && al < 1.0)) throw UsageError("field " + o.inputs[i] + " carries no alpha; pass --alpha");
      const std::string hm = "H" + std::to_string(o.m);
      for (HWeight w : {HWeight::phi, HWeight::psi})
        guarded("||.||_" + hm + "(" + to_string(w) + ")", [&] {
          const HNormResult h = h_norm(f, o.m, w, al);
          rep.add(tag + "||.||_" + hm + "(" + to_string(w) + ")", h.value, h.error, "grid quadrature");
        });
      guarded("||.||_C1", [&] {
        const C1Result c = c1_norm(f, al);
        rep.add(tag + "||.||_C1", c.value, 0.0, c.bounded ? "sup over grid nodes" : "unbounded: " + c.note);
      });
    } else {
      double sup = 0.0;
      for (double v : f.values) sup = std::max(sup, std::abs(v));
      rep.add(tag + "||.||_inf", sup, 0.0, "sup over grid nodes");
      Field sq = f;
      for (double& v : sq.values) v *= v;
      const Integral I = integrate(sq);
      rep.add(tag + "||.||_L2 (quadrant)", std::sqrt(I.value), 0.5 * I.error / std::max(std::sqrt(I.value), 1e-300),
              "trapezoid");
    }
  }
  OutputSet out(o.out);
  try {
    out.json("norms.json", rep.to_json());
    out.text("norms.csv", rep.to_csv());
    out.text("config.ini", config);
  } catch (...) {
    out.discard();
    throw;
  }
  if (!divergent.empty()) {
    for (auto& d : divergent) std::cerr << "divergent norm: " << d << "\n";
    return kExitDivergence;
  }
  std::cout << "wrote norms for " << fields.size() << " field(s) to " << o.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------------------

struct Check {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

ojson check_json(const Check& c) {
  ojson j{{"name", c.name}, {"pass", c.pass}};
  j["value"] = std::isfinite(c.value) ? ojson(c.value) : ojson("inf");
  j["threshold"] = c.threshold;
  if (!c.detail.empty()) j["detail"] = c.detail;
  return j;
}

Check at_most(std::string name, double value, double threshold, std::string detail = {}) {
  return {std::move(name), std::isfinite(value) && value <= threshold, value, threshold, std::move(detail)};
}

std::vector<Check> quick_checks() {
  std::vector<Check> r;
  {
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      const double a = 0.01 + (0.9 - 0.01) * i / 19.0;
      worst = std::max(worst, std::abs(cstar(a) / cstar_closed(a) - 1.0));
    }
    r.push_back(at_most("cstar_closed_form", worst, 1e-10, "20 alpha in [0.01, 0.9]"));
  }
  {
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const double t = std::log(1e-6) + (std::log(1e6) - std::log(1e-6)) * i / 999.0;
      worst = std::max(worst, std::abs(partition_sum(t) - 1.0));
    }
    r.push_back(at_most("partition_of_unity", worst, 1e-12, "1000 R in [1e-6, 1e6]"));
  }
  {
    double worst = 0.0;
    const JContext ctx{};
    for (const TestFunction& f : gaussian_test_family()) {
      const JResidual j = J_identity_residual(f, j_sample_points(4, 3), ctx);
      worst = std::max({worst, j.dR, j.dbeta});
    }
    r.push_back(at_most("j_identities_gaussian", worst, 1e-4, "12 points per family member"));
  }
  {
    const ManufacturedErrors e = manufactured_check(128);
    r.push_back(at_most("biot_savart_stream_128", e.psi_err, 1e-6));
    r.push_back(at_most("biot_savart_velocity_128", e.u_err, 1e-5));
  }
  {
    const BoxGrid g{4.0, 8};
    Field f = sample_box(g, [](double x, double y) { return std::sin(x) * std::cos(3.0 * y) / 3.0; }, Parity::none, "probe");
    const fs::path tmp = fs::temp_directory_path() / ("blowlab_roundtrip_" + std::to_string(::getpid()) + ".field");
    save_field(f, tmp.string());
    const Field back = load_field(tmp.string());
    fs::remove(tmp);
    double diff = back.values.size() == f.values.size() ? 0.0 : INFINITY;
    for (size_t k = 0; k < f.values.size() && std::isfinite(diff); ++k) diff = std::max(diff, std::abs(back.values[k] - f.values[k]));
    r.push_back(at_most("field_roundtrip_bit_exact", diff, 0.0));
  }
  return r;
}

std::vector<Check> zero_checks() {
  std::vector<Check> r;
  PerturbParams p;
  p.zero_perturbation = true;
  {
    const Build3D b = build_F_tilde_3d(p, PolarGrid::make(32, 16));
    double sup = 0.0;
    for (double v : b.F0.values) sup = std::max(sup, std::abs(v));
    r.push_back(at_most("zero_3d_perturbation", sup, 0.0));
  }
  {
    const Smallness2D s = smallness_2d(Boussinesq2D(p));
    r.push_back(at_most("zero_2d_energy", s.E.E, 0.0));
  }
  {
    SolverConfig cfg;
    cfg.horizon = 0.05;
    cfg.dt = 0.01;
    cfg.x_norm_k.clear();
    const BoussinesqSolver S(32, 8.0, cfg);
    const auto res = S.run(S.initial_fn([](double, double) { return 0.0; }, [](double, double) { return 0.0; }));
    double worst = 0.0;
    for (auto& row : res.diag.rows)
      worst = std::max({worst, row.grad_theta_inf, row.omega_inf, std::abs(row.theta_max), std::abs(row.kinetic), row.bkm});
    r.push_back(at_most("zero_solver_diagnostics", worst, 0.0));
    const BkmVerdict v = bkm_verdict(res.diag, cfg.horizon);
    r.push_back({"zero_solver_verdict", v.verdict == "bounded" && v.bkm == 0.0, v.bkm, 0.0, v.verdict});
  }
  return r;
}

std::vector<Check> random_checks(uint64_t seed) {
  std::vector<Check> r;
  {
    FamilyOptions fo;
    fo.starts = 1;
    fo.ascent_steps = 10;
    const FamilyConstants c = family_constants(seed, 10, 1, 2, 0.5, 0.5, 2.0, 1, 0.5, Domain::plane(), fo);
    const double worst = std::max({c.interp_unweighted, c.interp_weighted, c.product});
    r.push_back(at_most("interpolation_product_constants_finite", worst, 1e6, "10 seeded mixtures"));
  }
  {
    VelocityOptions vo;
    vo.n = 96;
    vo.pairs.seed = seed;
    const auto rep = verify_velocity_estimates(odd_bump_family(seed, 3), 2.0, {0}, 0.5, vo);
    double worst = 0.0;
    for (auto& v : rep) worst = std::max(worst, v.max_ratio);
    r.push_back(at_most("velocity_ratio_finite", worst, 1e6, "3 seeded odd bumps, k = 0"));
  }
  {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.3, 1.8);
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i < 8; ++i) pts.emplace_back(U(rng), U(rng));
    double worst = 0.0;
    for (const TestFunction& f : gaussian_test_family()) {
      const JResidual j = J_identity_residual(f, pts, JContext{});
      worst = std::max({worst, j.dR, j.dbeta});
    }
    r.push_back(at_most("j_identities_random_points", worst, 1e-4, "8 seeded points"));
  }
  return r;
}

Check input_check(const std::string& path) {
  // malformed files propagate as FormatError (exit 2)
  const Field f = load_field(path);
  size_t bad = 0;
  for (double v : f.values) bad += !std::isfinite(v);
  return {"input_finite:" + fs::path(path).filename().string(), bad == 0, static_cast<double>(bad), 0.0, {}};
}

struct VerifyOpts {
  std::string suite = "quick";
  uint64_t seed = 1;
  std::vector<std::string> inputs;
  std::string out;
};

int cmd_verify(const VerifyOpts& o, const std::string& config) {
  std::vector<Check> checks;
  for (auto& in : o.inputs) checks.push_back(input_check(in));
  auto append = [&](std::vector<Check> v) { checks.insert(checks.end(), v.begin(), v.end()); };
  if (o.suite == "quick" || o.suite == "full") append(quick_checks());
  if (o.suite == "zero" || o.suite == "full") append(zero_checks());
  if (o.suite == "random" || o.suite == "full") append(random_checks(o.seed));
  bool all = true;
  ojson j;
  j["suite"] = o.suite;
  j["seed"] = o.seed;
  j["checks"] = ojson::array();
  for (auto& c : checks) {
    all = all && c.pass;
    j["checks"].push_back(check_json(c));
  }
  j["passed"] = all;
  std::cout << j.dump(2) << "\n";
  if (!o.out.empty()) {
    OutputSet out(o.out);
    try {
      out.json("verify.json", j);
      out.text("config.ini", config);
    } catch (...) {
      out.discard();
      throw;
    }
  }
  for (auto& c : checks)
    if (!c.pass) std::cerr << "check failed: " << c.name << "\n";
  return all ? kExitOk : kExitCheck;
}

// ---------------------------------------------------------------------------------------
// evolve
// ---------------------------------------------------------------------------------------

struct EvolveOpts {
  std::string init = "gaussian";
  std::string omega_file, theta_file;
  int n = 128;
  double L = 10.0;
  double amplitude = 1.0;
  double width = 0.8, height = 2.5;  // gaussian init
  PerturbParams p;                    // construction init
  bool strict_delta = false;
  BoxPrep prep;
  SolverConfig cfg;
  std::string out = "evolve";
};

std::pair<Field, Field> evolve_initial(const EvolveOpts& o, const SpectralBox& sb, bool has_delta, ojson& info) {
  const BoxGrid g = sb.grid();
  if (o.init == "gaussian") {
    // theta: a warm blob above the wall and its odd image; omega: an odd dipole
    const double w2 = o.width * o.width, h = o.height, A = o.amplitude;
    const OddBump bump{0.8, 2.0, 0.7, 0.5};
    Field th = sample_box(
        g,
        [&](double x, double y) {
          return A * (std::exp(-(x * x + (y - h) * (y - h)) / w2) - std::exp(-(x * x + (y + h) * (y + h)) / w2));
        },
        Parity::cos_sin, "theta");
    Field w = sample_box(g, [&](double x, double y) { return A * bump(x, y); }, Parity::sin_sin, "omega");
    info = {{"init", "gaussian"}, {"amplitude", A}, {"width", o.width}, {"height", h}};
    return {w, th};
  }
  if (o.init == "files") {
    if (o.omega_file.empty() || o.theta_file.empty()) throw UsageError("--init files needs --omega and --theta");
    Field w = load_field(o.omega_file), th = load_field(o.theta_file);
    for (const Field* f : {&w, &th})
      if (f->is_polar() || f->box().n != sb.n() || f->box().L != sb.L())
        throw UsageError("field '" + f->name + "' is not on the " + std::to_string(sb.n()) + " box of side " +
                         detail::fmt_double(sb.L()) + " (set --n and --L to match)");
    for (double& v : w.values) v *= o.amplitude;
    for (double& v : th.values) v *= o.amplitude;
    info = {{"init", "files"}, {"omega", o.omega_file}, {"theta", o.theta_file}, {"amplitude", o.amplitude}};
    return {w, th};
  }
  // construction: Omega_bar + Omega~0 and chi(R/M) theta_hat, windowed into the box
  if (!has_delta) throw UsageError("--delta is required with --init construction");
  o.p.validate(true);
  const Boussinesq2D B(o.p);
  const C1Estimate c1 = o.p.zero_perturbation ? C1Estimate{} : B.estimate_C1();
  const DeltaCheck dc = B.check_delta(c1);
  if (o.strict_delta && !o.p.zero_perturbation && !dc.ok) throw DeltaConstraintError(dc);
  const double al = o.p.alpha, logM = std::log(o.p.M);
  auto omega = [&](double x, double y) {
    const auto [t, u] = tu_from_log(std::log(x), std::log(y), al);
    return o.amplitude * (B.profile().Omega(t, u) + B.Omega_tilde(t, u));
  };
  auto theta = [&](double x, double y) {
    const double lx = std::log(x), ly = std::log(y);
    if (tu_from_log(lx, ly, al).first >= logM + kLn2) return 0.0;
    return o.amplitude * B.localized_theta_hat<0>(lx, ly).value();
  };
  auto fields = prepare_box_data(sb, omega, theta, o.prep);
  info = {{"init", "construction"},
          {"params", o.p.to_json()},
          {"amplitude", o.amplitude},
          {"mollify", o.prep.mollify},
          {"wall_layer", o.prep.wall_layer},
          {"window", o.prep.window},
          {"delta_check", dc.to_json()}};
  return fields;
}

int cmd_evolve(const EvolveOpts& o, bool has_delta, const std::string& config) {
  if (o.n < 8) throw UsageError("--n must be at least 8");
  if (!(o.L > 0.0)) throw UsageError("--L must be positive");
  if (!(o.cfg.horizon > 0.0)) throw UsageError("--horizon must be positive");
  const BoussinesqSolver S(o.n, o.L, o.cfg);
  ojson init_info;
  const auto [w0, th0] = evolve_initial(o, S.box(), has_delta, init_info);
  const BoussinesqState s0 = S.initial(w0, th0);
  OutputSet out(o.out);
  out.text("config.ini", config);
  std::vector<std::string> snaps;
  auto on_snapshot = [&](const BoussinesqState& s, int step) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%06d", step);
    const std::string base = std::string("snap_") + buf;
    out.field(base + "_omega.field", S.omega_field(s));
    out.field(base + "_theta.field", S.theta_field(s));
    snaps.push_back(base);
  };
  const auto res = S.run(s0, on_snapshot);
  out.text("diagnostics.csv", res.diag.to_csv());
  out.field("final_omega.field", S.omega_field(res.last));
  out.field("final_theta.field", S.theta_field(res.last));
  const BkmVerdict v = bkm_verdict(res.diag, o.cfg.horizon, o.cfg.bounded_growth);
  ojson sum;
  sum["initial"] = init_info;
  sum["grid"] = {{"n", o.n}, {"L", o.L}};
  sum["steps"] = res.steps;
  sum["t_final"] = res.last.t;
  sum["completed"] = res.diag.completed;
  sum["termination"] = res.diag.termination;
  sum["bkm"] = v.to_json();
  sum["energy_balance_residual"] = energy_balance_residual(res.diag);
  if (!res.diag.rows.empty()) {
    const DiagRow &a = res.diag.rows.front(), &b = res.diag.rows.back();
    sum["theta_min_drift"] = std::abs(b.theta_min - a.theta_min);
    sum["theta_max_drift"] = std::abs(b.theta_max - a.theta_max);
    sum["theta_L2_drift"] = std::abs(b.theta_l2 - a.theta_l2);
  }
  ojson xs = ojson::array();
  for (auto& x : res.diag.xnorms) xs.push_back({{"t", x.t}, {"k", x.k}, {"value", x.value}});
  sum["x_sigma_norms"] = xs;
  sum["snapshots"] = snaps;
  out.json("summary.json", sum);
  std::cout << "evolved to t = " << res.last.t << " in " << res.steps << " steps; BKM integral " << v.bkm
            << ", verdict " << v.verdict << "\n";
  if (!res.diag.completed) {
    std::cerr << "run terminated: " << res.diag.termination << " (partial diagnostics kept in " << o.out << ")\n";
    return kExitDivergence;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------------------

struct ReportOpts {
  std::string kind = "3d";
  PerturbParams p;
  bool strict_delta = false;
  std::vector<double> alphas{0.05, 0.1, 0.2}, epsilons{0.1, 0.05, 0.025}, Ms{16, 64, 256};
  std::vector<int> ks{1, 2};
  double sigma = 14.0;
  std::string out = "report";
};

int cmd_report(const ReportOpts& o, bool has_delta, const std::string& config) {
  const int workers = workers_from_env();
  std::string divergence;
  OutputSet out(o.out);
  try {
    if (o.kind == "3d") {
      o.p.validate(false);
      const NormReport r = smallness_report_3d(o.p);
      out.json("report.json", {{"params", o.p.to_json()}, {"norms", r.to_json()}});
      out.text("report.csv", r.to_csv());
    } else if (o.kind == "2d") {
      if (!has_delta) throw UsageError("--delta is required with --kind 2d");
      o.p.validate(true);
      const Boussinesq2D B(o.p);
      ojson j{{"params", o.p.to_json()}};
      if (!o.p.zero_perturbation) {
        const DeltaCheck dc = B.check_delta(B.estimate_C1());
        if (o.strict_delta && !dc.ok) throw DeltaConstraintError(dc);
        j["delta_check"] = dc.to_json();
      }
      const Smallness2D s = smallness_2d(B);
      const NormReport r = s.report();
      if (s.divergent()) divergence = s.divergence;
      j["norms"] = r.to_json();
      out.json("report.json", j);
      out.text("report.csv", r.to_csv());
    } else if (o.kind == "sweep3d") {
      const Sweep3D s = sweep_3d(o.alphas, o.epsilons, o.Ms, o.p, workers);
      out.json("sweep.json", s.to_json());
      std::string csv = "alpha,epsilon,M,H3_F1,mu,H3_F0,envelope,ratio\r\n";
      for (auto& pt : s.points)
        csv += detail::fmt_double(pt.params.alpha) + "," + detail::fmt_double(pt.params.epsilon) + "," +
               detail::fmt_double(pt.params.M) + "," + detail::fmt_double(pt.H3_F1) + "," + detail::fmt_double(pt.mu) +
               "," + detail::fmt_double(pt.H3_F0) + "," + detail::fmt_double(pt.envelope) + "," +
               detail::fmt_double(pt.ratio()) + "\r\n";
      out.text("sweep.csv", csv);
    } else {  // xsigma
      o.p.validate(false);
      ojson j = ojson::array();
      std::string csv = "k,epsilon,sup,eps^k sup\r\n";
      for (int k : o.ks) {
        const XSigmaGrowth g = x_sigma_growth_3d(o.p, k, o.epsilons, o.sigma);
        j.push_back(g.to_json());
        for (size_t i = 0; i < g.epsilons.size(); ++i)
          csv += std::to_string(k) + "," + detail::fmt_double(g.epsilons[i]) + "," + detail::fmt_double(g.sups[i]) +
                 "," + detail::fmt_double(g.scaled[i]) + "\r\n";
      }
      out.json("xsigma.json", {{"params", o.p.to_json()}, {"growth", j}});
      out.text("xsigma.csv", csv);
    }
    out.text("config.ini", config);
  } catch (...) {
    out.discard();
    throw;
  }
  if (!divergence.empty()) {
    std::cerr << "divergent energy: " << divergence << "\n";
    return kExitDivergence;
  }
  std::cout << "wrote " << o.kind << " report to " << o.out << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"blowlab: finite-time singularity constructions, norms and Boussinesq evolution"};
  app.set_config("--config", "", "INI config file; sections name the subcommand, flags override it");
  app.require_subcommand(1);

  BuildOpts bo;
  auto* build = app.add_subcommand("build", "sample the initial data of a construction on a polar grid");
  build->add_option("--mode", bo.mode, "3d or 2d")->required()->check(CLI::IsMember({"3d", "2d"}));
  add_param_options(build, bo.p);
  auto* build_delta = build->add_option("--delta", bo.p.delta, "f(y) cutoff scale (2d)");
  build->add_flag("--strict-delta", bo.strict_delta, "reject delta above the estimated constraint");
  add_polar_options(build, bo.grid);
  build->add_option("--out", bo.out, "output directory")->capture_default_str();

  NormsOpts no;
  auto* norms = app.add_subcommand("norms", "weighted norms of field files");
  norms->add_option("--input", no.inputs, "field files")->required();
  norms->add_option("--m", no.m, "order of the H^m norms")->capture_default_str()->check(CLI::Range(0, 3));
  norms->add_option("--alpha", no.alpha, "alpha for fields that do not carry one");
  norms->add_option("--out", no.out, "output directory")->capture_default_str();

  VerifyOpts vo;
  auto* verify = app.add_subcommand("verify", "named property checks; exit 0 iff all pass");
  verify->add_option("--suite", vo.suite, "quick, zero, random or full")
      ->capture_default_str()
      ->check(CLI::IsMember({"quick", "zero", "random", "full"}));
  verify->add_option("--seed", vo.seed, "seed of the randomized checks")->capture_default_str();
  verify->add_option("--input", vo.inputs, "field files to validate");
  verify->add_option("--out", vo.out, "output directory for verify.json");

  EvolveOpts eo;
  auto* evolve = app.add_subcommand("evolve", "evolve the 2D Boussinesq system in the half plane");
  evolve->add_option("--init", eo.init, "gaussian, construction or files")
      ->capture_default_str()
      ->check(CLI::IsMember({"gaussian", "construction", "files"}));
  evolve->add_option("--omega", eo.omega_file, "omega field file (--init files)");
  evolve->add_option("--theta", eo.theta_file, "theta field file (--init files)");
  evolve->add_option("--n", eo.n, "grid intervals per side")->capture_default_str();
  evolve->add_option("--L", eo.L, "box side")->capture_default_str();
  evolve->add_option("--amplitude", eo.amplitude, "scale factor applied to the initial data")->capture_default_str();
  evolve->add_option("--width", eo.width, "gaussian width (--init gaussian)")->capture_default_str();
  evolve->add_option("--height", eo.height, "gaussian height above the wall (--init gaussian)")->capture_default_str();
  add_param_options(evolve, eo.p);
  auto* evolve_delta = evolve->add_option("--delta", eo.p.delta, "f(y) cutoff scale (--init construction)");
  evolve->add_flag("--strict-delta", eo.strict_delta, "reject delta above the estimated constraint");
  evolve->add_option("--mollify", eo.prep.mollify, "Gaussian mollification length")->capture_default_str();
  evolve->add_option("--wall-layer", eo.prep.wall_layer, "taper length at the wall")->capture_default_str();
  evolve->add_option("--window", eo.prep.window, "window radius as a fraction of L")->capture_default_str();
  evolve->add_option("--horizon", eo.cfg.horizon, "final time")->capture_default_str();
  evolve->add_option("--dt", eo.cfg.dt, "time step (0: from the CFL number)")->capture_default_str();
  evolve->add_option("--cfl", eo.cfg.cfl, "CFL number")->capture_default_str();
  evolve->add_option("--dt-max", eo.cfg.dt_max, "largest automatic time step")->capture_default_str();
  evolve->add_option("--q", eo.cfg.q, "exponents of the tracked L^q norms of omega")->capture_default_str();
  evolve->add_option("--snapshot-every", eo.cfg.snapshot_every, "steps between snapshots (0: none)")->capture_default_str();
  evolve->add_option("--x-norm-every", eo.cfg.x_norm_every, "steps between X_sigma samples")->capture_default_str();
  evolve->add_option("--x-norm-k", eo.cfg.x_norm_k, "tracked orders k of the X_sigma norms")->capture_default_str();
  evolve->add_option("--x-sigma", eo.cfg.x_sigma, "sigma of the X_sigma weight")->capture_default_str();
  evolve->add_option("--bounded-growth", eo.cfg.bounded_growth, "X_sigma growth factor still called bounded")
      ->capture_default_str();
  evolve->add_option("--out", eo.out, "output directory")->capture_default_str();

  ReportOpts ro;
  auto* report = app.add_subcommand("report", "smallness reports, sweeps and X_sigma growth tables");
  report->add_option("--kind", ro.kind, "3d, 2d, sweep3d or xsigma")
      ->capture_default_str()
      ->check(CLI::IsMember({"3d", "2d", "sweep3d", "xsigma"}));
  add_param_options(report, ro.p);
  auto* report_delta = report->add_option("--delta", ro.p.delta, "f(y) cutoff scale (2d)");
  report->add_flag("--strict-delta", ro.strict_delta, "reject delta above the estimated constraint");
  report->add_option("--alphas", ro.alphas, "sweep values of alpha")->capture_default_str();
  report->add_option("--epsilons", ro.epsilons, "sweep values of epsilon")->capture_default_str();
  report->add_option("--Ms", ro.Ms, "sweep values of M")->capture_default_str();
  report->add_option("--k", ro.ks, "derivative orders for xsigma")->capture_default_str();
  report->add_option("--sigma", ro.sigma, "sigma of the X_sigma weight")->capture_default_str();
  report->add_option("--out", ro.out, "output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  // resolved config of the chosen subcommand only
  std::string config;
  {
    const std::string prefix = app.get_subcommands().front()->get_name() + ".";
    std::istringstream all(app.config_to_str(true, false));
    // options left unset (written as "") would read back as zero, so they are not persisted
    for (std::string line; std::getline(all, line);)
      if (line.rfind(prefix, 0) == 0 && !line.ends_with("=\"\"")) config += line + "\n";
  }
  try {
    if (*build) return cmd_build(bo, build_delta->count() > 0, config);
    if (*norms) return cmd_norms(no, config);
    if (*verify) return cmd_verify(vo, config);
    if (*evolve) return cmd_evolve(eo, evolve_delta->count() > 0, config);
    if (*report) return cmd_report(ro, report_delta->count() > 0, config);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DivergentIntegral& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const NumericalDivergence& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCheck;
  }
  return kExitUsage;
}
