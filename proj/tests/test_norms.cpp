#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "blowlab/norms.hpp"
#include "blowlab/profiles.hpp"

using namespace blowlab;

namespace {

auto no_breaks = [](double, std::vector<double>& b) { b.assign({0.0}); };

// int_0^{pi/2} sin(2b)^p db
double sin2_moment(double p) { return 0.5 * std::sqrt(M_PI) * std::tgamma(0.5 * (p + 1)) / std::tgamma(0.5 * p + 1); }

// f = R^2/(1+R)^4 sin(2b) in the measure dR dbeta:
// ||f phi1^{1/2}||^2 = int (1+R)^{-4} dR * int sin(2b)^{2-sigma} db = moment / 3
double h0_oracle() { return std::sqrt(sin2_moment(2.0 - weights::kSigma) / 3.0); }

Jet<4> bump(double x, double y, double cx, double cy, double a) {
  const Jet<4> X = Jet<4>::variable(x, 0) - cx, Y = Jet<4>::variable(y, 1) - cy;
  const Jet<4> q = (X * X + Y * Y) * (1.0 / (a * a));
  if (q.value() >= 1.0) return Jet<4>(0.0);
  return exp(-1.0 / (1.0 - q) + 1.0);
}

}  // namespace

TEST(Norms, XWeightFormulaAndInvariants) {
  for (double s : {1.0, 2.0, 28.0}) {
    EXPECT_NEAR(xweight(1.0, s), 0.5, 1e-15);
    double prev = 0.0;
    for (double r = 1e-3; r < 1e3; r *= 1.3) {
      const double w = xweight(r, s);
      EXPECT_LE(w, r * (1 + 1e-14));
      EXPECT_GT(w, prev);
      prev = w;
    }
    if (s > 1.0) {
      EXPECT_NEAR(xweight(1e8, s) / 1e8, 1.0, 1e-7);
    }
  }
  EXPECT_NEAR(xweight(1e8, 1.0) / 1e8, 0.5, 1e-14);
  EXPECT_NEAR(xweight(1e-4, 3.0) / std::pow(1e-4, 3.0), 1.0, 1e-7);
  EXPECT_THROW(xweight(1.0, 0.5), ParameterError);
}

TEST(Norms, OWeightFormula) {
  EXPECT_NEAR(oweight(0.5, 2.0), 1.0 / 6.0, 1e-15);
  for (double d0 : {1e-3, 0.1, 0.4, 2.0}) EXPECT_LE(oweight(d0, 3.0), d0);
  EXPECT_EQ(oweight(0.0, 2.0), 0.0);
}

TEST(Norms, HNormZeroAndOracle) {
  // about 10^6 nodes
  const PolarGrid g = PolarGrid::make(2048, 512, std::exp(-30.0), std::exp(30.0));
  const Field zero = sample_polar(g, [](double, double) { return 0.0; }, 0.1);
  EXPECT_EQ(h_norm(zero, 3, HWeight::phi).value, 0.0);

  auto fn = [](double t, double u) {
    return std::exp(2.0 * t - 4.0 * softplus(t)) * sin2_beta(u);
  };
  // analytic route with jets
  auto src = [](double t, double u) {
    const Jet<1> T = Jet<1>::variable(t, 0), U = Jet<1>::variable(u, 1);
    return exp(2.0 * T - 4.0 * softplus(T)) * sin2_beta(U);
  };
  auto ub = no_breaks;
  const HNormResult a = h_norm_fn(src, 0, HWeight::phi, 0.1, {-2.0, 0.0, 2.0}, ub);
  EXPECT_NEAR(a.value, h0_oracle(), 1e-10);
  const Field f = sample_polar(g, fn, 0.1);
  EXPECT_NEAR(h_norm(f, 0, HWeight::phi).value, h0_oracle(), 1e-7);
}

TEST(Norms, HNormHomogeneityAndTriangle) {
  const PolarGrid g = PolarGrid::make(256, 128, std::exp(-30.0), std::exp(30.0));
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int n = 0; n < 5; ++n) {
    const double c1 = U(rng), c2 = U(rng), s1 = 1.0 + U(rng) * 0.5;
    auto f1 = [&](double t, double u) { return c1 * std::exp(2.0 * t - 4.0 * softplus(t)) * sin2_beta(u); };
    auto f2 = [&](double t, double u) {
      return c2 * std::exp(3.0 * t - 6.0 * softplus(t - s1)) * sin2_beta(u) * sin2_beta(u - 0.3);
    };
    const Field a = sample_polar(g, f1, 0.1), b = sample_polar(g, f2, 0.1);
    Field sum = a, twice = a;
    for (size_t k = 0; k < a.values.size(); ++k) {
      sum.values[k] += b.values[k];
      twice.values[k] *= -2.0;
    }
    for (HWeight w : {HWeight::phi, HWeight::psi}) {
      const double na = h_norm(a, 3, w).value, nb = h_norm(b, 3, w).value;
      EXPECT_NEAR(h_norm(twice, 3, w).value, 2.0 * na, 1e-12 * na);
      EXPECT_LE(h_norm(sum, 3, w).value, na + nb + 1e-10 * (na + nb));
    }
  }
}

TEST(Norms, HTermsCount) {
  EXPECT_EQ(h_terms(3).size(), 10u);
  EXPECT_EQ(h_terms(0).size(), 1u);
  EXPECT_THROW(h_terms(4), ParameterError);
}

TEST(Norms, HNormDivergenceDetected) {
  // f = sin(2b) near R = 0 against (1+R)^4/R^4: int R^{-4} R dR diverges
  const PolarGrid g = PolarGrid::make(256, 128, std::exp(-30.0), std::exp(6.0));
  const Field f = sample_polar(g, [](double t, double u) { return std::exp(-std::exp(t)) * sin2_beta(u); }, 0.1);
  EXPECT_THROW(h_norm(f, 0, HWeight::phi), DivergentIntegral);
}

TEST(Norms, C1Examples) {
  const PolarGrid g = PolarGrid::make(1024, 128, std::exp(-30.0), std::exp(30.0));
  const Field one = sample_polar(g, [](double, double) { return 1.0; }, 0.1);
  const C1Result r1 = c1_norm(one);
  EXPECT_NEAR(r1.value, 1.0, 1e-14);
  EXPECT_TRUE(r1.bounded);

  const Field f = sample_polar(g, [](double t, double) { return sigmoid(t); }, 0.1);
  const C1Result r2 = c1_norm(f);
  EXPECT_NEAR(r2.value, 2.0, 1e-4);
  EXPECT_TRUE(r2.bounded);

  // sin(2b) R/(1+R)^2: refinement-stable
  auto h = [](double t, double u) { return sin2_beta(u) * std::exp(t - 2.0 * softplus(t)); };
  const double c_coarse = c1_norm(sample_polar(PolarGrid::make(512, 256, std::exp(-30.0), std::exp(30.0)), h, 0.1)).value;
  const double c_fine = c1_norm(sample_polar(PolarGrid::make(1024, 512, std::exp(-30.0), std::exp(30.0)), h, 0.1)).value;
  EXPECT_TRUE(std::isfinite(c_fine));
  EXPECT_NEAR(c_coarse, c_fine, 1e-2 * c_fine);

  // log R grows without bound in (1+R)/R D_R: flagged
  const Field lg = sample_polar(g, [](double t, double) { return softplus(-t); }, 0.1);
  EXPECT_FALSE(c1_norm(lg).bounded);
}

TEST(Norms, HolderSeminormExamples) {
  const Domain D{-1.0, 1.0, -1.0, 1.0};
  const CartFn c = [](double, double) { return Jet<4>(3.0); };
  EXPECT_EQ(holder_seminorm(c, 0.5, D).value, 0.0);

  const double a = 0.5;
  const CartFn p = [a](double x, double y) {
    const Jet<4> X = Jet<4>::variable(x, 0), Y = Jet<4>::variable(y, 1);
    return pow(X * X + Y * Y, a / 2);
  };
  PairSchedule small;
  small.base_points = 16;
  small.dyadic_levels = 8;
  small.lattice = 16;
  small.r_min = 1e-2;
  PairSchedule big;
  big.r_min = 1e-8;
  const double e_small = holder_seminorm(p, a, D, HolderStrategy::sampled_pairs, small).value;
  const double e_big = holder_seminorm(p, a, D, HolderStrategy::sampled_pairs, big).value;
  EXPECT_LE(e_small, e_big + 1e-12);
  EXPECT_LE(e_big, 1.0 + 1e-12);
  EXPECT_GT(e_big, 0.99);

  // linear function, exponent 1: gradient sup
  const CartFn lin = [](double x, double y) { return 3.0 * Jet<4>::variable(x, 0) - 4.0 * Jet<4>::variable(y, 1); };
  const HolderEstimate e = holder_seminorm(lin, 1.0, D);
  EXPECT_NEAR(e.value, 5.0, 1e-12);
  EXPECT_NEAR(e.upper, 5.0, 1e-12);
  EXPECT_GT(e.pair_budget, 1000);

  // sampled lower bound below the derivative upper bound
  const CartFn g = [](double x, double y) {
    return sin(Jet<4>::variable(x, 0)) * exp(-1.0 * Jet<4>::variable(y, 1) * Jet<4>::variable(y, 1));
  };
  const HolderEstimate h = holder_seminorm(g, 0.3, Domain::plane(3.0));
  EXPECT_LE(h.value, h.upper);
}

TEST(Norms, XSigmaNorm) {
  const Domain D{-1.0, 1.0, -1.0, 1.0};
  const CartFn one = [](double, double) { return Jet<4>(1.0); };
  const PairSet ps = make_pair_set(D, {});
  const SampledFn s = sample_fn(one, ps);
  const WeightFn w{WeightFn::x_sigma, 2.0};
  const double n0 = x_sigma_norm(one, 2.0, 0, 0.5, D);
  EXPECT_NEAR(n0, 1.0 + holder_weighted(s, 0, 0.5, w, 0.5), 1e-14);
  EXPECT_GT(n0, 1.0);
  // sum structure: X^{k} <= X^{k+1}
  const CartFn g = gaussian_mixture(3);
  for (int k = 0; k < 3; ++k)
    EXPECT_LE(x_sigma_norm(g, 2.0, k, 0.3, Domain::plane()), x_sigma_norm(g, 2.0, k + 1, 0.3, Domain::plane()));
  EXPECT_THROW(x_sigma_norm(g, 2.0, 5, 0.3, Domain::plane()), ParameterError);
}

TEST(Norms, XOSigmaNorm) {
  const CartFn zero = [](double, double) { return Jet<4>(0.0); };
  EXPECT_EQ(x_O_sigma_norm(zero, 2.0, 3, 0.3), 0.0);
  const CartFn b = [](double x, double y) { return bump(x, y, 1.0, 0.25, 0.2); };
  PairSchedule coarse;
  coarse.lattice = 96;
  PairSchedule fine;
  fine.lattice = 192;
  fine.base_points = 512;
  for (int k = 0; k <= 3; ++k) {
    const double nc = x_O_sigma_norm(b, 2.0, k, 0.3, 1e-12, coarse);
    const double nf = x_O_sigma_norm(b, 2.0, k, 0.3, 1e-12, fine);
    EXPECT_TRUE(std::isfinite(nf));
    EXPECT_NEAR(nc, nf, 0.1 * nf) << "k = " << k;
  }
  const CartFn out = [](double x, double y) { return bump(x, y, 1.0, 0.45, 0.2); };
  EXPECT_THROW(x_O_sigma_norm(out, 2.0, 1, 0.3), DomainError);
}

TEST(Norms, InterpolationVerifier) {
  const PairSet ps = make_pair_set(Domain::plane(), {});
  const SampledFn c = sample_fn([](double, double) { return Jet<4>(2.0); }, ps);
  EXPECT_EQ(verify_interpolation(c, 1, 2, 0.3, 0.5, 2.0).unweighted, 0.0);
  EXPECT_THROW(verify_interpolation(c, 2, 1, 0.5, 0.3, 2.0), ParameterError);
  EXPECT_THROW(verify_interpolation(c, 1, 1, 0.5, 0.5, 2.0), ParameterError);

  // sin(x1) e^{-|x|^2} under dilations
  double lo = INFINITY, hi = 0.0;
  for (int n = 0; n < 20; ++n) {
    const double s = std::pow(2.0, -1.0 + 2.0 * n / 19.0);
    const CartFn f = [s](double x, double y) {
      const Jet<4> X = Jet<4>::variable(x, 0) * s, Y = Jet<4>::variable(y, 1) * s;
      return sin(X) * exp(-1.0 * (X * X + Y * Y));
    };
    const InterpRatio r = verify_interpolation(sample_fn(f, ps), 1, 2, 0.3, 0.5, 2.0);
    EXPECT_TRUE(std::isfinite(r.unweighted) && std::isfinite(r.weighted));
    lo = std::min(lo, r.unweighted);
    hi = std::max(hi, r.unweighted);
  }
  EXPECT_LT(hi / lo, 3.0);
}

TEST(Norms, ProductRuleVerifier) {
  const PairSet ps = make_pair_set(Domain::plane(), {});
  const SampledFn one = sample_fn([](double, double) { return Jet<4>(1.0); }, ps);
  const SampledFn f = sample_fn(gaussian_mixture(11), ps);
  for (int k = 0; k <= 2; ++k) EXPECT_LE(verify_product_rule(f, one, 2.0, k, 0.3), 1.0);
  // translated bumps: ratios of similar size
  double r[3];
  for (int n = 0; n < 3; ++n) {
    const double cx = 0.3 * n;
    const SampledFn b = sample_fn([cx](double x, double y) { return bump(x, y, cx, 0.0, 1.5); }, ps);
    r[n] = verify_product_rule(b, b, 2.0, 1, 0.3);
    EXPECT_TRUE(std::isfinite(r[n]));
  }
  EXPECT_LT(std::max({r[0], r[1], r[2]}) / std::min({r[0], r[1], r[2]}), 2.0);
  const SampledFn odd = sample_fn(gaussian_mixture(5, true), ps);
  const SampledFn even = sample_fn(gaussian_mixture(6), ps);
  EXPECT_TRUE(std::isfinite(verify_product_rule(odd, even, 2.0, 2, 0.3)));
}

TEST(Norms, RandomFamilyConstantsFinite) {
  // small family; seed stability over the full family is an acceptance check
  const FamilyConstants a = family_constants(1, 20, 1, 2, 0.3, 0.5, 2.0, 1, 0.3, Domain::plane(), {1, 10, 0.3});
  EXPECT_EQ(a.functions, 20);
  EXPECT_EQ(a.ascent_evaluations, 40);
  for (double x : {a.interp_unweighted, a.interp_weighted, a.product}) EXPECT_TRUE(std::isfinite(x) && x > 0.0);
}

TEST(Norms, EnergyZeroAndIdentity) {
  auto zero = [](double, double, Jet<3>* P) { P[0] = P[1] = P[2] = Jet<3>(0.0); };
  auto ub = no_breaks;
  const EnergyReport z = energy_E_fn(zero, 0.1, {0.0}, ub);
  EXPECT_EQ(z.E, 0.0);
  EXPECT_EQ(z.parts.size(), 7u);

  // a decaying triple with known finite parts
  auto src = [](double t, double u, Jet<3>* P) {
    const Jet<3> T = Jet<3>::variable(t, 0), U = Jet<3>::variable(u, 1);
    const Jet<3> rad = exp(3.0 * T - 5.0 * softplus(T));
    P[0] = rad * sin2_beta(U);
    P[1] = 0.5 * rad * sin2_beta(U) * sin2_beta(U);
    P[2] = rad * sin2_beta(U);
  };
  const EnergyReport e = energy_E_fn(src, 0.1, {-2.0, 0.0, 2.0}, ub);
  EXPECT_TRUE(std::isfinite(e.E));
  EXPECT_GT(e.E, 0.0);
  EXPECT_LT(e.identity_residual(), 1e-14);
  const NormReport rep = e.report();
  EXPECT_EQ(rep.entries.size(), 8u);
  EXPECT_NEAR(rep.find("E")->value, e.E, 0.0);
}

TEST(Norms, EnergyNamesDivergentComponent) {
  const double alpha = 0.1;
  const Profile2D p(alpha);
  const PolarGrid g = PolarGrid::make(256, 128, std::exp(-30.0), std::exp(6.0));
  const Field om = sample_polar(g, [&](double t, double u) { return p.Omega(t, u); }, alpha);
  const Field et = sample_polar(g, [&](double t, double u) { return p.eta(t, u); }, alpha);
  const Field xi = sample_polar(g, [&](double t, double u) { return p.xi(t, u); }, alpha);
  try {
    energy_E(om, et, xi, alpha);
    FAIL() << "profile energy should diverge";
  } catch (const DivergentIntegral& e) {
    EXPECT_NE(std::string(e.what()).find("diverges"), std::string::npos) << e.what();
  }
}

TEST(Norms, EmbeddingVacuousAndFinite) {
  const PolarGrid g = PolarGrid::make(256, 128, std::exp(-30.0), std::exp(30.0));
  const Field zero = sample_polar(g, [](double, double) { return 0.0; }, 0.1);
  EXPECT_TRUE(verify_embedding(zero).vacuous);
  const Field f = sample_polar(g, [](double t, double u) { return std::exp(3.0 * t - 5.0 * softplus(t)) * sin2_beta(u); }, 0.1);
  const EmbeddingRatios r = verify_embedding(f);
  EXPECT_FALSE(r.vacuous);
  EXPECT_TRUE(std::isfinite(r.a) && r.a > 0.0);
  EXPECT_TRUE(std::isfinite(r.b) && r.b > 0.0);
}

TEST(Norms, ReportSerialization) {
  NormReport r;
  r.add("H3(phi)", 1.5, 1e-9, "grid");
  r.add("a,b", 2.0, 0.0, "say \"hi\"");
  const auto j = r.to_json();
  EXPECT_EQ(j["H3(phi)"]["value"], 1.5);
  EXPECT_EQ(j["a,b"]["strategy"], "say \"hi\"");
  const std::string csv = r.to_csv();
  EXPECT_EQ(csv.substr(0, 36), "name,value,error_estimate,strategy\r\n");
  EXPECT_NE(csv.find("\"a,b\",2,0,\"say \"\"hi\"\"\"\r\n"), std::string::npos) << csv;
}
