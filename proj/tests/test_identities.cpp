#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "maglab/battery.hpp"
#include "maglab/identity_lab.hpp"

using namespace maglab;
constexpr double kE = std::numbers::e;

namespace {

const BolzaSpace& reference_bolza() {
  static const BolzaSpace s = BolzaSpace::with_quadrature(BolzaSystem(0.6), 3, 10);
  return s;
}

TorusSpace::Function flat_mode_one() {
  // e^{i theta} cos x
  return TorusSpace::Function(1, TrigField::from_poly(TrigPoly::cosine(1.0, 1, 0), 16));
}

}  // namespace

TEST(Structural, FlatTorusBattery) {
  const TorusSpace s(standard_flat_torus(), 16);
  for (int i = 0; i < 10; ++i) {
    const auto u = random_torus_function(s, member_seed(11, i));
    for (const auto& r : structural_residuals(s, u, 1e-10)) EXPECT_TRUE(r.pass) << r.name << ' ' << r.residual();
  }
}

TEST(Structural, ConformalTorusSpectralAccuracy) {
  const TorusSpace s(standard_conformal_torus(), 48);
  const auto u = random_torus_function(s, member_seed(12, 3));
  for (const auto& r : structural_residuals(s, u, 1e-8)) EXPECT_TRUE(r.pass) << r.name << ' ' << r.residual();
}

TEST(Structural, BolzaPointwise) {
  const BolzaSpace s(standard_bolza_bump(), octagon_quadrature(1, 6));
  const auto u = random_bolza_function(s, member_seed(13, 1));
  for (const auto& r : structural_residuals(s, u, 1e-6)) EXPECT_TRUE(r.pass) << r.name << ' ' << r.residual();
}

TEST(Pestov, FlatTorusExact) {
  const TorusSpace s(standard_flat_torus(), 16);
  for (int i = 0; i < 10; ++i) {
    const auto u = random_torus_function(s, member_seed(21, i));
    const auto p = pestov_residual(s, u, 1e-9);
    const auto c = pestov_corollary_residual(s, u, 1e-9);
    EXPECT_TRUE(p.pass) << p.residual();
    EXPECT_TRUE(c.pass) << c.residual();
    EXPECT_LT(c.details.at("rearrangement_gap"), 1e-10);
  }
}

TEST(Pestov, ZeroAndConstant) {
  const TorusSpace s(standard_flat_torus(), 16);
  const auto zero = pestov_residual(s, TorusSpace::Function{}, 1e-12);
  EXPECT_TRUE(zero.pass);
  EXPECT_EQ(zero.left, 0.0);
  const auto one = pestov_residual(s, TorusSpace::Function(0, s.constant(1.0)), 1e-12);
  EXPECT_TRUE(one.pass);
  EXPECT_NEAR(one.left, 0.0, 1e-20);
}

TEST(Pestov, BolzaReferenceQuadrature) {
  const auto& s = reference_bolza();
  for (int i = 0; i < 4; ++i) {
    const auto u = random_bolza_function(s, member_seed(22, i));
    EXPECT_TRUE(pestov_residual(s, u, 1e-5).pass);
    EXPECT_TRUE(pestov_corollary_residual(s, u, 1e-5).pass);
  }
}

TEST(Pestov, BolzaConvergesUnderRefinement) {
  std::mt19937_64 rng(23);
  const AtomSeries a = random_atom_series(rng, 2, BatteryOptions{});
  double prev = 1.0;
  for (int panels : {1, 2, 4}) {
    const BolzaSpace s = BolzaSpace::with_quadrature(standard_bolza_bump(), panels, 6);
    const double r = pestov_residual(s, s.sample(a), 1.0).residual();
    EXPECT_LT(r, prev);
    prev = r;
  }
  EXPECT_LT(prev, 1e-5);
}

TEST(Riccati, ConstantKappaBranches) {
  const BolzaSystem sys(0.6);
  const auto orbit = find_periodic_orbit(sys, "g1");
  const auto plus = riccati_solve(sys, orbit, RiccatiBranch::Plus);
  const auto minus = riccati_solve(sys, orbit, RiccatiBranch::Minus);
  for (double r : plus.values) EXPECT_NEAR(r, 0.8, 1e-8);
  for (double r : minus.values) EXPECT_NEAR(r, -0.8, 1e-8);
  EXPECT_LT(plus.equation_residual, 1e-4);
}

TEST(Riccati, GeodesicBranchesAreUnit) {
  const BolzaSystem sys;
  const auto orbit = find_periodic_orbit(sys, "g1g2");
  EXPECT_NEAR(riccati_solve(sys, orbit, RiccatiBranch::Plus).values.front(), 1.0, 1e-8);
  EXPECT_NEAR(riccati_solve(sys, orbit, RiccatiBranch::Minus).values.front(), -1.0, 1e-8);
}

TEST(Riccati, VariableKappaBranchesSeparate) {
  const BolzaSystem sys = standard_bolza_bump();
  const auto nb = negativity_bounds(sys, 24);
  ASSERT_TRUE(nb.certified);
  const auto orbit = find_periodic_orbit(sys, "g1");
  const auto plus = riccati_solve(sys, orbit, RiccatiBranch::Plus);
  const auto minus = riccati_solve(sys, orbit, RiccatiBranch::Minus);
  double gap = 1e9;
  for (std::size_t i = 0; i < plus.values.size(); ++i) gap = std::min(gap, plus.values[i] - minus.values[i]);
  EXPECT_GE(gap, 2 * std::sqrt(2 * nb.a) * (1 - 1e-6));
  EXPECT_LT(plus.periodicity_defect, 1e-10);
}

TEST(Riccati, PositiveCurvatureRefused) {
  // kappa = 1/2 on the flat torus: circles of radius 2, magnetic curvature 1/4.
  const TorusSystem sys({}, TrigPoly::constant(0.5));
  PeriodicOrbit orbit;
  orbit.period = 4 * std::numbers::pi;
  orbit.start = PhasePoint{0, 0, 0};
  orbit.samples = sample_trajectory(sys, orbit.start, orbit.period, 16);
  EXPECT_THROW(riccati_solve(sys, orbit, RiccatiBranch::Plus), PreconditionError);
}

TEST(Riccati, NormIdentity) {
  const auto& s = reference_bolza();
  const auto r_field = BolzaSpace::Function(0, s.constant(0.8));
  EXPECT_TRUE(riccati_norm_identity(s, BolzaSpace::Function{}, r_field, 1e-12).pass);
  for (int i = 0; i < 4; ++i) {
    const auto u = random_bolza_function(s, member_seed(31, i));
    const auto rep = riccati_norm_identity(s, u, r_field, 1e-5);
    EXPECT_TRUE(rep.pass) << rep.residual();
    EXPECT_EQ(rep.details.at("left_nonnegative"), 1.0);
  }
  const auto wrong = BolzaSpace::Function(0, s.constant(0.5));
  EXPECT_THROW(riccati_norm_identity(s, BolzaSpace::Function{}, wrong, 1e-5), PreconditionError);
}

TEST(ModeIdentity, FlatSpectralOracle) {
  const TorusSpace s(TorusSystem(), 16);
  const auto reps = mode_identity_residual(s, flat_mode_one(), 1e-10);
  for (const auto& r : reps) EXPECT_TRUE(r.pass) << r.name << ' ' << r.residual();
  EXPECT_THROW(mode_identity_residual(s, TorusSpace::Function(0, s.constant(1.0)), 1e-10), PreconditionError);
}

TEST(ModeIdentity, BolzaModeTwo) {
  const auto& s = reference_bolza();
  AtomSeries a;
  a.modes[2].push_back(BumpAtom{cplx(0.1, 0.2), 0.7, 6, cplx(1.0, 0.5)});
  for (const auto& r : mode_identity_residual(s, s.sample(a), 1e-5)) EXPECT_TRUE(r.pass) << r.name;
}

TEST(Ladder, PinchedBolzaInequalities) {
  const auto& s = reference_bolza();
  const auto nb = negativity_bounds(BolzaSystem(0.6), 16);
  std::mt19937_64 rng(41);
  const auto u = s.sample(random_atom_series(rng, 3, BatteryOptions{}));
  for (int k : {1, 2, -1, -2})
    for (const auto& r : gk_inequalities(s, u, k, nb.a, nb.b, 1e-5)) {
      EXPECT_TRUE(r.pass) << r.name << " k=" << k << " margin " << r.details.at("margin");
      if (r.name == "gk2_upper") {
        EXPECT_GE(r.details.at("triangle_step2_slack"), -1e-6 * r.right);
      }
    }
}

TEST(Ladder, EmptyModeDegenerates) {
  const TorusSpace s(TorusSystem(), 16);
  for (const auto& r : gk_inequalities(s, TorusSpace::Function{}, 1, 0.1, 0.2, 1e-12)) {
    EXPECT_TRUE(r.pass);
    EXPECT_EQ(r.left, 0.0);
    EXPECT_EQ(r.right, 0.0);
  }
}

TEST(Carleman, WeightSpotValues) {
  const auto w = make_weights(1.0);
  EXPECT_DOUBLE_EQ(w.at(0), 1.0);
  EXPECT_NEAR(w.at(1), 8 * kE, 1e-12);
  EXPECT_NEAR(w.at(2), 945.7991806631231, 1e-9);
  EXPECT_NEAR(w.at(3), 61702.76942803251, 1e-7);
  EXPECT_NEAR(16 * w.at(1), 347.9400740427578, 1e-10);
  EXPECT_LT(16 * w.at(1), w.at(2));
  // bracket k gamma_k^2 / 2 - 4 k^2 gamma_{k-1}^2 at k = 2
  EXPECT_NEAR(2 * w.at(2) / 2 - 16 * w.at(1), 597.8591066203653, 1e-9);
  EXPECT_EQ(w.at(-2), w.at(2));
}

TEST(Carleman, RecurrencesStrictWithoutOverflow) {
  for (double sigma : {0.1, 1.0, 3.0}) {
    const auto c = make_weights(sigma, 64).certify();
    EXPECT_TRUE(c.all()) << sigma;
    EXPECT_GT(c.min_two_step_gap, 0);
    EXPECT_GT(c.min_linear_gap, 0);
  }
  EXPECT_GT(make_weights(3.0).log_at(64), 500.0);
}

TEST(Carleman, SigmaMustBePositive) {
  EXPECT_THROW(make_weights(0.0), PreconditionError);
  EXPECT_THROW(make_weights(-1.0), PreconditionError);
}

TEST(Carleman, TrivialCases) {
  const TorusSpace s(TorusSystem(), 16);
  const auto w = make_weights(1.0);
  const auto c = carleman_estimate(s, TorusSpace::Function(0, s.constant(1.0)), w, 1, 0.3);
  EXPECT_TRUE(c.pass);
  EXPECT_EQ(c.left, 0.0);
  EXPECT_THROW(carleman_estimate(s, TorusSpace::Function{}, w, 0, 0.3), PreconditionError);
}

TEST(Carleman, BolzaBatteryAndEngineAgree) {
  const auto& s = reference_bolza();
  const auto nb = negativity_bounds(BolzaSystem(0.6), 16);
  const auto w = make_weights(1.0);
  for (int i = 0; i < 4; ++i) {
    const auto u = random_bolza_function(s, member_seed(51, i));
    const auto d = harvest_mode_data(s, u);
    for (int n : {1, 2}) {
      const auto direct = carleman_from_modes(d, w, n, nb.a);
      const auto engine = weighted_summation_engine(d, w, n, nb.a);
      EXPECT_TRUE(direct.pass) << direct.details.at("ratio");
      EXPECT_LE(direct.details.at("ratio"), 1.0);
      EXPECT_EQ(engine.back().pass, direct.pass);
      EXPECT_TRUE(engine[0].pass);
      EXPECT_TRUE(engine[1].pass);
      EXPECT_TRUE(engine[2].pass);
    }
  }
}

TEST(Carleman, EngineZeroDataAndHypothesisFailure) {
  const auto w = make_weights(1.0);
  for (const auto& r : weighted_summation_engine(ModeData{}, w, 1, 0.3)) EXPECT_TRUE(r.pass) << r.name;
  ModeData bad;
  bad.u[1] = 1.0;
  bad.eta_minus[1] = 5.0;  // far above the ladder bound with Fu = 0
  const auto reps = weighted_summation_engine(bad, w, 1, 0.3);
  EXPECT_FALSE(reps[0].pass);
  EXPECT_TRUE(reps[1].pass);
  EXPECT_EQ(reps[3].details.at("hypothesis_failure"), 1.0);
}

TEST(Carleman, DegreeReduction) {
  const auto& s = reference_bolza();
  const auto nb = negativity_bounds(BolzaSystem(0.6), 16);
  const auto w = make_weights(1.0);
  AtomSeries a;
  a.modes[1].push_back(BumpAtom{cplx(0.1, -0.2), 0.6, 6, 1.0});
  a.modes[-1].push_back(BumpAtom{cplx(-0.3, 0.1), 0.6, 6, 0.5});
  const auto r = degree_reduction_check(s, s.sample(a), w, nb.a);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.details.at("degree_Fu"), 2);
  const auto c = degree_reduction_check(s, s.sample(AtomSeries{}, 2, 1.0), w, nb.a);
  EXPECT_EQ(c.details.at("tail"), 0.0);
}

TEST(Carleman, ContractionChain) {
  const auto& s = reference_bolza();
  const auto nb = negativity_bounds(BolzaSystem(0.6), 16);
  const double sigma = contraction_sigma(nb.a, nb.b);
  for (int i = 0; i < 3; ++i) {
    const auto y = random_bolza_function(s, member_seed(61, i), BatteryOptions{.max_degree = 3});
    const auto r = contraction_chain(s, y, nb.a, nb.b, sigma, 1);
    EXPECT_TRUE(r.pass) << r.left;
    EXPECT_LE(r.details.at("log_L0"), r.details.at("log_L1") + 1e-9);
    EXPECT_NEAR(r.details.at("log_L1"), r.details.at("log_L1_check"), 1e-9);
  }
}
