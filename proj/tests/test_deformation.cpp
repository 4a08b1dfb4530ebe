#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "maglab/battery.hpp"
#include "maglab/deformation.hpp"

using namespace maglab;
const double kSystole = 2 * std::acosh(1 + std::numbers::sqrt2);

TEST(Beta, ConformalFamilyIsTwicePhi) {
  const TorusSystem sys = standard_conformal_torus();
  const TrigPoly phi = TrigPoly::cosine(0.3, 1, 1) + TrigPoly::constant(0.1);
  const TorusSpace s(sys, 16);
  const auto b = beta(conformal_family(sys, phi), s);
  ASSERT_EQ(b.modes().size(), 1u);
  ASSERT_TRUE(b.has_mode(0));
  EXPECT_NEAR(std::abs(s.value(b.mode(0), 0.4, 1.1) - 2.0 * phi.value(0.4, 1.1)), 0.0, 1e-14);
}

TEST(Beta, ConstantAndFlatTranslationVanish) {
  const TorusSpace s(standard_flat_torus(), 16);
  for (const auto& fam : {constant_family(standard_flat_torus()), translation_pullback_family(standard_flat_torus(), 1, 2)}) {
    const auto b = beta(fam, s);
    EXPECT_NEAR(norm_sq(s, b), 0.0, 1e-30);
  }
  EXPECT_EQ(beta_value(constant_family(BolzaSystem(0.6)), 0.1, 0.2), 0.0);
}

TEST(Lengths, ConstantFamilyIsConstant) {
  const BolzaSystem sys(0.6);
  const auto o = find_periodic_orbit(sys, "g1");
  for (const auto& l : length_function(constant_family(sys), o, {-0.1, 0.0, 0.1})) EXPECT_NEAR(l.period, o.period, 1e-12);
}

TEST(Lengths, KappaRampFollowsHypercycleLaw) {
  const auto fam = kappa_ramp_family(0.6);
  const auto o = find_periodic_orbit(fam.base(), "g1");
  const auto ls = length_function(fam, o, {-0.8, -0.4, 0.0, 0.5, 1.0});
  for (const auto& l : ls) {
    const double k = 0.6 * l.s;
    EXPECT_NEAR(l.period / (kSystole / std::sqrt(1 - k * k)), 1.0, 1e-9) << l.s;
  }
}

TEST(Lengths, ConformalFamilyMatchesDirectSolves) {
  const TorusSystem sys = standard_pullback_torus();
  const auto fam = conformal_family(sys, TrigPoly::cosine(0.2, 0, 1) + TrigPoly::constant(0.05));
  const auto o = find_periodic_orbit(sys, TorusClass{1, 0});
  for (const auto& l : length_function(fam, o, {-0.1, 0.05, 0.1})) {
    EXPECT_NEAR(l.period, find_periodic_orbit(fam.at(l.s), TorusClass{1, 0}).period, 1e-8) << l.s;
  }
}

TEST(Livsic, TranslationPullbackIsIsospectral) {
  const TorusSystem sys = standard_pullback_torus();
  const auto fam = translation_pullback_family(sys, 0.7, 0.3);
  for (const auto& cls : {TorusClass{1, 0}, TorusClass{0, 1}, TorusClass{1, 1}}) {
    const auto o = find_periodic_orbit(sys, cls);
    EXPECT_LE(length_variation(length_function(fam, o, {-0.2, -0.1, 0.1, 0.2}), o.period), 1e-8) << cls.key();
    const auto r = livsic_integral_check(fam, o, true);
    EXPECT_TRUE(r.pass) << cls.key() << ' ' << r.integral;
  }
}

TEST(Livsic, FluxCarryingPullbackPicksUpMagneticTerm) {
  // A field of nonzero mean: lengths are still preserved, but the orbit integral
  // of beta equals the magnetic flux term instead of vanishing.
  const TorusSystem sys(standard_pullback_torus().lambda(), TrigPoly::sine(0.05, 0, 1) + TrigPoly::constant(0.02));
  const auto fam = translation_pullback_family(sys, 0.7, 0.3);
  const auto o = find_periodic_orbit(sys, TorusClass{1, 0});
  EXPECT_LE(length_variation(length_function(fam, o, {-0.2, 0.2}), o.period), 1e-8);
  const auto r = livsic_integral_check(fam, o, true);
  EXPECT_FALSE(r.pass);
  EXPECT_GT(std::abs(r.integral), 0.1);
  EXPECT_NEAR(r.integral, translation_flux_term(sys, o, 0.7, 0.3), 1e-9);
}

TEST(Livsic, ConformalFamilyDetectsNonIsospectrality) {
  const TorusSystem sys = standard_pullback_torus();
  const auto fam = conformal_family(sys, TrigPoly::constant(0.1) + TrigPoly::cosine(0.05, 1, 0));
  const auto o = find_periodic_orbit(sys, TorusClass{1, 0});
  const auto r = livsic_integral_check(fam, o, false);
  EXPECT_TRUE(r.pass);
  EXPECT_GT(std::abs(r.integral), 1e-3);
  EXPECT_GT(length_variation(length_function(fam, o, {-0.05, 0.05}), o.period), 1e-4);
}

TEST(Livsic, ConstantFamilyIsExactlyZero) {
  const TorusSystem sys = standard_pullback_torus();
  const auto o = find_periodic_orbit(sys, TorusClass{1, 0});
  EXPECT_EQ(livsic_integral_check(constant_family(sys), o, true).integral, 0.0);
}

TEST(Variational, ConstantFamilyIsZero) {
  const BolzaSystem sys(0.6);
  const auto o = find_periodic_orbit(sys, "g1");
  const auto v = variational_field(constant_family(sys), o, 1e-3);
  for (std::size_t i = 0; i < v.size(); ++i) {
    EXPECT_EQ(v.x[i], 0.0);
    EXPECT_EQ(v.y[i], 0.0);
  }
  EXPECT_EQ(jacobi_residual(v).jacobi_residual, 0.0);
}

TEST(Variational, ConstantShiftSolvesJacobi) {
  const BolzaSystem sys(0.6);
  const auto o = find_periodic_orbit(sys, "g1");
  const double c = 0.5;
  const auto v = variational_field(kappa_shift_family(sys, c), o, 1e-3);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(v.y[i], -c / 0.64, 1e-5);
  const auto r = jacobi_residual(v, 1e-4);
  EXPECT_TRUE(r.pass) << r.jacobi_residual << ' ' << r.transport_residual;
  const auto reversed = variational_field(kappa_shift_family(sys, -c), o, 1e-3);
  for (std::size_t i = 0; i < v.size(); i += 17) {
    EXPECT_NEAR(reversed.y[i], -v.y[i], 1e-9);
    EXPECT_NEAR(reversed.x[i], -v.x[i], 1e-9);
  }
}

TEST(Variational, SecondOrderInStep) {
  const BolzaSystem sys(0.6);
  const auto o = find_periodic_orbit(sys, "g1");
  const auto fam = kappa_shift_family(sys, 1.0);
  const double r1 = jacobi_residual(variational_field(fam, o, 2e-3)).jacobi_residual;
  const double r2 = jacobi_residual(variational_field(fam, o, 1e-3)).jacobi_residual;
  const double r3 = jacobi_residual(variational_field(fam, o, 5e-4)).jacobi_residual;
  EXPECT_NEAR(std::log2(r1 / r2), 2.0, 0.2);
  EXPECT_NEAR(std::log2(r2 / r3), 2.0, 0.2);
}

TEST(Variational, VariableFieldOnBolza) {
  const BolzaSystem sys = standard_bolza_bump();
  const auto o = find_periodic_orbit(sys, "g1");
  AtomSeries bump;
  bump.modes[0].push_back(BumpAtom{cplx(-0.2, 0.1), 0.8, 6, 0.5});
  BolzaFamily fam;
  fam.name = "bump-perturbation";
  fam.fixed_metric = true;
  fam.at = [sys, bump](double s) {
    AtomSeries k = sys.kappa_bumps();
    for (auto a : bump.modes.at(0)) {
      a.weight *= s;
      k.modes[0].push_back(a);
    }
    return BolzaSystem(sys.kappa_mean(), k);
  };
  const auto r = jacobi_residual(variational_field(fam, o, 1e-3), 1e-4);
  EXPECT_TRUE(r.pass) << r.jacobi_residual << ' ' << r.transport_residual;
}

TEST(FirstOrder, ConstantSolve) {
  const BolzaSpace s(BolzaSystem(0.6), octagon_quadrature(1, 4));
  const double c = 0.7;
  const auto y = BolzaSpace::Function(0, s.constant(c));
  const auto f0 = BolzaSpace::Function(0, s.constant(-0.64 * c));
  EXPECT_LE(first_order_system_residual(s, y, f0, 1e-8).residual, 1e-8);
  EXPECT_EQ(first_order_system_residual(s, BolzaSpace::Function{}, BolzaSpace::Function{}, 1e-8).residual, 0.0);
}

TEST(FirstOrder, HomogeneousOnlyZeroAlongSystole) {
  const BolzaSystem sys(0.6);
  const auto o = find_periodic_orbit(sys, "g1");
  const auto r = homogeneous_nondegeneracy(sys, o);
  EXPECT_TRUE(r.pass);
  EXPECT_GT(r.min_singular_value, 0.9);
}
