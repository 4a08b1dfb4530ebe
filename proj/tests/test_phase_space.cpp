#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "maglab/bolza_space.hpp"
#include "maglab/fiber_fourier.hpp"
#include "maglab/frame_operators.hpp"
#include "maglab/torus_space.hpp"

using namespace maglab;
constexpr double kPi = std::numbers::pi;

namespace {

template <class Space>
double max_abs_torus(const Space& s, const FunctionOf<Space>& u) {
  double m = 0;
  for (double x : {0.0, 0.7, 2.1, 4.4})
    for (double y : {0.3, 1.9, 5.0})
      for (double th : {0.0, 1.1, 2.9, 4.8}) m = std::max(m, std::abs(evaluate(s, u, x, y, th)));
  return m;
}

template <class Space>
double max_abs_nodes(const Space& s, const FunctionOf<Space>& u) {
  double m = 0;
  for (std::size_t i = 0; i < s.points()->size(); ++i)
    for (double th : {0.0, 1.1, 2.9, 4.8}) m = std::max(m, std::abs(evaluate(s, u, i, th)));
  return m;
}

TorusSystem lumpy_torus() {
  return TorusSystem(TrigPoly::cosine(0.1, 1, 0) + TrigPoly::sine(0.05, 1, 1),
                     TrigPoly::constant(0.3) + TrigPoly::cosine(0.2, 0, 1) + TrigPoly::sine(0.1, 2, 1));
}

std::map<int, TrigPoly> sample_torus_function() {
  return {{0, TrigPoly::cosine(1.0, 1, 1)},
          {1, TrigPoly::sine(0.5, 0, 2) + TrigPoly::constant(0.2)},
          {-2, TrigPoly::cosine(0.3, 2, -1)}};
}

AtomSeries sample_atoms() {
  AtomSeries s;
  s.modes[0].push_back({cplx(0.1, -0.2), 0.9, 6, 0.8});
  s.modes[1].push_back({cplx(-0.3, 0.25), 1.1, 6, cplx(0.4, -0.6)});
  s.modes[-2].push_back({cplx(0.45, 0.1), 0.8, 6, cplx(0.0, 1.0)});
  return s;
}

BolzaSystem bump_kappa_system() {
  AtomSeries k;
  k.modes[0].push_back({cplx(0.2, 0.3), 1.0, 6, 0.15});
  return BolzaSystem(0.5, k);
}

}  // namespace

TEST(FlatTorus, XOnCosExample) {
  const TorusSpace s(TorusSystem(), 16);
  const auto u = s.lift({{1, TrigPoly::cosine(1.0, 1, 0)}});
  const auto xu = apply_X(s, u);
  for (double x : {0.2, 1.7})
    for (double th : {0.4, 2.2}) {
      const cplx expect = std::cos(th) * -std::sin(x) * std::exp(cplx(0, th));
      EXPECT_NEAR(std::abs(evaluate(s, xu, x, 0.5, th) - expect), 0.0, 1e-14);
    }
}

TEST(FlatTorus, XperpOnCosExample) {
  const TorusSpace s(TorusSystem(), 16);
  const auto u = s.lift({{0, TrigPoly::cosine(1.0, 1, 0)}});
  const auto w = apply_Xperp(s, u);
  for (double x : {0.2, 1.7})
    for (double th : {0.4, 2.2})
      EXPECT_NEAR(std::abs(evaluate(s, w, x, 0.5, th) - std::sin(x) * std::sin(th)), 0.0, 1e-14);
}

TEST(FlatTorus, FOnExponentialWithUnitKappa) {
  const TorusSpace s(TorusSystem({}, TrigPoly::constant(1.0)), 16);
  const auto u = s.lift({{1, TrigPoly::constant(1.0)}});
  const auto fu = apply_F(s, u);
  EXPECT_NEAR(std::abs(evaluate(s, fu, 1.0, 2.0, 0.3) - cplx(0, 1) * std::exp(cplx(0, 0.3))), 0.0, 1e-15);
}

TEST(FlatTorus, TrivialCases) {
  const TorusSpace s(TorusSystem({}, TrigPoly::cosine(0.5, 1, 2)), 16);
  const auto one = s.lift({{0, TrigPoly::constant(1.0)}});
  for (auto w : {FrameField::X, FrameField::Xperp, FrameField::V, FrameField::F, FrameField::EtaPlus,
                 FrameField::EtaMinus})
    EXPECT_EQ(max_abs_torus(s, apply(s, w, one)), 0.0) << to_string(w);
  EXPECT_NEAR(norm_sq(s, one), std::pow(2 * kPi, 3), 1e-9);
  const auto v = s.lift({{1, TrigPoly::constant(1.0)}, {-1, TrigPoly::constant(1.0)}});
  const auto vv = apply_V(s, v);
  EXPECT_EQ(vv.mode(1).at(0, 0), cplx(0, 1));
  EXPECT_EQ(vv.mode(-1).at(0, 0), cplx(0, -1));
}

TEST(FlatTorus, ZeroKappaGivesGeodesicGenerator) {
  const TorusSpace s(TorusSystem(), 16);
  const auto u = s.lift(sample_torus_function());
  EXPECT_EQ(max_abs_torus(s, apply_F(s, u) - apply_X(s, u)), 0.0);
}

TEST(Torus, EtaShiftsModesAndSplitsX) {
  const TorusSpace s(lumpy_torus(), 24);
  const auto u = s.lift({{2, TrigPoly::cosine(1.0, 1, 0)}});
  const auto ep = eta_plus(s, u), em = eta_minus(s, u);
  ASSERT_EQ(ep.modes().size(), 1u);
  EXPECT_TRUE(ep.has_mode(3));
  ASSERT_EQ(em.modes().size(), 1u);
  EXPECT_TRUE(em.has_mode(1));
  const auto x = apply_X(s, u);
  EXPECT_LT(max_abs_torus(s, x - (ep + em)), 1e-15);
  EXPECT_LT(max_abs_torus(s, apply_Xperp(s, u) - (ep - em) * cplx(0, 1)), 1e-15);
}

TEST(Torus, XperpKappaMatchesMagneticCurvature) {
  const TorusSystem sys = lumpy_torus();
  const TorusSpace s(sys, 32);
  const auto kk = magnetic_curvature_function(s);
  for (double x : {0.3, 2.0})
    for (double y : {1.0, 4.1})
      for (double th : {0.2, 2.5, 5.5})
        EXPECT_NEAR(evaluate(s, kk, x, y, th).real(), magnetic_curvature(sys, PhasePoint{x, y, th}), 1e-10);
}

TEST(Torus, MagneticCurvatureAveragesToKappaSquared) {
  const TorusSystem sys = lumpy_torus();
  const TorusSpace s(sys, 32);
  const auto kk = magnetic_curvature_function(s);
  const auto k2 = multiply(s, kappa_function(s), kappa_function(s));
  EXPECT_NEAR(std::abs(liouville_integral(s, kk) - liouville_integral(s, k2)), 0.0, 1e-10);
  EXPECT_GT(liouville_integral(s, kk).real(), 0.0);
}

TEST(Torus, SkewAdjointAndZeroAverage) {
  const TorusSpace s(lumpy_torus(), 32);
  const auto u = s.lift(sample_torus_function());
  const auto v = s.lift({{1, TrigPoly::cosine(0.7, 2, 1)}, {0, TrigPoly::sine(1.0, 0, 1)}, {-1, TrigPoly::constant(0.4)}});
  for (auto w : {FrameField::V, FrameField::Xperp, FrameField::F, FrameField::X}) {
    const cplx sum = inner_product(s, apply(s, w, u), v) + inner_product(s, u, apply(s, w, v));
    EXPECT_LT(std::abs(sum), 1e-11) << to_string(w);
    EXPECT_LT(std::abs(liouville_integral(s, apply(s, w, u))), 1e-11) << to_string(w);
  }
}

TEST(Torus, ModeOrthogonalityAndParseval) {
  const TorusSpace s(lumpy_torus(), 32);
  const auto u = s.lift(sample_torus_function());
  const auto sp = mode_spectrum(s, u);
  EXPECT_NEAR(sp.total_norm_sq, sp.sum_of_squares(), 1e-10 * sp.total_norm_sq);
  EXPECT_EQ(sp.degree, 2);
  const auto p1 = project(s, u, 1), p0 = project(s, u, 0);
  EXPECT_EQ(inner_product(s, p1, p0), cplx{});
  EXPECT_TRUE(project(s, u, 3).empty());
}

TEST(Torus, DegreeRules) {
  const TorusSpace s(lumpy_torus(), 32);
  const auto one = s.lift({{0, TrigPoly::constant(1.0)}});
  EXPECT_EQ(degree(s, one), 0);
  const auto c = s.lift({{1, TrigPoly::cosine(0.5, 1, 0)}, {-1, TrigPoly::cosine(0.5, 1, 0)}});
  EXPECT_EQ(degree(s, c), 1);
  const auto u = s.lift(sample_torus_function());
  EXPECT_LE(degree(s, eta_plus(s, u)), degree(s, u) + 1);
  EXPECT_LE(degree(s, apply_F(s, u)), degree(s, u) + 1);
}

TEST(Torus, ProjectionOfFMatchesLadderExpansion) {
  const TorusSpace s(lumpy_torus(), 32);
  const auto u = s.lift(sample_torus_function());
  const auto fu = apply_F(s, u);
  for (int k = -3; k <= 3; ++k) {
    auto expect = eta_plus(s, project(s, u, k - 1)) + eta_minus(s, project(s, u, k + 1));
    expect += multiply_base(s, s.kappa(), apply_V(s, project(s, u, k)));
    EXPECT_LT(max_abs_torus(s, project(s, fu, k) - project(s, expect, k)), 1e-8) << k;
  }
}

TEST(Bolza, PointwiseStructuralEquations) {
  const BolzaSpace s(bump_kappa_system(), octagon_quadrature(2, 3));
  const auto u = s.sample(sample_atoms(), 2);
  const auto kk = magnetic_curvature_function(s);
  auto F = [&](const auto& w) { return apply_F(s, w); };
  auto Xp = [&](const auto& w) { return apply_Xperp(s, w); };
  auto V = [&](const auto& w) { return apply_V(s, w); };
  const double scale = max_abs_nodes(s, u) + max_abs_nodes(s, F(u)) + max_abs_nodes(s, Xp(u));
  EXPECT_LT(max_abs_nodes(s, V(F(u)) - F(V(u)) - Xp(u)), 1e-12 * scale);
  EXPECT_LT(max_abs_nodes(s, V(Xp(u)) - Xp(V(u)) + F(u) - multiply_base(s, s.kappa(), V(u))), 1e-12 * scale);
  const auto r3 = F(Xp(u)) - Xp(F(u)) + multiply_base(s, s.kappa(), F(u)) - multiply(s, kk, V(u));
  EXPECT_LT(max_abs_nodes(s, r3), 1e-11 * scale);
}

TEST(Bolza, KappaCurvatureCrossCheck) {
  const BolzaSystem sys = bump_kappa_system();
  const BolzaSpace s(sys, explicit_points({cplx(0.2, 0.25), cplx(-0.4, 0.1), cplx(0.62, 0.2)}));
  const auto kk = magnetic_curvature_function(s);
  for (std::size_t i = 0; i < 3; ++i) {
    const cplx z = s.points()->points[i];
    for (double th : {0.3, 2.0, 4.0})
      EXPECT_NEAR(evaluate(s, kk, i, th).real(), magnetic_curvature(sys, PhasePoint{z.real(), z.imag(), th}), 1e-12);
  }
}

TEST(Bolza, SkewAdjointnessByQuadrature) {
  const BolzaSpace s = BolzaSpace::with_quadrature(bump_kappa_system(), 8);
  EXPECT_NEAR(s.area(), 4 * kPi, 1e-12);
  const auto u = s.sample(sample_atoms(), 2);
  AtomSeries other;
  other.modes[1].push_back({cplx(-0.2, 0.3), 1.2, 6, 1.0});
  other.modes[0].push_back({cplx(0.3, 0.0), 1.0, 6, cplx(0.5, 0.5)});
  const auto v = s.sample(other, 2);
  for (auto w : {FrameField::V, FrameField::Xperp, FrameField::F}) {
    const cplx sum = inner_product(s, apply(s, w, u), v) + inner_product(s, u, apply(s, w, v));
    EXPECT_LT(std::abs(sum), 1e-6) << to_string(w);
  }
  for (auto w : {FrameField::X, FrameField::Xperp, FrameField::V, FrameField::F})
    EXPECT_LT(std::abs(liouville_integral(s, apply(s, w, u))), 1e-6) << to_string(w);
}

TEST(Bolza, ConstantFunctionIsAnnihilated) {
  const BolzaSpace s(BolzaSystem(0.6), explicit_points({cplx(0.1, 0.1), cplx(-0.5, 0.3)}));
  const auto one = s.sample(AtomSeries{}, 2, 1.0);
  EXPECT_EQ(max_abs_nodes(s, apply_F(s, one)), 0.0);
  const auto kk = magnetic_curvature_function(s);
  EXPECT_NEAR(evaluate(s, kk, 1, 0.7).real(), -0.64, 1e-14);
}
