#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "maglab/bolza_space.hpp"
#include "maglab/frame_operators.hpp"
#include "maglab/periodic_orbits.hpp"
#include "maglab/torus_space.hpp"

using namespace maglab;
constexpr double kPi = std::numbers::pi;
const double kSystole = 2 * std::acosh(1 + std::numbers::sqrt2);

TEST(Flow, FlatStraightLine) {
  const PhasePoint p = integrate_flow(TorusSystem(), PhasePoint{0, 0, 0}, 1.0);
  EXPECT_NEAR(p.x, 1.0, 1e-13);
  EXPECT_NEAR(p.y, 0.0, 1e-13);
  EXPECT_NEAR(p.theta, 0.0, 1e-13);
}

TEST(Flow, FlatUnitKappaCircle) {
  const TorusSystem sys({}, TrigPoly::constant(1.0));
  const PhasePoint p = integrate_flow(sys, PhasePoint{0.3, 0.2, 0.5}, 2 * kPi);
  EXPECT_NEAR(p.x, 0.3, 1e-9);
  EXPECT_NEAR(p.y, 0.2, 1e-9);
  EXPECT_NEAR(angle_difference(p.theta, 0.5), 0.0, 1e-9);
}

TEST(Flow, DiskGeodesicThroughOrigin) {
  const BolzaSystem sys;
  for (double t : {0.5, 2.0, 4.0}) {
    const PhasePoint p = integrate_flow(sys, PhasePoint{0, 0, 0.7}, t);
    EXPECT_NEAR(disk_distance({p.x, p.y}, 0.0), t, 1e-9);
    EXPECT_NEAR(std::arg(cplx(p.x, p.y)), 0.7, 1e-12);
  }
}

TEST(Flow, JacobianMatchesFiniteDifferences) {
  AtomSeries k;
  k.modes[0].push_back({cplx(0.1, 0.2), 1.0, 6, 0.3});
  const BolzaSystem sys(0.4, k);
  const PhasePoint p{0.05, 0.15, 1.1};
  const auto fw = integrate_flow_with_jacobian(sys, p, 1.3);
  const double h = 1e-6;
  for (int c = 0; c < 3; ++c) {
    PhasePoint a = p, b = p;
    (c == 0 ? a.x : c == 1 ? a.y : a.theta) += h;
    (c == 0 ? b.x : c == 1 ? b.y : b.theta) -= h;
    const PhasePoint fa = integrate_flow(sys, a, 1.3), fb = integrate_flow(sys, b, 1.3);
    EXPECT_NEAR(fw.jacobian[0][c], (fa.x - fb.x) / (2 * h), 1e-6);
    EXPECT_NEAR(fw.jacobian[1][c], (fa.y - fb.y) / (2 * h), 1e-6);
    EXPECT_NEAR(fw.jacobian[2][c], (fa.theta - fb.theta) / (2 * h), 1e-6);
  }
}

TEST(Flow, UnitSpeedAlongTrajectory) {
  const TorusSystem sys(TrigPoly::cosine(0.2, 1, 1), TrigPoly::cosine(0.3, 0, 1));
  for (const auto& p : sample_trajectory(sys, PhasePoint{0.1, 0.2, 0.3}, 10.0, 50)) {
    const auto v = flow_velocity(sys, p);
    const double speed = std::exp(sys.lambda().value(p.x, p.y).real()) * std::hypot(v[0], v[1]);
    EXPECT_NEAR(speed, 1.0, 1e-14);
  }
}

TEST(Flow, DerivativeAlongFlowIsF_Torus) {
  const TorusSystem sys(TrigPoly::cosine(0.1, 1, 0) + TrigPoly::sine(0.05, 0, 1), TrigPoly::cosine(0.3, 1, 1));
  const TorusSpace s(sys, 32);
  const auto u = s.lift({{1, TrigPoly::cosine(1.0, 1, 2)}, {0, TrigPoly::sine(0.5, 1, 0)}});
  const auto fu = apply_F(s, u);
  const PhasePoint p{0.4, 1.2, 0.9};
  const double h = 1e-4;
  const PhasePoint a = integrate_flow(sys, p, h), b = integrate_flow(sys, p, -h);
  const cplx fd = (evaluate(s, u, a.x, a.y, a.theta) - evaluate(s, u, b.x, b.y, b.theta)) / (2 * h);
  EXPECT_NEAR(std::abs(fd - evaluate(s, fu, p.x, p.y, p.theta)), 0.0, 1e-7);
}

TEST(Flow, DerivativeAlongFlowIsF_Bolza) {
  AtomSeries k;
  k.modes[0].push_back({cplx(0.2, 0.1), 1.0, 6, 0.2});
  const BolzaSystem sys(0.5, k);
  AtomSeries atoms;
  atoms.modes[1].push_back({cplx(0.3, 0.3), 1.2, 6, cplx(1.0, 0.5)});
  atoms.modes[0].push_back({cplx(0.0, 0.1), 1.0, 6, 0.7});
  const BumpEvaluator ev(sys.group_ptr(), atoms);
  for (const PhasePoint p : {PhasePoint{0.25, 0.2, 0.4}, PhasePoint{0.6, 0.25, 2.0}}) {
    const BolzaSpace s(sys, explicit_points({p.base()}));
    const auto fu = apply_F(s, s.sample(ev, 2));
    const double h = 1e-4;
    const PhasePoint a = integrate_flow(sys, p, h), b = integrate_flow(sys, p, -h);
    const cplx fd = (ev.value(a.base(), a.theta) - ev.value(b.base(), b.theta)) / (2 * h);
    EXPECT_NEAR(std::abs(fd - evaluate(s, fu, 0, p.theta)), 0.0, 1e-7);
  }
}

TEST(Orbits, BolzaSystoleGeodesic) {
  const BolzaSystem sys;
  const auto o = find_periodic_orbit(sys, "g1");
  EXPECT_NEAR(o.period, kSystole, 1e-9);
  EXPECT_LE(o.closure_defect, 1e-9);
}

TEST(Orbits, BolzaHypercycle) {
  const BolzaSystem sys(0.6);
  const auto o = find_periodic_orbit(sys, "g1");
  EXPECT_NEAR(o.period, kSystole / 0.8, 1e-8);
  EXPECT_NEAR(o.period, 3.82143, 1e-5);
  EXPECT_LE(o.closure_defect, 1e-9);
}

TEST(Orbits, FlatTorusLengths) {
  const TorusSystem sys;
  EXPECT_NEAR(find_periodic_orbit(sys, TorusClass{1, 0}).period, 2 * kPi, 1e-10);
  EXPECT_NEAR(find_periodic_orbit(sys, TorusClass{1, 1}).period, 2 * kPi * std::sqrt(2.0), 1e-10);
  EXPECT_NEAR(find_periodic_orbit(sys, TorusClass{-2, 1}).period, 2 * kPi * std::sqrt(5.0), 1e-10);
}

TEST(Orbits, ConformalTorusBesselLength) {
  for (double s : {0.1, 0.3}) {
    const TorusSystem sys(TrigPoly::cosine(s, 1, 0), {});
    EXPECT_NEAR(find_periodic_orbit(sys, TorusClass{1, 0}).period, 2 * kPi * std::cyl_bessel_i(0.0, s), 1e-9);
  }
}

TEST(Orbits, ContractibleClassesRejected) {
  EXPECT_THROW(find_periodic_orbit(TorusSystem(), TorusClass{0, 0}), std::invalid_argument);
  EXPECT_THROW(find_periodic_orbit(BolzaSystem(), "g1g5"), std::invalid_argument);
}

TEST(Orbits, MonodromyOfHypercycle) {
  for (double kappa : {0.0, 0.6}) {
    const BolzaSystem sys(kappa);
    const auto o = find_periodic_orbit(sys, "g1");
    const auto m = monodromy(sys, o);
    EXPECT_NEAR(m.determinant, 1.0, 1e-8);
    const double expect = std::exp(o.period * std::sqrt(1 - kappa * kappa));
    EXPECT_NEAR(m.eigenvalue_large.real() / expect, 1.0, 1e-6);
    EXPECT_NEAR(m.eigenvalue_small.real() * expect, 1.0, 1e-6);
    EXPECT_TRUE(m.hyperbolic());
    EXPECT_NEAR(return_map_trace(sys, o), 1 + m.trace, 1e-6 * m.trace);
  }
}

TEST(Orbits, SpectrumSymmetryAndScaling) {
  std::vector<GroupWord> gens;
  for (int k = 1; k <= 8; ++k) gens.push_back(GroupWord::parse("g" + std::to_string(k)));
  const auto geo = marked_length_spectrum(BolzaSystem(), gens);
  const auto mag = marked_length_spectrum(BolzaSystem(0.6), gens);
  ASSERT_EQ(geo.size(), 8u);
  for (std::size_t i = 0; i < 8; ++i) {
    ASSERT_TRUE(geo[i].ok) << geo[i].error;
    ASSERT_TRUE(mag[i].ok) << mag[i].error;
    EXPECT_NEAR(geo[i].period, kSystole, 1e-9);
    EXPECT_NEAR(mag[i].period, geo[i].period / 0.8, 1e-8);
  }
  EXPECT_TRUE(marked_length_spectrum(BolzaSystem(), std::vector<GroupWord>{}).empty());
}

TEST(Orbits, BirkhoffAverages) {
  const TorusSystem sys(TrigPoly::cosine(0.1, 1, 0), TrigPoly::cosine(0.2, 0, 1));
  const auto ones = birkhoff_average(sys, [](const PhasePoint&) { return 1.0; }, PhasePoint{0.1, 0.2, 0.3}, 20.0, 4);
  for (const auto& [t, avg] : ones) EXPECT_NEAR(avg, 1.0, 1e-12);
  const TorusSpace s(sys, 8);
  const auto w = s.lift({{1, TrigPoly::cosine(0.5, 1, 0)}, {-1, TrigPoly::cosine(0.5, 1, 0)}, {0, TrigPoly::sine(1.0, 0, 1)}});
  const auto fw = apply_F(s, w);
  const double wmax = 2.0;
  auto u = [&](const PhasePoint& p) { return evaluate(s, fw, p.x, p.y, p.theta).real(); };
  for (const auto& [t, avg] : birkhoff_average(sys, u, PhasePoint{0.1, 0.2, 0.3}, 200.0, 5))
    EXPECT_LE(std::abs(avg), 2 * wmax / t);
}
