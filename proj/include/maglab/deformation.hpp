#pragma once

// One-parameter families (g_s, kappa_s): the metric variation beta, lengths of
// continued closed orbits, orbit integrals of beta, variational fields of
// kappa-only families and the inhomogeneous Jacobi system they satisfy.
//
// All metrics here are conformal, g_s = e^{2 lambda_s}|dz|^2, so on the unit
// bundle of g_0 the variation is beta = 2 d/ds lambda_s, a fiber mode-0 function.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "maglab/identity_lab.hpp"
#include "maglab/periodic_orbits.hpp"
#include "maglab/torus_space.hpp"

namespace maglab {

template <class System>
struct DeformationFamily {
  std::string name;
  std::function<System(double)> at;
  double epsilon = 0.1;
  double h_s = 1e-3;
  bool fixed_metric = false;
  std::optional<TrigPoly> lambda_rate;  // exact d/ds lambda_s at 0, when known (torus)

  System base() const { return at(0.0); }
};

using TorusFamily = DeformationFamily<TorusSystem>;
using BolzaFamily = DeformationFamily<BolzaSystem>;

// Family builders.

inline TorusFamily constant_family(const TorusSystem& sys) {
  return {"constant", [sys](double) { return sys; }, 1.0, 1e-3, true, TrigPoly{}};
}
inline BolzaFamily constant_family(const BolzaSystem& sys) {
  return {"constant", [sys](double) { return sys; }, 1.0, 1e-3, true, std::nullopt};
}

/// g_s = f_s^* g_0 and kappa_s = kappa_0 o f_s for the translation f_s(z) = z + s (ax, ay).
inline TorusFamily translation_pullback_family(const TorusSystem& sys, double ax, double ay) {
  TorusFamily f;
  f.name = "translation-pullback";
  f.at = [sys, ax, ay](double s) {
    return TorusSystem(sys.lambda().translated(s * ax, s * ay), sys.kappa().translated(s * ax, s * ay));
  };
  f.epsilon = 0.5;
  f.fixed_metric = sys.is_flat();
  f.lambda_rate = sys.lambda().derivative_x() * ax + sys.lambda().derivative_y() * ay;
  return f;
}

/// g_s = e^{2 s phi} g_0 with kappa fixed.
inline TorusFamily conformal_family(const TorusSystem& sys, const TrigPoly& phi) {
  TorusFamily f;
  f.name = "conformal";
  f.at = [sys, phi](double s) { return sys.with_lambda(sys.lambda() + phi * s); };
  f.epsilon = 0.2;
  f.lambda_rate = phi;
  return f;
}

/// Fixed metric, kappa_s = kappa_0 + s c on the Bolza surface.
inline BolzaFamily kappa_shift_family(const BolzaSystem& sys, double c) {
  BolzaFamily f;
  f.name = "kappa-shift";
  f.at = [sys, c](double s) { return sys.with_kappa_mean(sys.kappa_mean() + s * c); };
  f.epsilon = 0.2;
  f.fixed_metric = true;
  return f;
}

/// Fixed metric, kappa_s = s c on the Bolza surface (kappa_0 = 0).
inline BolzaFamily kappa_ramp_family(double c) { return kappa_shift_family(BolzaSystem(0.0), c); }

/// Fixed metric, kappa_s = kappa_0 + s p for a trig polynomial p on the torus.
inline TorusFamily kappa_perturbation_family(const TorusSystem& sys, const TrigPoly& p) {
  TorusFamily f;
  f.name = "kappa-perturbation";
  f.at = [sys, p](double s) { return sys.with_kappa(sys.kappa() + p * s); };
  f.epsilon = 0.2;
  f.fixed_metric = true;
  f.lambda_rate = TrigPoly{};
  return f;
}

// ---------------------------------------------------------------------------
// beta

namespace detail {

inline double lambda_value(const TorusSystem& s, double x, double y) { return s.lambda().value(x, y).real(); }
inline double lambda_value(const BolzaSystem&, double x, double y) {
  return BolzaSystem::lambda_jet(cplx(x, y), 0).value();
}

inline double kappa_at(const TorusSystem& s, double x, double y) { return s.kappa_value(x, y); }
inline double kappa_at(const BolzaSystem& s, double x, double y) { return s.kappa_value(x, y); }

}  // namespace detail

/// beta = 2 d/ds lambda_s at a base point (exact when the family carries the rate).
template <class System>
double beta_value(const DeformationFamily<System>& fam, double x, double y) {
  if constexpr (std::is_same_v<System, TorusSystem>) {
    if (fam.lambda_rate) return 2 * fam.lambda_rate->value(x, y).real();
  }
  if (fam.fixed_metric) return 0.0;
  const double h = fam.h_s;
  return (detail::lambda_value(fam.at(h), x, y) - detail::lambda_value(fam.at(-h), x, y)) / h;
}

class RepresentationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// beta as a phase function on the torus discretization of the base system.
/// Mode support {-2, 0, 2} is asserted (conformal variations live in mode 0).
inline TorusSpace::Function beta(const TorusFamily& fam, const TorusSpace& s) {
  TrigField f = s.zero();
  if (fam.lambda_rate) {
    f = s.lift(*fam.lambda_rate * 2.0);
  } else if (!fam.fixed_metric) {
    const double h = fam.h_s;
    f = (s.lift(fam.at(h).lambda()) - s.lift(fam.at(-h).lambda())) * cplx(1.0 / h);
  }
  TorusSpace::Function b(0, f);
  for (const auto& [k, g] : b.modes())
    if (k != 0 && k != 2 && k != -2 && s.pair(g, g).real() > 1e-16)
      throw RepresentationError("metric variation leaks outside fiber modes {-2, 0, 2}");
  return b;
}

// ---------------------------------------------------------------------------
// Lengths along the family

struct LengthSample {
  double s = 0.0;
  double period = 0.0;
  double closure_defect = 0.0;
};

namespace detail {

inline ShootingState state_of(const PeriodicOrbit& o) {
  ShootingState st;
  st.starts = o.segment_starts;
  st.period = o.period;
  return st;
}

template <class System>
PeriodicOrbit warm_continue(const System& sys, const PeriodicOrbit& from, const ShootingOptions& opt) {
  const ShootingState st = newton_shoot(sys, from.deck, state_of(from), opt);
  return finish_orbit(sys, from.deck, st, from.class_key, 0, opt);
}

}  // namespace detail

/// Continues `base` (a closed orbit of fam.at(0)) across s_grid with warm
/// starts, marching outward from s = 0 in both directions.
template <class System>
std::vector<LengthSample> length_function(const DeformationFamily<System>& fam, const PeriodicOrbit& base,
                                          std::vector<double> s_grid, const ShootingOptions& opt = {}) {
  std::sort(s_grid.begin(), s_grid.end());
  std::vector<LengthSample> out(s_grid.size());
  auto march = [&](auto first, auto last, auto index_of) {
    PeriodicOrbit cur = base;
    double s_cur = 0.0;
    for (auto it = first; it != last; ++it) {
      const double s = *it;
      // Sub-steps keep each warm start inside the Newton basin.
      const int sub = std::max(1, static_cast<int>(std::ceil(std::abs(s - s_cur) / 0.05)));
      for (int j = 1; j <= sub; ++j) {
        const double sj = s_cur + (s - s_cur) * j / sub;
        try {
          cur = detail::warm_continue(fam.at(sj), cur, opt);
        } catch (const OrbitError& e) {
          std::ostringstream os;
          os << "continuation of " << base.class_key << " lost at s = " << sj << ": " << e.what();
          throw OrbitError(os.str());
        }
      }
      s_cur = s;
      out[index_of(it)] = {s, cur.period, cur.closure_defect};
    }
  };
  const auto zero = std::lower_bound(s_grid.begin(), s_grid.end(), 0.0);
  march(zero, s_grid.end(), [&](auto it) { return static_cast<std::size_t>(it - s_grid.begin()); });
  march(std::make_reverse_iterator(zero), s_grid.rend(),
        [&](auto it) { return static_cast<std::size_t>(s_grid.rend() - it - 1); });
  return out;
}

/// max_s |l(s) - l(0)| / l(0).
inline double length_variation(const std::vector<LengthSample>& ls, double l0) {
  double v = 0.0;
  for (const auto& x : ls) v = std::max(v, std::abs(x.period - l0) / l0);
  return v;
}

struct LivsicReport {
  double integral = 0.0;
  double length = 0.0;
  double tolerance = 0.0;
  bool asserted = false;  // vanishing asserted only for isospectral families
  bool pass = true;
};

/// int_gamma beta dt along a closed orbit of the base system.
template <class System>
LivsicReport livsic_integral_check(const DeformationFamily<System>& fam, const PeriodicOrbit& orbit,
                                   bool isospectral, double rel_tol = 1e-8, const FlowOptions& fo = {}) {
  const System base = fam.base();
  const auto [end, integral] = integrate_along(
      base, orbit.start, orbit.period, [&](const PhasePoint& p) { return beta_value(fam, p.x, p.y); }, fo);
  (void)end;
  LivsicReport r;
  r.integral = integral;
  r.length = orbit.period;
  r.tolerance = rel_tol * orbit.period;
  r.asserted = isospectral;
  r.pass = !isospectral || std::abs(integral) <= r.tolerance;
  return r;
}

/// -2 int_gamma kappa g(Z, i gamma') dt for the constant field Z = (ax, ay).
/// For translation pullbacks, int_gamma beta equals this magnetic flux term.
inline double translation_flux_term(const TorusSystem& sys, const PeriodicOrbit& orbit, double ax, double ay,
                                    const FlowOptions& fo = {}) {
  const auto [end, q] = integrate_along(
      sys, orbit.start, orbit.period,
      [&](const PhasePoint& p) {
        const double el = std::exp(sys.lambda().value(p.x, p.y).real());
        return sys.kappa_value(p.x, p.y) * el * (-ax * std::sin(p.theta) + ay * std::cos(p.theta));
      },
      fo);
  (void)end;
  return -2 * q;
}

// ---------------------------------------------------------------------------
// Variational fields of fixed-metric families

struct VariationalField {
  std::vector<double> t;
  std::vector<double> x, y;        // S = x gamma' + y i gamma'
  std::vector<double> f0;          // d/ds kappa_s at 0 along the base orbit
  std::vector<double> kappa;       // kappa_0 along the base orbit
  std::vector<double> curvature;   // magnetic curvature along the base orbit
  double dt = 0.0;
  int pad = 0;                     // samples before t = 0 and after t = T
  double period = 0.0;
  double h_s = 0.0;
  double period_rate = 0.0;        // d T / ds

  std::size_t size() const { return t.size(); }
  bool interior(std::size_t i) const { return i >= static_cast<std::size_t>(pad) && i + pad < t.size(); }
};

inline constexpr int kVariationPad = 3;

namespace detail {

// Sixth-order central differences.
inline double d1(const std::vector<double>& v, std::size_t i, double h) {
  return (-v[i - 3] + 9 * v[i - 2] - 45 * v[i - 1] + 45 * v[i + 1] - 9 * v[i + 2] + v[i + 3]) / (60 * h);
}
inline double d2(const std::vector<double>& v, std::size_t i, double h) {
  return (2 * v[i - 3] - 27 * v[i - 2] + 270 * v[i - 1] - 490 * v[i] + 270 * v[i + 1] - 27 * v[i + 2] +
          2 * v[i + 3]) /
         (180 * h * h);
}

template <class System>
std::vector<PhasePoint> trajectory_on_grid(const System& sys, const PhasePoint& start, double dt, int before,
                                           int after, const FlowOptions& fo) {
  std::vector<PhasePoint> out(before + after + 1);
  out[before] = start;
  for (int j = 1; j <= before; ++j) out[before - j] = integrate_flow(sys, out[before - j + 1], -dt, fo);
  for (int j = 1; j <= after; ++j) out[before + j] = integrate_flow(sys, out[before + j - 1], dt, fo);
  return out;
}

}  // namespace detail

/// S(t) = (gamma_h(t) - gamma_{-h}(t)) / (2h) for the orbits continued to
/// s = +-h, aligned by the shooting phase condition (the continued start lies
/// on the section through the base start orthogonal to the flow).
template <class System>
VariationalField variational_field(const DeformationFamily<System>& fam, const PeriodicOrbit& orbit, double h,
                                   int points_per_unit = 64, const ShootingOptions& opt = {}) {
  if (!fam.fixed_metric) throw PreconditionError("variational fields need a fixed-metric family");
  if (!(h > 0)) throw std::invalid_argument("h_s must be positive");
  const System s0 = fam.at(0.0), sp = fam.at(h), sm = fam.at(-h);
  const PeriodicOrbit op = detail::warm_continue(sp, orbit, opt);
  const PeriodicOrbit om = detail::warm_continue(sm, orbit, opt);
  const int n = std::max(16, static_cast<int>(std::ceil(points_per_unit * orbit.period)));
  VariationalField v;
  v.period = orbit.period;
  v.h_s = h;
  v.dt = orbit.period / n;
  v.pad = kVariationPad;
  v.period_rate = (op.period - om.period) / (2 * h);
  const int before = kVariationPad, after = n + kVariationPad;
  const auto g0 = detail::trajectory_on_grid(s0, orbit.start, v.dt, before, after, opt.flow);
  const auto gp = detail::trajectory_on_grid(sp, op.start, v.dt, before, after, opt.flow);
  const auto gm = detail::trajectory_on_grid(sm, om.start, v.dt, before, after, opt.flow);
  for (std::size_t i = 0; i < g0.size(); ++i) {
    const PhasePoint& p = g0[i];
    const LocalGeometry geo = s0.local(p.x, p.y, 1);
    const double el = std::exp(geo.lambda.value());
    const double sx = (gp[i].x - gm[i].x) / (2 * h), sy = (gp[i].y - gm[i].y) / (2 * h);
    const double c = std::cos(p.theta), sn = std::sin(p.theta);
    v.t.push_back((static_cast<int>(i) - before) * v.dt);
    v.x.push_back(el * (sx * c + sy * sn));
    v.y.push_back(el * (-sx * sn + sy * c));
    v.kappa.push_back(geo.kappa.value());
    v.curvature.push_back(geo.magnetic_curvature(p.theta));
    v.f0.push_back((detail::kappa_at(sp, p.x, p.y) - detail::kappa_at(sm, p.x, p.y)) / (2 * h));
  }
  return v;
}

struct JacobiReport {
  double jacobi_residual = 0.0;   // max |y'' + KK y - f0|
  double transport_residual = 0.0;  // max |x' - kappa y|
  double scale = 0.0;              // max |f0| + max |KK y|
  double tolerance = 0.0;
  bool pass = false;
};

/// Residuals of y'' + KK y = f0 and x' = kappa y over t in [0, T].
inline JacobiReport jacobi_residual(const VariationalField& v, double tol = 1e-4) {
  JacobiReport r;
  r.tolerance = tol;
  double fmax = 0.0, kymax = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v.interior(i)) continue;
    const double ydd = detail::d2(v.y, i, v.dt), xd = detail::d1(v.x, i, v.dt);
    r.jacobi_residual = std::max(r.jacobi_residual, std::abs(ydd + v.curvature[i] * v.y[i] - v.f0[i]));
    r.transport_residual = std::max(r.transport_residual, std::abs(xd - v.kappa[i] * v.y[i]));
    fmax = std::max(fmax, std::abs(v.f0[i]));
    kymax = std::max(kymax, std::abs(v.curvature[i] * v.y[i]));
  }
  r.scale = fmax + kymax;
  r.pass = r.jacobi_residual <= tol && r.transport_residual <= tol;
  return r;
}

struct FirstOrderReport {
  double residual = 0.0;        // ||(F + A)u - v|| relative to its scale
  double scale = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  // Homogeneous nondegeneracy along an orbit: distance of the monodromy spectrum from 1.
  double min_singular_value = std::numeric_limits<double>::quiet_NaN();
};

/// (F + A)u = v with u = (y, Fy), v = (0, f0), A = [[0, -1], [KK, 0]]; the first
/// row vanishes identically, the second is F^2 y + KK y - f0.
template <class Space>
FirstOrderReport first_order_system_residual(const Space& s, const FunctionOf<Space>& y, const FunctionOf<Space>& f0,
                                             double tol) {
  const auto kk = magnetic_curvature_function(s);
  const auto fy = apply_F(s, y);
  const auto f2y = apply_F(s, fy);
  const auto kky = multiply(s, kk, y);
  const auto res = f2y + kky - f0;
  FirstOrderReport r;
  r.scale = std::sqrt(norm_sq(s, f2y)) + std::sqrt(norm_sq(s, kky)) + std::sqrt(norm_sq(s, f0));
  const double a = std::sqrt(std::max(0.0, norm_sq(s, res)));
  r.residual = r.scale > 0 ? a / r.scale : a;
  r.tolerance = tol;
  r.pass = r.residual <= tol;
  return r;
}

/// Along a closed orbit the only periodic solution of (F + A)u = 0 is zero iff
/// the monodromy has no eigenvalue 1; reports the smallest singular value of M - I.
template <class System>
FirstOrderReport homogeneous_nondegeneracy(const System& sys, const PeriodicOrbit& orbit, double tol = 1e-6) {
  const Monodromy m = monodromy(sys, orbit);
  const Eigen::JacobiSVD<Eigen::Matrix2d> svd(m.matrix - Eigen::Matrix2d::Identity());
  FirstOrderReport r;
  r.min_singular_value = svd.singularValues().minCoeff();
  r.tolerance = tol;
  r.pass = r.min_singular_value > tol;
  return r;
}

}  // namespace maglab
