#pragma once

// Closed magnetic orbits by free-homotopy class, via multiple shooting.
//
// A closed orbit in the class of a deck transformation D satisfies
// phi_T(X0) = D(X0) in the chart.  The orbit is cut into m segments with
// unknown starts X_0..X_{m-1} and common period T; the equations are segment
// continuity, closure against D, and a phase condition pinning the time
// origin.  Newton uses a minimum-norm least-squares step (complete orthogonal
// decomposition) so families of orbits, such as on a flat torus, do not stall
// the iteration.  Orbits for a target kappa are reached by continuation in a
// scaling of kappa, starting from the geodesic representative.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "maglab/flow.hpp"
#include "maglab/fuchsian.hpp"
#include "maglab/hyperbolic_quadrature.hpp"
#include "maglab/surface.hpp"

namespace maglab {

/// Homology class (m, n) of a closed curve on the torus.
struct TorusClass {
  int m = 1;
  int n = 0;

  /// Sign convention m > 0, or m = 0 and n > 0; (0, 0) is contractible.
  static TorusClass canonical(int m, int n) {
    if (m == 0 && n == 0) throw std::invalid_argument("contractible class (0,0) has no closed orbit to continue");
    if (m < 0 || (m == 0 && n < 0)) return {-m, -n};
    return {m, n};
  }
  std::string key() const { return "(" + std::to_string(m) + "," + std::to_string(n) + ")"; }
};

/// Deck transformation acting on chart phase points.
struct DeckTransform {
  bool hyperbolic = false;
  double shift_x = 0.0, shift_y = 0.0;  // torus
  Mobius element;                       // Bolza

  static DeckTransform torus(const TorusClass& c) {
    DeckTransform d;
    d.shift_x = 2 * std::numbers::pi * c.m;
    d.shift_y = 2 * std::numbers::pi * c.n;
    return d;
  }
  static DeckTransform bolza(const Mobius& m) {
    DeckTransform d;
    d.hyperbolic = true;
    d.element = m;
    return d;
  }

  PhasePoint apply(const PhasePoint& p) const {
    if (!hyperbolic) return {p.x + shift_x, p.y + shift_y, p.theta};
    const cplx z(p.x, p.y);
    const cplx w = element(z);
    return {w.real(), w.imag(), p.theta + std::arg(element.unit_derivative(z))};
  }

  Eigen::Matrix3d jacobian(const PhasePoint& p) const {
    Eigen::Matrix3d j = Eigen::Matrix3d::Identity();
    if (!hyperbolic) return j;
    const cplx z(p.x, p.y);
    const cplx den = element.c * z + element.d;
    const cplx dz = 1.0 / (den * den);  // A'(z), det = 1
    const cplx h = -2.0 * element.c / den;
    j << dz.real(), -dz.imag(), 0, dz.imag(), dz.real(), 0, h.imag(), h.real(), 1;
    return j;
  }
};

struct ShootingOptions {
  int segments = 8;
  int max_iterations = 50;
  double tolerance = 1e-11;        // max-norm of the shooting residual
  double closure_tolerance = 1e-9;  // accepted closure defect of the full period
  int continuation_steps = 10;
  int samples = 256;  // trajectory samples per period
  FlowOptions flow{};
};

class OrbitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PeriodicOrbit {
  std::string class_key;
  double period = 0.0;
  PhasePoint start;
  std::vector<PhasePoint> samples;  // samples[k] = phi_{k T / n}(start), k = 0..n
  double closure_defect = 0.0;
  int newton_iterations = 0;
  int continuation_steps = 0;
  DeckTransform deck;
  std::vector<PhasePoint> segment_starts;
};

namespace detail {

inline double closure_distance(const PhasePoint& a, const PhasePoint& b) {
  return std::max({std::abs(a.x - b.x), std::abs(a.y - b.y), std::abs(angle_difference(a.theta, b.theta))});
}

struct ShootingState {
  std::vector<PhasePoint> starts;
  double period = 0.0;
  int iterations = 0;
};

template <class System>
Eigen::VectorXd shooting_residual(const System& sys, const DeckTransform& deck, const ShootingState& st,
                                  const PhasePoint& ref, const std::array<double, 3>& ref_dir,
                                  const FlowOptions& fo, Eigen::MatrixXd* jac) {
  const int m = static_cast<int>(st.starts.size());
  const int n = 3 * m + 1;
  Eigen::VectorXd r(n);
  if (jac) jac->setZero(n, n);
  const double h = st.period / m;
  for (int j = 0; j < m; ++j) {
    const PhasePoint& xj = st.starts[j];
    PhasePoint y;
    std::array<std::array<double, 3>, 3> phi{};
    if (jac) {
      const auto fw = integrate_flow_with_jacobian(sys, xj, h, fo);
      y = fw.end;
      phi = fw.jacobian;
    } else {
      y = integrate_flow(sys, xj, h, fo);
    }
    const PhasePoint target = j + 1 < m ? st.starts[j + 1] : deck.apply(st.starts[0]);
    r(3 * j) = y.x - target.x;
    r(3 * j + 1) = y.y - target.y;
    r(3 * j + 2) = angle_difference(y.theta, target.theta);
    if (jac) {
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) (*jac)(3 * j + a, 3 * j + b) += phi[a][b];
      if (j + 1 < m) {
        for (int a = 0; a < 3; ++a) (*jac)(3 * j + a, 3 * (j + 1) + a) -= 1.0;
      } else {
        const Eigen::Matrix3d dd = deck.jacobian(st.starts[0]);
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b) (*jac)(3 * j + a, b) -= dd(a, b);
      }
      const auto f = flow_velocity(sys, y);
      for (int a = 0; a < 3; ++a) (*jac)(3 * j + a, n - 1) = f[a] / m;
    }
  }
  const PhasePoint& x0 = st.starts[0];
  r(n - 1) = (x0.x - ref.x) * ref_dir[0] + (x0.y - ref.y) * ref_dir[1] + (x0.theta - ref.theta) * ref_dir[2];
  if (jac)
    for (int a = 0; a < 3; ++a) (*jac)(n - 1, a) = ref_dir[a];
  return r;
}

inline ShootingState apply_step(const ShootingState& st, const Eigen::VectorXd& delta, double scale) {
  ShootingState out = st;
  for (std::size_t j = 0; j < st.starts.size(); ++j) {
    out.starts[j].x += scale * delta(3 * j);
    out.starts[j].y += scale * delta(3 * j + 1);
    out.starts[j].theta += scale * delta(3 * j + 2);
  }
  out.period += scale * delta(delta.size() - 1);
  return out;
}

template <class System>
ShootingState newton_shoot(const System& sys, const DeckTransform& deck, ShootingState st,
                           const ShootingOptions& opt) {
  const PhasePoint ref = st.starts[0];
  const auto f0 = flow_velocity(sys, ref);
  const double nf = std::sqrt(f0[0] * f0[0] + f0[1] * f0[1] + f0[2] * f0[2]);
  const std::array<double, 3> dir{f0[0] / nf, f0[1] / nf, f0[2] / nf};
  Eigen::MatrixXd jac;
  double best = std::numeric_limits<double>::infinity();
  for (int it = 0; it <= opt.max_iterations; ++it) {
    const Eigen::VectorXd r = shooting_residual(sys, deck, st, ref, dir, opt.flow, &jac);
    const double res = r.lpNorm<Eigen::Infinity>();
    best = std::min(best, res);
    st.iterations = it;
    if (res < opt.tolerance) return st;
    if (it == opt.max_iterations) break;
    const Eigen::VectorXd delta = jac.completeOrthogonalDecomposition().solve(-r);
    const double merit = r.squaredNorm();
    double scale = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls) {
      ShootingState trial = apply_step(st, delta, scale);
      if (trial.period > 0) {
        try {
          const Eigen::VectorXd rt = shooting_residual(sys, deck, trial, ref, dir, opt.flow, nullptr);
          if (rt.squaredNorm() <= (1.0 - 1e-4 * scale) * merit || rt.lpNorm<Eigen::Infinity>() < opt.tolerance) {
            st = std::move(trial);
            accepted = true;
            break;
          }
        } catch (const std::domain_error&) {
        } catch (const StiffnessError&) {
        }
      }
      scale *= 0.5;
    }
    if (!accepted) break;
  }
  std::ostringstream os;
  os << "shooting Newton did not converge (best residual " << best << ", period " << st.period << ")";
  throw OrbitError(os.str());
}

template <class System>
PeriodicOrbit finish_orbit(const System& sys, const DeckTransform& deck, const ShootingState& st,
                           const std::string& key, int cont_steps, const ShootingOptions& opt) {
  PeriodicOrbit o;
  o.class_key = key;
  o.period = st.period;
  o.start = st.starts[0];
  o.deck = deck;
  o.newton_iterations = st.iterations;
  o.continuation_steps = cont_steps;
  o.segment_starts = st.starts;
  // Sample segment by segment so that the samples inherit the shooting accuracy.
  const int m = static_cast<int>(st.starts.size());
  const int per = std::max(1, opt.samples / m);
  const double h = st.period / m;
  o.samples.push_back(st.starts[0]);
  PhasePoint end;
  for (int j = 0; j < m; ++j) {
    PhasePoint cur = st.starts[j];
    for (int k = 0; k < per; ++k) {
      cur = integrate_flow(sys, cur, h / per, opt.flow);
      o.samples.push_back(cur);
    }
    end = cur;
  }
  const PhasePoint full = integrate_flow(sys, o.start, o.period, opt.flow);
  o.closure_defect = std::max(closure_distance(full, deck.apply(o.start)), closure_distance(end, deck.apply(o.start)));
  if (!(o.closure_defect <= opt.closure_tolerance)) {
    std::ostringstream os;
    os << "closed orbit in class " << key << " has closure defect " << o.closure_defect;
    throw OrbitError(os.str());
  }
  return o;
}

template <class System>
PeriodicOrbit continue_orbit(const System& target, const DeckTransform& deck, ShootingState seed,
                             const std::string& key, const ShootingOptions& opt, bool kappa_trivial) {
  const int steps = kappa_trivial ? 0 : std::clamp(opt.continuation_steps, 1, 10);
  ShootingState st = newton_shoot(target.kappa_scaled(steps == 0 ? 1.0 : 0.0), deck, std::move(seed), opt);
  // Adaptive continuation in the field scale: halve the step on a failed
  // Newton solve and retry from the last converged orbit.
  double scale = steps == 0 ? 1.0 : 0.0;
  double step = steps == 0 ? 0.0 : 1.0 / steps;
  const double min_step = step / 64;
  while (scale < 1.0) {
    const double next = std::min(1.0, scale + step);
    try {
      st = newton_shoot(target.kappa_scaled(next), deck, st, opt);
      scale = next;
      step = std::min(step * 1.5, 1.0 / std::max(steps, 1));
    } catch (const OrbitError& e) {
      step /= 2;
      if (step < min_step) {
        std::ostringstream os;
        os << "class " << key << ": continuation lost at kappa scale " << next << ": " << e.what();
        throw OrbitError(os.str());
      }
    }
  }
  return finish_orbit(target, deck, st, key, steps, opt);
}

template <class System>
ShootingState seed_from_start(const System& sys, const PhasePoint& x0, double period, int segments,
                              const FlowOptions& fo) {
  ShootingState st;
  st.period = period;
  PhasePoint cur = x0;
  for (int j = 0; j < segments; ++j) {
    st.starts.push_back(cur);
    cur = integrate_flow(sys, cur, period / segments, fo);
  }
  return st;
}

inline bool kappa_is_zero(const TorusSystem& s) { return s.kappa().is_zero(); }
inline bool kappa_is_zero(const BolzaSystem& s) { return s.kappa_mean() == 0.0 && s.kappa_is_constant(); }

}  // namespace detail

/// Translation length of a hyperbolic element, 2 arccosh(|tr|/2).
inline double translation_length(const Mobius& m) {
  const double t = std::abs(m.trace()) / 2;
  if (t <= 1.0) throw std::domain_error("element is not hyperbolic");
  return 2 * std::acosh(t);
}

/// Point and direction on the axis of a hyperbolic element, at the axis
/// point closest to the origin, oriented toward the attracting fixed point.
inline PhasePoint axis_point(const Mobius& m) {
  const auto [rep, att] = fixed_points(m);
  const cplx mid = rep + att;
  cplx p0;
  if (std::abs(mid) < 1e-14) {
    p0 = 0.0;
  } else {
    const double half = std::abs(std::arg(att / rep)) / 2;
    p0 = (mid / std::abs(mid)) * (1.0 / std::cos(half) - std::tan(half));
  }
  cplx dir = (std::abs(mid) < 1e-14) ? att : cplx(0, 1) * (mid / std::abs(mid));
  // The axis direction at p0 is perpendicular to p0; orient it toward att.
  if (std::real(std::conj(dir) * (att - rep)) < 0) dir = -dir;
  return {p0.real(), p0.imag(), std::arg(dir)};
}

template <class System>
double closure_defect(const System& sys, const PeriodicOrbit& o, const FlowOptions& fo = {}) {
  return detail::closure_distance(integrate_flow(sys, o.start, o.period, fo), o.deck.apply(o.start));
}

inline PeriodicOrbit find_periodic_orbit(const TorusSystem& sys, TorusClass cls, const ShootingOptions& opt = {}) {
  cls = TorusClass::canonical(cls.m, cls.n);
  const DeckTransform deck = DeckTransform::torus(cls);
  const TorusSystem geodesic = sys.kappa_scaled(0.0);
  // Straight-line seed with the conformal length of the line as period.
  const double lx = 2 * std::numbers::pi * cls.m, ly = 2 * std::numbers::pi * cls.n;
  const double theta = std::atan2(ly, lx);
  const GaussRule g = gauss_legendre(64);
  double len = 0;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const double t = 0.5 * (1 + g.nodes[i]);
    len += 0.5 * g.weights[i] * std::exp(sys.lambda().value(t * lx, t * ly).real());
  }
  len *= std::hypot(lx, ly);
  detail::ShootingState seed;
  seed.period = len;
  for (int j = 0; j < opt.segments; ++j) {
    const double t = static_cast<double>(j) / opt.segments;
    seed.starts.push_back({t * lx, t * ly, theta});
  }
  // Polish the geodesic first, then continue in kappa.
  seed = detail::newton_shoot(geodesic, deck, seed, opt);
  return detail::continue_orbit(sys, deck, seed, cls.key(), opt, detail::kappa_is_zero(sys));
}

inline PeriodicOrbit find_periodic_orbit(const BolzaSystem& sys, const GroupWord& word,
                                         const ShootingOptions& opt = {}) {
  if (word.empty()) throw std::invalid_argument("contractible class (empty word) has no closed orbit to continue");
  const Mobius a = sys.group().element(word);
  const double ell = translation_length(a);
  const DeckTransform deck = DeckTransform::bolza(a);
  const BolzaSystem geodesic = sys.kappa_scaled(0.0);
  // Start half a period before the axis point nearest the origin, so the
  // orbit stays as central as possible in the disk chart.
  const PhasePoint mid = axis_point(a);
  const PhasePoint x0 = integrate_flow(geodesic, mid, -ell / 2, opt.flow);
  // Long orbits get more shooting segments so each stays well conditioned.
  ShootingOptions local = opt;
  local.segments = std::max(opt.segments, static_cast<int>(std::ceil(2 * ell)));
  detail::ShootingState seed = detail::seed_from_start(geodesic, x0, ell, local.segments, local.flow);
  return detail::continue_orbit(sys, deck, seed, word.key(), local, detail::kappa_is_zero(sys));
}

inline PeriodicOrbit find_periodic_orbit(const BolzaSystem& sys, const std::string& word,
                                         const ShootingOptions& opt = {}) {
  return find_periodic_orbit(sys, GroupWord::parse(word), opt);
}

struct Monodromy {
  Eigen::Matrix2d matrix = Eigen::Matrix2d::Identity();
  double trace = 2.0;
  double determinant = 1.0;
  std::complex<double> eigenvalue_large, eigenvalue_small;
  bool hyperbolic() const { return std::abs(trace) > 2.0; }
};

/// Fundamental matrix of the Jacobi system y' = w, w' = -(magnetic curvature) y
/// over one period of the orbit.
template <class System>
Monodromy monodromy(const System& sys, const PeriodicOrbit& orbit, const FlowOptions& opt = {}) {
  using State = std::array<double, 7>;
  State s{orbit.start.x, orbit.start.y, orbit.start.theta, 1, 0, 0, 1};
  auto rhs = [&](const State& u, State& du, double) {
    const auto f = detail::flow_velocity(sys, u[0], u[1], u[2]);
    const double kk = sys.local(u[0], u[1], 1).magnetic_curvature(u[2]);
    du[0] = f[0];
    du[1] = f[1];
    du[2] = f[2];
    // columns (y, w) of the fundamental matrix: rows 3,4 = first column, 5,6 = second
    du[3] = u[4];
    du[4] = -kk * u[3];
    du[5] = u[6];
    du[6] = -kk * u[5];
  };
  detail::integrate_state(rhs, s, 0.0, orbit.period, opt);
  Monodromy m;
  m.matrix << s[3], s[5], s[4], s[6];
  m.trace = m.matrix.trace();
  m.determinant = m.matrix.determinant();
  const std::complex<double> disc = std::sqrt(std::complex<double>(m.trace * m.trace - 4 * m.determinant));
  m.eigenvalue_large = (m.trace + disc) / 2.0;
  m.eigenvalue_small = (m.trace - disc) / 2.0;
  if (std::abs(m.eigenvalue_small) > std::abs(m.eigenvalue_large)) std::swap(m.eigenvalue_small, m.eigenvalue_large);
  return m;
}

/// Trace of the derivative of the 3D return map D^{-1} phi_T at the orbit start.
template <class System>
double return_map_trace(const System& sys, const PeriodicOrbit& orbit, const FlowOptions& opt = {}) {
  const auto fw = integrate_flow_with_jacobian(sys, orbit.start, orbit.period, opt);
  Eigen::Matrix3d phi;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) phi(a, b) = fw.jacobian[a][b];
  const Eigen::Matrix3d dd = orbit.deck.jacobian(orbit.start);
  return (dd.inverse() * phi).trace();
}

struct SpectrumRow {
  std::string class_key;
  bool ok = false;
  double period = 0.0;
  double closure_defect = 0.0;
  double monodromy_trace = 0.0;
  std::string error;
};

/// Closed-orbit lengths per class, in the order given; failures are recorded per row.
template <class System, class Label>
std::vector<SpectrumRow> marked_length_spectrum(const System& sys, const std::vector<Label>& classes,
                                                const ShootingOptions& opt = {}) {
  std::vector<SpectrumRow> rows;
  for (const auto& c : classes) {
    SpectrumRow row;
    try {
      const PeriodicOrbit o = find_periodic_orbit(sys, c, opt);
      row.class_key = o.class_key;
      row.period = o.period;
      row.closure_defect = o.closure_defect;
      row.monodromy_trace = monodromy(sys, o, opt.flow).trace;
      row.ok = true;
    } catch (const std::exception& e) {
      if constexpr (std::is_same_v<Label, TorusClass>)
        row.class_key = c.key();
      else if constexpr (std::is_same_v<Label, GroupWord>)
        row.class_key = c.key();
      else
        row.class_key = std::string(c);
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Moves a phase point back to the fundamental domain of the chart.
inline PhasePoint recenter(const TorusSystem&, const PhasePoint& p) {
  const double two_pi = 2 * std::numbers::pi;
  return {p.x - two_pi * std::floor(p.x / two_pi), p.y - two_pi * std::floor(p.y / two_pi), wrap_angle(p.theta)};
}
inline PhasePoint recenter(const BolzaSystem& sys, const PhasePoint& p) {
  const DeckTransform d = DeckTransform::bolza(sys.group().reduce({p.x, p.y}));
  PhasePoint q = d.apply(p);
  q.theta = wrap_angle(q.theta);
  return q;
}

/// Running time averages (1/T) int_0^T u(phi_t p) dt at n equally spaced checkpoints up to t_max.
template <class System>
std::vector<std::pair<double, double>> birkhoff_average(const System& sys,
                                                        const std::function<double(const PhasePoint&)>& u,
                                                        const PhasePoint& p, double t_max, int checkpoints,
                                                        const FlowOptions& opt = {}) {
  if (checkpoints < 1 || !(t_max > 0)) throw std::invalid_argument("birkhoff_average needs t_max > 0, checkpoints >= 1");
  std::vector<std::pair<double, double>> out;
  PhasePoint cur = p;
  double integral = 0.0;
  const double dt = t_max / checkpoints;
  for (int k = 1; k <= checkpoints; ++k) {
    const auto [next, piece] = integrate_along(sys, cur, dt, u, opt);
    cur = recenter(sys, next);
    integral += piece;
    out.emplace_back(k * dt, integral / (k * dt));
  }
  return out;
}

}  // namespace maglab
