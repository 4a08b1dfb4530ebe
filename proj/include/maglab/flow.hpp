#pragma once

// The magnetic flow in chart coordinates (x, y, theta), where theta is the
// Euclidean angle of the velocity.  Unit speed is built into the chart state,
// so no renormalization is needed:
//   x'     = e^{-lambda} cos(theta)
//   y'     = e^{-lambda} sin(theta)
//   theta' = e^{-lambda} (-lambda_x sin(theta) + lambda_y cos(theta)) + kappa
// Integration uses the adaptive Dormand-Prince 5(4) pair from Boost.Odeint.

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "maglab/surface.hpp"

namespace maglab {

struct FlowOptions {
  double abs_tol = 1e-12;
  double rel_tol = 1e-12;
  double initial_step = 1e-3;
};

class StiffnessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

template <class State, class Rhs>
void integrate_state(Rhs&& rhs, State& s, double t0, double t1, const FlowOptions& opt) {
  namespace ode = boost::numeric::odeint;
  if (t0 == t1) return;
  auto stepper = ode::make_controlled(opt.abs_tol, opt.rel_tol, ode::runge_kutta_dopri5<State>());
  const double dt = t1 > t0 ? opt.initial_step : -opt.initial_step;
  try {
    ode::integrate_adaptive(stepper, rhs, s, t0, t1, dt);
  } catch (const ode::step_adjustment_error& e) {
    throw StiffnessError(std::string("step size underflow in magnetic flow: ") + e.what());
  }
  for (double v : s)
    if (!std::isfinite(v)) throw StiffnessError("non-finite state in magnetic flow");
}

/// Flow velocity and, when requested, its Jacobian in (x, y, theta).
template <class System>
std::array<double, 3> flow_velocity(const System& sys, double x, double y, double th,
                                    std::array<std::array<double, 3>, 3>* jac = nullptr) {
  const LocalGeometry g = sys.local(x, y, jac ? 2 : 1);
  const double em = std::exp(-g.lambda.value());
  const double lx = g.lambda.derivative(1, 0), ly = g.lambda.derivative(0, 1);
  const double c = std::cos(th), s = std::sin(th);
  const double h = -lx * s + ly * c;
  const std::array<double, 3> f{em * c, em * s, em * h + g.kappa.value()};
  if (jac) {
    const double lxx = g.lambda.derivative(2, 0), lxy = g.lambda.derivative(1, 1), lyy = g.lambda.derivative(0, 2);
    auto& j = *jac;
    j[0] = {-lx * em * c, -ly * em * c, -em * s};
    j[1] = {-lx * em * s, -ly * em * s, em * c};
    j[2] = {-lx * em * h + em * (-lxx * s + lxy * c) + g.kappa.derivative(1, 0),
            -ly * em * h + em * (-lxy * s + lyy * c) + g.kappa.derivative(0, 1), em * (-lx * c - ly * s)};
  }
  return f;
}

}  // namespace detail

template <class System>
std::array<double, 3> flow_velocity(const System& sys, const PhasePoint& p) {
  return detail::flow_velocity(sys, p.x, p.y, p.theta);
}

/// phi_t(p).  theta is returned unwrapped (a continuous lift).
template <class System>
PhasePoint integrate_flow(const System& sys, const PhasePoint& p, double t, const FlowOptions& opt = {}) {
  if (!std::isfinite(t)) throw std::invalid_argument("integration time must be finite");
  using State = std::array<double, 3>;
  State s{p.x, p.y, p.theta};
  auto rhs = [&](const State& u, State& du, double) { du = detail::flow_velocity(sys, u[0], u[1], u[2]); };
  detail::integrate_state(rhs, s, 0.0, t, opt);
  return {s[0], s[1], s[2]};
}

/// The flow together with its 3x3 derivative D phi_t (row-major).
struct FlowWithJacobian {
  PhasePoint end;
  std::array<std::array<double, 3>, 3> jacobian{};
};

template <class System>
FlowWithJacobian integrate_flow_with_jacobian(const System& sys, const PhasePoint& p, double t,
                                              const FlowOptions& opt = {}) {
  using State = std::array<double, 12>;
  State s{p.x, p.y, p.theta, 1, 0, 0, 0, 1, 0, 0, 0, 1};
  auto rhs = [&](const State& u, State& du, double) {
    std::array<std::array<double, 3>, 3> j;
    const auto f = detail::flow_velocity(sys, u[0], u[1], u[2], &j);
    du[0] = f[0];
    du[1] = f[1];
    du[2] = f[2];
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) {
        double acc = 0;
        for (int k = 0; k < 3; ++k) acc += j[r][k] * u[3 + 3 * k + c];
        du[3 + 3 * r + c] = acc;
      }
  };
  detail::integrate_state(rhs, s, 0.0, t, opt);
  FlowWithJacobian out;
  out.end = {s[0], s[1], s[2]};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out.jacobian[r][c] = s[3 + 3 * r + c];
  return out;
}

/// Samples phi_t(p) at t = k T / n, k = 0..n.
template <class System>
std::vector<PhasePoint> sample_trajectory(const System& sys, const PhasePoint& p, double period, int n,
                                          const FlowOptions& opt = {}) {
  if (n < 1) throw std::invalid_argument("sample_trajectory needs n >= 1");
  std::vector<PhasePoint> out{p};
  PhasePoint cur = p;
  for (int k = 0; k < n; ++k) {
    cur = integrate_flow(sys, cur, period / n, opt);
    out.push_back(cur);
  }
  return out;
}

/// Integrates an additional scalar along the flow: returns phi_t(p) and
/// int_0^t g(phi_s(p)) ds.
template <class System>
std::pair<PhasePoint, double> integrate_along(const System& sys, const PhasePoint& p, double t,
                                              const std::function<double(const PhasePoint&)>& g,
                                              const FlowOptions& opt = {}) {
  using State = std::array<double, 4>;
  State s{p.x, p.y, p.theta, 0.0};
  auto rhs = [&](const State& u, State& du, double) {
    const auto f = detail::flow_velocity(sys, u[0], u[1], u[2]);
    du = {f[0], f[1], f[2], g(PhasePoint{u[0], u[1], u[2]})};
  };
  detail::integrate_state(rhs, s, 0.0, t, opt);
  return {PhasePoint{s[0], s[1], s[2]}, s[3]};
}

}  // namespace maglab
