#pragma once

// Frame fields on SM acting on PhaseFunctions of either backend.
//
// In isothermal coordinates, with f e^{ik theta} a mode-k function,
//   eta^+ (f e^{ik theta}) = e^{-lambda} (d f - k d(lambda) f)    e^{i(k+1) theta}
//   eta^- (f e^{ik theta}) = e^{-lambda} (dbar f + k dbar(lambda) f) e^{i(k-1) theta}
// and X = eta^+ + eta^-, X^perp = i(eta^+ - eta^-) = [V, X], V = d/dtheta,
// F = X + kappa V.  The Liouville pairing is (u, v) = 2 pi sum_k int u_k conj(v_k) dA.

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include "maglab/phase_function.hpp"

namespace maglab {

template <class Space>
using FunctionOf = PhaseFunction<typename Space::Field>;

template <class Space>
FunctionOf<Space> eta_plus(const Space& s, const FunctionOf<Space>& u) {
  FunctionOf<Space> r;
  for (const auto& [k, f] : u.modes()) r.add(k + 1, s.horizontal_plus(f, k));
  return r;
}

template <class Space>
FunctionOf<Space> eta_minus(const Space& s, const FunctionOf<Space>& u) {
  FunctionOf<Space> r;
  for (const auto& [k, f] : u.modes()) r.add(k - 1, s.horizontal_minus(f, k));
  return r;
}

template <class Space>
FunctionOf<Space> apply_X(const Space& s, const FunctionOf<Space>& u) {
  return eta_plus(s, u) + eta_minus(s, u);
}

template <class Space>
FunctionOf<Space> apply_Xperp(const Space& s, const FunctionOf<Space>& u) {
  return (eta_plus(s, u) - eta_minus(s, u)) * cplx(0.0, 1.0);
}

template <class Space>
FunctionOf<Space> apply_V(const Space&, const FunctionOf<Space>& u) {
  FunctionOf<Space> r;
  for (const auto& [k, f] : u.modes()) r.add(k, f * cplx(0.0, k));
  return r;
}

/// Pointwise product with a function of the base point.
template <class Space>
FunctionOf<Space> multiply_base(const Space& s, const typename Space::Field& a, const FunctionOf<Space>& u) {
  FunctionOf<Space> r;
  for (const auto& [k, f] : u.modes()) r.add(k, s.multiply(a, f));
  return r;
}

/// Product of phase functions: mode k times mode l lands in mode k + l.
template <class Space>
FunctionOf<Space> multiply(const Space& s, const FunctionOf<Space>& u, const FunctionOf<Space>& v) {
  FunctionOf<Space> r;
  for (const auto& [k, f] : u.modes())
    for (const auto& [l, g] : v.modes()) r.add(k + l, s.multiply(f, g));
  return r;
}

template <class Space>
FunctionOf<Space> apply_F(const Space& s, const FunctionOf<Space>& u) {
  return apply_X(s, u) + multiply_base(s, s.kappa(), apply_V(s, u));
}

enum class FrameField { X, Xperp, V, F, EtaPlus, EtaMinus };

inline std::string to_string(FrameField w) {
  switch (w) {
    case FrameField::X: return "X";
    case FrameField::Xperp: return "Xperp";
    case FrameField::V: return "V";
    case FrameField::F: return "F";
    case FrameField::EtaPlus: return "eta_plus";
    case FrameField::EtaMinus: return "eta_minus";
  }
  return "?";
}

template <class Space>
FunctionOf<Space> apply(const Space& s, FrameField w, const FunctionOf<Space>& u) {
  switch (w) {
    case FrameField::X: return apply_X(s, u);
    case FrameField::Xperp: return apply_Xperp(s, u);
    case FrameField::V: return apply_V(s, u);
    case FrameField::F: return apply_F(s, u);
    case FrameField::EtaPlus: return eta_plus(s, u);
    case FrameField::EtaMinus: return eta_minus(s, u);
  }
  throw std::invalid_argument("unknown frame field");
}

template <class Space>
FunctionOf<Space> base_function(const Space&, const typename Space::Field& f) {
  return FunctionOf<Space>(0, f);
}

template <class Space>
FunctionOf<Space> kappa_function(const Space& s) {
  return FunctionOf<Space>(0, s.kappa());
}

/// K - X^perp(kappa) + kappa^2 as a phase function (fiber modes -1, 0, 1).
template <class Space>
FunctionOf<Space> magnetic_curvature_function(const Space& s) {
  FunctionOf<Space> r(0, s.gaussian_curvature() + s.multiply(s.kappa(), s.kappa()));
  return r - apply_Xperp(s, kappa_function(s));
}

template <class Space>
cplx inner_product(const Space& s, const FunctionOf<Space>& u, const FunctionOf<Space>& v) {
  cplx acc{};
  for (const auto& [k, f] : u.modes())
    if (v.has_mode(k)) acc += s.pair(f, v.mode(k));
  return 2 * std::numbers::pi * acc;
}

template <class Space>
double norm_sq(const Space& s, const FunctionOf<Space>& u) {
  return inner_product(s, u, u).real();
}

/// Integral over SM against the Liouville measure (only mode 0 survives).
template <class Space>
cplx liouville_integral(const Space& s, const FunctionOf<Space>& u) {
  if (!u.has_mode(0)) return 0.0;
  return 2 * std::numbers::pi * s.integrate(u.mode(0));
}

/// Point value of u at a torus phase point.
template <class Space>
cplx evaluate(const Space& s, const FunctionOf<Space>& u, double x, double y, double theta) {
  cplx acc{};
  for (const auto& [k, f] : u.modes()) acc += s.value(f, x, y) * std::exp(cplx(0, k * theta));
  return acc;
}

/// Point value of u at node i of a jet-sampled space.
template <class Space>
cplx evaluate(const Space& s, const FunctionOf<Space>& u, std::size_t i, double theta) {
  cplx acc{};
  for (const auto& [k, f] : u.modes()) acc += s.value(f, i) * std::exp(cplx(0, k * theta));
  return acc;
}

}  // namespace maglab
