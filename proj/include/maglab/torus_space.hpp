#pragma once

// Pseudo-spectral discretization of SM over a conformal torus.  Base
// coefficients are TrigFields of size n; derivatives act in coefficient
// space and products are dealiased.  With lambda = 0 every operation is
// exact on band-limited data (as long as products stay inside the band).

#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <string>

#include "maglab/phase_function.hpp"
#include "maglab/surface.hpp"
#include "maglab/trig_field.hpp"

namespace maglab {

class TorusSpace {
 public:
  using Field = TrigField;
  using Function = PhaseFunction<TrigField>;

  TorusSpace(TorusSystem system, int n) : system_(std::move(system)), n_(n) {
    flat_ = system_.is_flat();
    const TrigField lambda = TrigField::from_poly(system_.lambda(), n_);
    kappa_ = TrigField::from_poly(system_.kappa(), n_);
    if (flat_) {
      em_lambda_ = TrigField::constant(1.0, n_);
      area_density_ = em_lambda_;
      d_lambda_ = TrigField(n_);
      dbar_lambda_ = TrigField(n_);
      gauss_ = TrigField(n_);
    } else {
      em_lambda_ = lambda.map_values([](cplx v) { return std::exp(-v.real()); });
      area_density_ = lambda.map_values([](cplx v) { return std::exp(2 * v.real()); });
      d_lambda_ = lambda.d();
      dbar_lambda_ = lambda.dbar();
      const TrigField em2 = lambda.map_values([](cplx v) { return std::exp(-2 * v.real()); });
      gauss_ = (em2 * lambda.laplacian()) * cplx(-1.0);
    }
  }

  const TorusSystem& system() const { return system_; }
  int resolution() const { return n_; }
  bool is_flat() const { return flat_; }
  std::string backend() const { return system_.backend(); }

  Field zero() const { return TrigField(n_); }
  Field constant(cplx c) const { return TrigField::constant(c, n_); }
  Field lift(const TrigPoly& p) const { return TrigField::from_poly(p, n_); }

  Function lift(const std::map<int, TrigPoly>& modes) const {
    Function u;
    for (const auto& [k, p] : modes) u.add(k, lift(p));
    return u;
  }

  const Field& kappa() const { return kappa_; }
  const Field& gaussian_curvature() const { return gauss_; }
  const Field& area_density() const { return area_density_; }

  Field multiply(const Field& a, const Field& b) const { return a * b; }

  /// e^{-lambda} (d f - k d(lambda) f): base part of eta^+ on mode k.
  Field horizontal_plus(const Field& f, int k) const {
    if (flat_) return f.d();
    return em_lambda_ * (f.d() - (d_lambda_ * f) * cplx(k));
  }
  /// e^{-lambda} (dbar f + k dbar(lambda) f): base part of eta^- on mode k.
  Field horizontal_minus(const Field& f, int k) const {
    if (flat_) return f.dbar();
    return em_lambda_ * (f.dbar() + (dbar_lambda_ * f) * cplx(k));
  }

  /// Integral over M of f against the Riemannian area.
  cplx integrate(const Field& f) const { return pair(f, constant(1.0)); }
  /// Integral over M of f conj(g) dA.
  cplx pair(const Field& f, const Field& g) const {
    if (flat_) return TrigField::parseval(f, g);
    return TrigField::parseval(f * area_density_, g);
  }

  double area() const { return integrate(constant(1.0)).real(); }

  cplx value(const Field& f, double x, double y) const { return f.value(x, y); }

 private:
  TorusSystem system_;
  int n_;
  bool flat_ = true;
  Field em_lambda_, area_density_, d_lambda_, dbar_lambda_, kappa_, gauss_;
};

}  // namespace maglab
