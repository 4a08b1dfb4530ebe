#pragma once

// SM over the Bolza surface, discretized by Taylor jets at the nodes of a
// point set (an octagon quadrature, or explicit points for pointwise checks).
// Functions are sampled from Gamma-equivariant bump series, so all frame
// operators are exact pointwise; only integrals carry quadrature error.

#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>

#include "maglab/bump_atoms.hpp"
#include "maglab/hyperbolic_quadrature.hpp"
#include "maglab/phase_function.hpp"
#include "maglab/surface.hpp"

namespace maglab {

class BolzaSpace {
 public:
  using Field = JetField;
  using Function = PhaseFunction<JetField>;

  BolzaSpace(BolzaSystem system, std::shared_ptr<const PointSet> points)
      : system_(std::move(system)), points_(std::move(points)) {
    if (!points_) throw std::invalid_argument("BolzaSpace needs a point set");
    const int g = kMaxJetOrder;
    em_lambda_ = JetField(points_, g);
    d_lambda_ = JetField(points_, g - 1);
    dbar_lambda_ = JetField(points_, g - 1);
    kappa_ = JetField(points_, g);
    gauss_ = JetField(points_, g);
    for (std::size_t i = 0; i < points_->size(); ++i) {
      const cplx z0 = points_->points[i];
      if (!(std::abs(z0) < 1.0)) throw std::domain_error("point outside the Poincare disk");
      const ComplexJet z = coordinate_z(z0, g);
      const ComplexJet zz = z * conj(z);
      // e^{-lambda} = (1 - |z|^2) / 2
      em_lambda_[i] = (1.0 - zz) * cplx(0.5);
      // d lambda = conj(z) / (1 - |z|^2), dbar lambda = z / (1 - |z|^2)
      const ComplexJet inv = reciprocal(1.0 - zz);
      d_lambda_[i] = (conj(z) * inv).truncated(g - 1);
      dbar_lambda_[i] = (z * inv).truncated(g - 1);
      kappa_[i] = system_.kappa_complex_jet(z);
      gauss_[i] = ComplexJet::constant(-1.0, g);
    }
  }

  static BolzaSpace with_quadrature(BolzaSystem system, int panels, int gauss_points = 6) {
    return BolzaSpace(std::move(system), octagon_quadrature(panels, gauss_points));
  }

  const BolzaSystem& system() const { return system_; }
  const std::shared_ptr<const PointSet>& points() const { return points_; }
  std::string backend() const { return system_.backend(); }
  std::string resolution_label() const { return points_->label; }

  Field zero(int order = kMaxJetOrder) const { return JetField(points_, order); }
  Field constant(cplx c, int order = kMaxJetOrder) const {
    JetField f(points_, order);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = ComplexJet::constant(c, order);
    return f;
  }

  /// Samples mode k of a bump series (atoms at other modes are ignored).
  Field sample_mode(const BumpEvaluator& ev, int k, int order = 2) const {
    JetField f(points_, order);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = ev.mode_jet(k, coordinate_z(points_->points[i], order));
    return f;
  }

  Function sample(const BumpEvaluator& ev, int order = 2, cplx constant_term = 0.0) const {
    Function u;
    for (const auto& [k, atoms] : ev.series().modes)
      if (!atoms.empty()) u.add(k, sample_mode(ev, k, order));
    if (constant_term != cplx{}) u.add(0, constant(constant_term, order));
    return u;
  }

  Function sample(const AtomSeries& series, int order = 2, cplx constant_term = 0.0) const {
    const BumpEvaluator ev(system_.group_ptr(), series);
    return sample(ev, order, constant_term);
  }

  const Field& kappa() const { return kappa_; }
  const Field& gaussian_curvature() const { return gauss_; }

  Field multiply(const Field& a, const Field& b) const { return a * b; }

  Field horizontal_plus(const Field& f, int k) const {
    return em_lambda_ * (f.d() - (d_lambda_ * f) * cplx(k));
  }
  Field horizontal_minus(const Field& f, int k) const {
    return em_lambda_ * (f.dbar() + (dbar_lambda_ * f) * cplx(k));
  }

  cplx integrate(const Field& f) const {
    require_quadrature();
    cplx s{};
    for (std::size_t i = 0; i < f.size(); ++i) s += points_->weights[i] * f.value(i);
    return s;
  }
  cplx pair(const Field& f, const Field& g) const {
    require_quadrature();
    cplx s{};
    for (std::size_t i = 0; i < f.size(); ++i) s += points_->weights[i] * f.value(i) * std::conj(g.value(i));
    return s;
  }

  double area() const {
    require_quadrature();
    double s = 0;
    for (double w : points_->weights) s += w;
    return s;
  }

  cplx value(const Field& f, std::size_t i) const { return f.value(i); }

 private:
  void require_quadrature() const {
    if (!points_->is_quadrature()) throw std::logic_error("integral requested on a point set without weights");
  }

  BolzaSystem system_;
  std::shared_ptr<const PointSet> points_;
  Field em_lambda_, d_lambda_, dbar_lambda_, kappa_, gauss_;
};

}  // namespace maglab
