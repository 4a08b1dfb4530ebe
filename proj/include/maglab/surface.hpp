#pragma once

// Surface backends and magnetic systems.
//
// Both backends use isothermal charts, g = e^{2 lambda}(dx^2 + dy^2):
//   * TorusSystem: lambda and kappa are trigonometric polynomials on the
//     2pi-periodic square; K = -e^{-2 lambda} Laplacian(lambda).
//   * BolzaSystem: the Poincare disk, lambda = log(2 / (1 - |z|^2)), K = -1,
//     kappa = constant + Gamma-invariant bump sum.
// A phase point (x, y, theta) is the unit vector e^{-lambda}(cos theta, sin theta)
// at (x, y), so every phase point is on the unit bundle by construction.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "maglab/bump_atoms.hpp"
#include "maglab/fuchsian.hpp"
#include "maglab/jet.hpp"
#include "maglab/trig_field.hpp"

namespace maglab {

struct PhasePoint {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  cplx base() const { return {x, y}; }
};

/// Lifts theta into [0, 2pi).
inline double wrap_angle(double theta) {
  const double two_pi = 2 * std::numbers::pi;
  double t = std::fmod(theta, two_pi);
  if (t < 0) t += two_pi;
  return t;
}

/// Signed difference wrapped to (-pi, pi].
inline double angle_difference(double a, double b) {
  double d = std::remainder(a - b, 2 * std::numbers::pi);
  if (d <= -std::numbers::pi) d += 2 * std::numbers::pi;
  return d;
}

/// Taylor data of the conformal factor and the magnetic intensity at a base point.
struct LocalGeometry {
  RealJet lambda;
  RealJet kappa;
  double gaussian_curvature = 0.0;

  double conformal_factor() const { return std::exp(lambda.value()); }

  /// K - X^perp(kappa) + kappa^2 at fiber angle theta.
  double magnetic_curvature(double theta) const {
    const double em = std::exp(-lambda.value());
    const double xperp = em * (-std::sin(theta) * kappa.derivative(1, 0) + std::cos(theta) * kappa.derivative(0, 1));
    const double k = kappa.value();
    return gaussian_curvature - xperp + k * k;
  }
};

class TorusSystem {
 public:
  static constexpr const char* kBackend = "torus";

  TorusSystem() = default;
  TorusSystem(TrigPoly lambda, TrigPoly kappa) : lambda_(std::move(lambda)), kappa_(std::move(kappa)) {
    if (!lambda_.is_real(1e-12)) throw std::invalid_argument("conformal factor must be real-valued");
    if (!kappa_.is_real(1e-12)) throw std::invalid_argument("magnetic intensity must be real-valued");
  }

  const TrigPoly& lambda() const { return lambda_; }
  const TrigPoly& kappa() const { return kappa_; }
  bool is_flat() const { return lambda_.is_zero(); }
  std::string backend() const { return is_flat() ? "flat-torus" : "torus"; }

  bool in_chart(double x, double y) const { return std::isfinite(x) && std::isfinite(y); }

  LocalGeometry local(double x, double y, int order = 2) const {
    if (!in_chart(x, y)) throw std::domain_error("point outside the torus chart");
    LocalGeometry g;
    g.lambda = lambda_.jet(x, y, order);
    g.kappa = kappa_.jet(x, y, order);
    g.gaussian_curvature = gaussian_curvature(x, y);
    return g;
  }

  double gaussian_curvature(double x, double y) const {
    if (!in_chart(x, y)) throw std::domain_error("point outside the torus chart");
    const RealJet l = lambda_.jet(x, y, 2);
    const double lap = l.derivative(2, 0) + l.derivative(0, 2);
    return -std::exp(-2 * l.value()) * lap;
  }

  double kappa_value(double x, double y) const { return kappa_.value(x, y).real(); }

  TorusSystem with_kappa(TrigPoly kappa) const { return TorusSystem(lambda_, std::move(kappa)); }
  TorusSystem with_lambda(TrigPoly lambda) const { return TorusSystem(std::move(lambda), kappa_); }
  TorusSystem kappa_scaled(double factor) const { return with_kappa(kappa_ * factor); }

 private:
  TrigPoly lambda_;
  TrigPoly kappa_;
};

class BolzaSystem {
 public:
  static constexpr const char* kBackend = "bolza";

  explicit BolzaSystem(double kappa_mean = 0.0, AtomSeries kappa_bumps = {},
                       std::shared_ptr<const BolzaGroup> group = nullptr)
      : group_(group ? std::move(group) : std::make_shared<const BolzaGroup>()),
        kappa_mean_(kappa_mean) {
    for (const auto& [k, atoms] : kappa_bumps.modes)
      if (k != 0 && !atoms.empty()) throw std::invalid_argument("magnetic intensity bumps must be fiber mode 0");
    for (const auto& a : kappa_bumps.modes[0])
      if (std::abs(a.weight.imag()) > 0) throw std::invalid_argument("magnetic intensity must be real-valued");
    bumps_ = std::make_shared<const BumpEvaluator>(group_, std::move(kappa_bumps));
  }

  std::string backend() const { return kBackend; }
  const BolzaGroup& group() const { return *group_; }
  std::shared_ptr<const BolzaGroup> group_ptr() const { return group_; }
  double kappa_mean() const { return kappa_mean_; }
  const AtomSeries& kappa_bumps() const { return bumps_->series(); }
  bool kappa_is_constant() const { return bumps_->series().empty(); }

  bool in_chart(double x, double y) const { return std::isfinite(x) && std::isfinite(y) && x * x + y * y < 1.0; }

  static RealJet lambda_jet(cplx z0, int order) {
    const RealJet x = RealJet::coordinate_x(z0.real(), order);
    const RealJet y = RealJet::coordinate_y(z0.imag(), order);
    return std::log(2.0) - log(1.0 - (x * x + y * y));
  }

  RealJet kappa_jet(cplx z0, int order) const {
    RealJet k = RealJet::constant(kappa_mean_, order);
    if (!kappa_is_constant()) k += real_part(bumps_->mode_jet(0, coordinate_z(z0, order)));
    return k;
  }

  ComplexJet kappa_complex_jet(const ComplexJet& z) const {
    ComplexJet k = ComplexJet::constant(kappa_mean_, z.order());
    if (!kappa_is_constant()) k += bumps_->mode_jet(0, z);
    return k;
  }

  LocalGeometry local(double x, double y, int order = 2) const {
    if (!in_chart(x, y)) throw std::domain_error("point outside the Poincare disk");
    LocalGeometry g;
    g.lambda = lambda_jet({x, y}, order);
    g.kappa = kappa_jet({x, y}, order);
    g.gaussian_curvature = -1.0;
    return g;
  }

  double gaussian_curvature(double x, double y) const {
    if (!in_chart(x, y)) throw std::domain_error("point outside the Poincare disk");
    return -1.0;
  }

  double kappa_value(double x, double y) const { return kappa_jet({x, y}, 0).value(); }

  BolzaSystem kappa_scaled(double factor) const {
    AtomSeries s = bumps_->series();
    for (auto& [k, atoms] : s.modes)
      for (auto& a : atoms) a.weight *= factor;
    return BolzaSystem(kappa_mean_ * factor, std::move(s), group_);
  }
  BolzaSystem with_kappa_mean(double mean) const { return BolzaSystem(mean, bumps_->series(), group_); }

 private:
  std::shared_ptr<const BolzaGroup> group_;
  double kappa_mean_ = 0.0;
  std::shared_ptr<const BumpEvaluator> bumps_;
};

template <class System>
double gaussian_curvature(const System& sys, double x, double y) {
  return sys.gaussian_curvature(x, y);
}

template <class System>
double magnetic_curvature(const System& sys, const PhasePoint& p) {
  return sys.local(p.x, p.y, 1).magnetic_curvature(p.theta);
}

/// Variant taking a chart tangent vector; the vector must be g-unit.
template <class System>
double magnetic_curvature(const System& sys, double x, double y, double vx, double vy, double tol = 1e-10) {
  const LocalGeometry g = sys.local(x, y, 1);
  const double speed = g.conformal_factor() * std::hypot(vx, vy);
  if (std::abs(speed - 1.0) > tol) {
    std::ostringstream os;
    os << "magnetic_curvature needs a unit vector, |v|_g = " << speed;
    throw std::invalid_argument(os.str());
  }
  return g.magnetic_curvature(std::atan2(vy, vx));
}

/// Result of negativity_bounds: either constants a, b > 0 with
/// -2b <= magnetic curvature <= -2a on the samples (widened by a Lipschitz
/// margin), or a refusal naming the worst sample.
struct NegativityBounds {
  bool certified = false;
  double a = 0.0;
  double b = 0.0;
  double sampled_min = 0.0;
  double sampled_max = 0.0;
  double margin = 0.0;
  PhasePoint witness;
  std::string reason;
};

namespace detail {

inline std::vector<cplx> sample_grid(const TorusSystem&, int resolution, double& spacing) {
  std::vector<cplx> pts;
  spacing = 2 * std::numbers::pi / resolution;
  for (int a = 0; a < resolution; ++a)
    for (int b = 0; b < resolution; ++b) pts.emplace_back(a * spacing, b * spacing);
  return pts;
}

inline std::vector<cplx> sample_grid(const BolzaSystem& sys, int resolution, double& spacing) {
  std::vector<cplx> pts;
  const double r = std::tanh(BolzaGroup::circumradius() / 2);
  spacing = 2 * r / resolution;
  for (int a = 0; a <= resolution; ++a)
    for (int b = 0; b <= resolution; ++b) {
      const cplx z(-r + a * spacing, -r + b * spacing);
      if (std::abs(z) < 1.0 && sys.group().contains(z, 1e-12)) pts.push_back(z);
    }
  return pts;
}

}  // namespace detail

inline constexpr int kMinNegativityResolution = 8;

template <class System>
NegativityBounds negativity_bounds(const System& sys, int resolution) {
  if (resolution < kMinNegativityResolution)
    throw std::invalid_argument("negativity_bounds resolution below the minimum grid");
  double h = 0.0;
  const auto pts = detail::sample_grid(sys, resolution, h);
  NegativityBounds nb;
  nb.sampled_min = std::numeric_limits<double>::infinity();
  nb.sampled_max = -std::numeric_limits<double>::infinity();
  double lipschitz = 0.0;
  for (const cplx z : pts) {
    const LocalGeometry g = sys.local(z.real(), z.imag(), 2);
    const double em = std::exp(-g.lambda.value());
    const double kx = g.kappa.derivative(1, 0), ky = g.kappa.derivative(0, 1);
    const double center = g.gaussian_curvature + g.kappa.value() * g.kappa.value();
    const double spread = em * std::hypot(kx, ky);
    // The extremes over the fiber are attained where (-sin, cos) is parallel to grad kappa.
    const double theta_max = std::atan2(-kx, ky) + std::numbers::pi;  // -X^perp kappa maximal
    if (center + spread > nb.sampled_max) {
      nb.sampled_max = center + spread;
      nb.witness = {z.real(), z.imag(), wrap_angle(theta_max)};
    }
    nb.sampled_min = std::min(nb.sampled_min, center - spread);
    // Chart-gradient bound of the fiberwise extremes.
    const double dk2x = 2 * g.kappa.value() * kx, dk2y = 2 * g.kappa.value() * ky;
    const double dex = -g.lambda.derivative(1, 0), dey = -g.lambda.derivative(0, 1);
    const double gx = em * std::hypot(dex * kx + g.kappa.derivative(2, 0), dex * ky + g.kappa.derivative(1, 1));
    const double gy = em * std::hypot(dey * kx + g.kappa.derivative(1, 1), dey * ky + g.kappa.derivative(0, 2));
    double dkx = 0.0, dky = 0.0;
    if constexpr (std::is_same_v<System, TorusSystem>) {
      const double eps = 1e-6;
      dkx = (sys.gaussian_curvature(z.real() + eps, z.imag()) - sys.gaussian_curvature(z.real() - eps, z.imag())) /
            (2 * eps);
      dky = (sys.gaussian_curvature(z.real(), z.imag() + eps) - sys.gaussian_curvature(z.real(), z.imag() - eps)) /
            (2 * eps);
    }
    lipschitz = std::max(lipschitz, std::hypot(dkx + dk2x, dky + dk2y) + std::hypot(gx, gy));
  }
  nb.margin = 2 * h * lipschitz;
  const double upper = nb.sampled_max + nb.margin;
  const double lower = nb.sampled_min - nb.margin;
  if (nb.sampled_max >= 0.0) {
    std::ostringstream os;
    os << "magnetic curvature " << nb.sampled_max << " >= 0 at (" << nb.witness.x << ", " << nb.witness.y
       << ", theta=" << nb.witness.theta << ")";
    nb.reason = os.str();
    return nb;
  }
  if (upper >= 0.0) {
    std::ostringstream os;
    os << "sampled maximum " << nb.sampled_max << " is within the Lipschitz margin " << nb.margin << " of zero";
    nb.reason = os.str();
    return nb;
  }
  nb.certified = true;
  nb.a = -upper / 2;
  nb.b = -lower / 2;
  return nb;
}

}  // namespace maglab
