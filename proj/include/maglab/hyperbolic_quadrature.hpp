#pragma once

// Quadrature over the regular octagon (the Bolza fundamental domain).
//
// The octagon is split into eight sectors, one per side.  A sector is swept
// by rays from the center to the side, which is parametrized by hyperbolic
// arclength s from its midpoint, |s| <= s_v.  Right-triangle trigonometry
// gives the ray angle tan(phi) = tanh(s) / sinh(r_in) and the ray length
// cosh D(s) = cosh(r_in) cosh(s).  With dA = sinh(d) dd dphi, each sector is
// covered by panels x panels tensor Gauss-Legendre cells in (s, d / D(s)).
// Using s rather than phi keeps the integrand free of nearby branch points.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "maglab/fuchsian.hpp"

namespace maglab {

struct GaussRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;  // sum to 2
};

/// Gauss-Legendre rule by the Golub-Welsch eigenvalue method.
inline GaussRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre needs n >= 1");
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    j(k, k - 1) = b;
    j(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  GaussRule r;
  for (int k = 0; k < n; ++k) {
    r.nodes.push_back(es.eigenvalues()(k));
    r.weights.push_back(2.0 * es.eigenvectors()(0, k) * es.eigenvectors()(0, k));
  }
  return r;
}

/// Base points in the Poincare chart, with optional area weights.
struct PointSet {
  std::vector<cplx> points;
  std::vector<double> weights;  // empty when the set is not a quadrature
  std::string label;

  std::size_t size() const { return points.size(); }
  bool is_quadrature() const { return !weights.empty(); }
};

inline std::shared_ptr<const PointSet> octagon_quadrature(int panels, int gauss_points = 6) {
  if (panels < 1) throw std::invalid_argument("octagon_quadrature needs panels >= 1");
  const GaussRule g = gauss_legendre(gauss_points);
  const double r_in = BolzaGroup::inradius();
  const double sh_in = std::sinh(r_in), ch_in = std::cosh(r_in);
  const double s_v = std::acosh(std::cosh(BolzaGroup::circumradius()) / ch_in);
  auto ps = std::make_shared<PointSet>();
  ps->label = "octagon:" + std::to_string(panels) + "x" + std::to_string(gauss_points);
  for (int sector = 0; sector < 8; ++sector) {
    const double phi_mid = sector * std::numbers::pi / 4;
    for (int pa = 0; pa < panels; ++pa) {
      const double a0 = -s_v + 2 * s_v * pa / panels;
      const double a1 = -s_v + 2 * s_v * (pa + 1) / panels;
      for (int ia = 0; ia < gauss_points; ++ia) {
        const double s = 0.5 * (a0 + a1) + 0.5 * (a1 - a0) * g.nodes[ia];
        const double th = std::tanh(s);
        const double sech2 = 1.0 - th * th;
        const double dphi = (sech2 / sh_in) / (1.0 + th * th / (sh_in * sh_in));
        const double wa = 0.5 * (a1 - a0) * g.weights[ia] * dphi;
        const double dmax = std::acosh(ch_in * std::cosh(s));
        const double phi = phi_mid + std::atan(th / sh_in);
        for (int pt = 0; pt < panels; ++pt) {
          const double t0 = static_cast<double>(pt) / panels;
          const double t1 = static_cast<double>(pt + 1) / panels;
          for (int it = 0; it < gauss_points; ++it) {
            const double t = 0.5 * (t0 + t1) + 0.5 * (t1 - t0) * g.nodes[it];
            const double wt = 0.5 * (t1 - t0) * g.weights[it];
            const double d = t * dmax;
            ps->points.push_back(std::polar(std::tanh(d / 2), phi));
            ps->weights.push_back(wa * wt * dmax * std::sinh(d));
          }
        }
      }
    }
  }
  return ps;
}

inline std::shared_ptr<const PointSet> explicit_points(std::vector<cplx> pts) {
  auto ps = std::make_shared<PointSet>();
  ps->points = std::move(pts);
  ps->label = "explicit:" + std::to_string(ps->points.size());
  return ps;
}

}  // namespace maglab
