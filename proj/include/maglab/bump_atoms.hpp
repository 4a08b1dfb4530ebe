#pragma once

// Gamma-equivariant bump functions on the unit tangent bundle of the Bolza
// surface.  A mode-k atom with center c, radius rho and weight w is the
// function
//
//   U(z, theta) = w e^{ik theta} sum_{B in Gamma} b(B z) (e^{i arg B'(z)})^k,
//   b(z) = (1 - s(z, c) / s0)^p   for s < s0, 0 otherwise,
//
// where s(z, c) = tanh^2(d(z, c) / 2) and s0 = tanh^2(rho / 2).  The sum is
// invariant under the deck action (z, theta) -> (A z, theta + arg A'(z)) and
// is finite because b has compact support.

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <stdexcept>
#include <vector>

#include "maglab/fuchsian.hpp"
#include "maglab/jet.hpp"

namespace maglab {

struct BumpAtom {
  cplx center{};
  double radius = 0.5;  // hyperbolic radius of the support
  int power = 3;        // profile exponent p; the bump is C^{p-1}
  cplx weight{1.0, 0.0};
};

/// Plain data: fiber mode k -> atoms carrying that mode.
struct AtomSeries {
  std::map<int, std::vector<BumpAtom>> modes;

  bool empty() const {
    for (const auto& [k, atoms] : modes)
      if (!atoms.empty()) return false;
    return true;
  }
  int degree() const {
    int d = 0;
    for (const auto& [k, atoms] : modes)
      if (!atoms.empty()) d = std::max(d, std::abs(k));
    return d;
  }
  /// Adds the conjugate atoms so the represented function is real-valued.
  AtomSeries realified() const {
    AtomSeries r;
    for (const auto& [k, atoms] : modes) {
      for (const auto& a : atoms) {
        if (k == 0) {
          BumpAtom re = a;
          re.weight = a.weight.real();
          r.modes[0].push_back(re);
        } else {
          BumpAtom half = a;
          half.weight = a.weight * 0.5;
          BumpAtom mirror = half;
          mirror.weight = std::conj(half.weight);
          r.modes[k].push_back(half);
          r.modes[-k].push_back(mirror);
        }
      }
    }
    return r;
  }
};

/// Evaluates an AtomSeries anywhere in the disk, with exact Taylor jets.
class BumpEvaluator {
 public:
  BumpEvaluator(std::shared_ptr<const BolzaGroup> group, AtomSeries series)
      : group_(std::move(group)), series_(std::move(series)) {
    if (!group_) throw std::invalid_argument("BumpEvaluator needs a group");
    double rho_max = 0.0;
    for (const auto& [k, atoms] : series_.modes)
      for (const auto& a : atoms) {
        if (!(a.radius > 0.0)) throw std::invalid_argument("bump radius must be positive");
        if (a.power < 1) throw std::invalid_argument("bump power must be >= 1");
        if (!group_->contains(a.center, 1e-9))
          throw std::invalid_argument("bump center must lie in the fundamental domain");
        rho_max = std::max(rho_max, a.radius);
      }
    if (series_.empty()) return;
    const double big_r = BolzaGroup::circumradius();
    const auto elements = group_->elements_within(2 * big_r + rho_max + 0.05);
    for (const auto& [k, atoms] : series_.modes) {
      auto& lists = candidates_[k];
      for (const auto& a : atoms) {
        std::vector<Mobius> cand;
        for (const auto& b : elements) {
          if (disk_distance(b.inverse()(a.center), 0.0) < big_r + a.radius + 1e-9) cand.push_back(b);
        }
        lists.push_back(std::move(cand));
      }
    }
  }

  const AtomSeries& series() const { return series_; }
  const BolzaGroup& group() const { return *group_; }

  /// Base coefficient of fiber mode k at the jet point z (anywhere in the disk).
  ComplexJet mode_jet(int k, const ComplexJet& z) const {
    ComplexJet out = ComplexJet::constant(0.0, z.order());
    auto it = series_.modes.find(k);
    if (it == series_.modes.end() || it->second.empty()) return out;
    const cplx z0 = z.value();
    if (group_->contains(z0, 1e-12)) return sum_in_domain(k, it->second, z);
    const Mobius a = group_->reduce(z0);
    const ComplexJet w = a(z);
    return sum_in_domain(k, it->second, w) * pow_int(a.unit_derivative(z), k);
  }

  cplx mode_value(int k, cplx z) const { return mode_jet(k, ComplexJet::constant(z, 0)).value(); }

  cplx value(cplx z, double theta) const {
    cplx s{};
    for (const auto& [k, atoms] : series_.modes) {
      if (atoms.empty()) continue;
      s += mode_value(k, z) * std::exp(cplx(0, k * theta));
    }
    return s;
  }

 private:
  ComplexJet sum_in_domain(int k, const std::vector<BumpAtom>& atoms, const ComplexJet& w) const {
    ComplexJet out = ComplexJet::constant(0.0, w.order());
    const auto& lists = candidates_.at(k);
    const cplx w0 = w.value();
    for (std::size_t n = 0; n < atoms.size(); ++n) {
      const BumpAtom& a = atoms[n];
      const double s0 = std::pow(std::tanh(a.radius / 2), 2);
      for (const auto& b : lists[n]) {
        const cplx bw0 = b(w0);
        if (disk_pseudo_distance(bw0, a.center) >= s0) continue;
        const ComplexJet bw = b(w);
        const ComplexJet s = disk_pseudo_distance(bw, a.center);
        ComplexJet prof = pow_int(1.0 - s * cplx(1.0 / s0), a.power);
        if (k != 0) prof *= pow_int(b.unit_derivative(w), k);
        out += prof * a.weight;
      }
    }
    return out;
  }

  std::shared_ptr<const BolzaGroup> group_;
  AtomSeries series_;
  std::map<int, std::vector<std::vector<Mobius>>> candidates_;
};

}  // namespace maglab
