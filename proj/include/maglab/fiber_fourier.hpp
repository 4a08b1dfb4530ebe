#pragma once

// Vertical Fourier bookkeeping: mode lists, projections, degree, and mode norms.

#include <cmath>
#include <map>
#include <ostream>
#include <utility>
#include <vector>

#include "maglab/frame_operators.hpp"

namespace maglab {

inline constexpr double kDegreeThreshold = 1e-12;

/// The mode list (k, u_k), each as a phase function supported at k.
template <class Space>
std::vector<std::pair<int, FunctionOf<Space>>> decompose(const Space&, const FunctionOf<Space>& u) {
  std::vector<std::pair<int, FunctionOf<Space>>> out;
  for (const auto& [k, f] : u.modes()) out.emplace_back(k, FunctionOf<Space>(k, f));
  return out;
}

template <class Space>
FunctionOf<Space> project(const Space&, const FunctionOf<Space>& u, int k) {
  if (!u.has_mode(k)) return {};
  return FunctionOf<Space>(k, u.mode(k));
}

struct ModeSpectrum {
  std::map<int, double> norms;  // k -> ||u_k||
  int degree = 0;
  double total_norm_sq = 0.0;  // ||u||^2 from the full pairing

  double sum_of_squares() const {
    double s = 0;
    for (const auto& [k, n] : norms) s += n * n;
    return s;
  }

  void write_csv(std::ostream& os) const {
    os << "k,norm\n";
    os.precision(17);
    for (const auto& [k, n] : norms) os << k << ',' << n << '\n';
  }
};

template <class Space>
ModeSpectrum mode_spectrum(const Space& s, const FunctionOf<Space>& u, double threshold = kDegreeThreshold) {
  ModeSpectrum sp;
  for (const auto& [k, f] : u.modes()) sp.norms[k] = std::sqrt(std::max(0.0, 2 * std::numbers::pi * s.pair(f, f).real()));
  sp.total_norm_sq = norm_sq(s, u);
  const double scale = std::sqrt(std::max(sp.total_norm_sq, 0.0));
  for (const auto& [k, n] : sp.norms)
    if (n > threshold * scale) sp.degree = std::max(sp.degree, std::abs(k));
  return sp;
}

/// Smallest N with ||u_k|| <= threshold * ||u|| for all |k| > N.
template <class Space>
int degree(const Space& s, const FunctionOf<Space>& u, double threshold = kDegreeThreshold) {
  return mode_spectrum(s, u, threshold).degree;
}

}  // namespace maglab
