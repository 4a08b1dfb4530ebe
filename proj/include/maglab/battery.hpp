#pragma once

// Seeded random test functions and the standard test systems.  Everything is
// driven by std::mt19937_64 so a seed fixes the battery bit for bit.

#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "maglab/bolza_space.hpp"
#include "maglab/bump_atoms.hpp"
#include "maglab/torus_space.hpp"

namespace maglab {

struct BatteryOptions {
  int max_degree = 4;      // fiber degree bound
  int spatial_band = 2;    // torus: |p|, |q| bound of each mode
  int atoms_per_mode = 2;  // Bolza: bump atoms per fiber mode
  int bump_power = 6;
  double center_radius = 0.55;  // Bolza atom centers in |z| < this
  double min_radius = 0.45, max_radius = 0.8;
};

namespace detail {

// Uniform doubles from raw engine output; avoids the implementation-defined
// algorithms behind std::uniform_real_distribution so batteries match across
// standard libraries.
inline double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
inline double uniform(std::mt19937_64& rng, double a, double b) { return a + (b - a) * unit(rng); }
inline int uniform_int(std::mt19937_64& rng, int a, int b) {
  return a + static_cast<int>(rng() % static_cast<std::uint64_t>(b - a + 1));
}

}  // namespace detail

/// Per-member seed: distinct streams for each (seed, index).
inline std::uint64_t member_seed(std::uint64_t seed, int index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index)};
  std::uint32_t parts[2];
  seq.generate(parts, parts + 2);
  return (static_cast<std::uint64_t>(parts[0]) << 32) | parts[1];
}

/// Random trig-polynomial coefficients for fiber modes |k| <= degree.
inline std::map<int, TrigPoly> random_torus_modes(std::mt19937_64& rng, int degree, int band) {
  std::map<int, TrigPoly> modes;
  for (int k = -degree; k <= degree; ++k) {
    std::vector<TrigTerm> terms;
    for (int p = -band; p <= band; ++p)
      for (int q = -band; q <= band; ++q)
        terms.push_back({p, q, cplx(detail::uniform(rng, -1, 1), detail::uniform(rng, -1, 1))});
    modes.emplace(k, TrigPoly(std::move(terms)));
  }
  return modes;
}

inline TorusSpace::Function random_torus_function(const TorusSpace& s, std::uint64_t seed,
                                                  const BatteryOptions& opt = {}) {
  std::mt19937_64 rng(seed);
  const int degree = detail::uniform_int(rng, 0, opt.max_degree);
  return s.lift(random_torus_modes(rng, degree, opt.spatial_band));
}

inline BumpAtom random_atom(std::mt19937_64& rng, const BatteryOptions& opt) {
  BumpAtom a;
  const double r = opt.center_radius * std::sqrt(detail::unit(rng));
  const double phi = 2 * std::numbers::pi * detail::unit(rng);
  a.center = std::polar(r, phi);
  a.radius = detail::uniform(rng, opt.min_radius, opt.max_radius);
  a.power = opt.bump_power;
  a.weight = cplx(detail::uniform(rng, -1, 1), detail::uniform(rng, -1, 1));
  return a;
}

inline AtomSeries random_atom_series(std::mt19937_64& rng, int degree, const BatteryOptions& opt) {
  AtomSeries s;
  for (int k = -degree; k <= degree; ++k)
    for (int j = 0; j < opt.atoms_per_mode; ++j) s.modes[k].push_back(random_atom(rng, opt));
  return s;
}

inline AtomSeries random_bolza_series(std::uint64_t seed, const BatteryOptions& opt = {}) {
  std::mt19937_64 rng(seed);
  const int degree = detail::uniform_int(rng, 0, opt.max_degree);
  return random_atom_series(rng, degree, opt);
}

inline BolzaSpace::Function random_bolza_function(const BolzaSpace& s, std::uint64_t seed,
                                                  const BatteryOptions& opt = {}, int order = 2) {
  return s.sample(random_bolza_series(seed, opt), order);
}

// Standard systems.

/// Flat torus with the degree-2 magnetic field 0.3 cos x + 0.2 sin(x + 2y) + 0.1.
inline TorusSystem standard_flat_torus() {
  return TorusSystem({}, TrigPoly::cosine(0.3, 1, 0) + TrigPoly::sine(0.2, 1, 2) + TrigPoly::constant(0.1));
}

/// Conformal torus lambda = 0.1 cos x + 0.07 cos y with a small field.
inline TorusSystem standard_conformal_torus() {
  return TorusSystem(TrigPoly::cosine(0.1, 1, 0) + TrigPoly::cosine(0.07, 0, 1),
                     TrigPoly::cosine(0.2, 0, 1) + TrigPoly::constant(0.15));
}

/// Conformal torus lambda = 0.1 cos x + 0.07 cos y with the zero-mean field 0.05 sin y.
inline TorusSystem standard_pullback_torus() {
  return TorusSystem(TrigPoly::cosine(0.1, 1, 0) + TrigPoly::cosine(0.07, 0, 1), TrigPoly::sine(0.05, 0, 1));
}

/// Bolza surface with kappa = 0.5 + a small bump centered off the origin.
inline BolzaSystem standard_bolza_bump() {
  AtomSeries k;
  k.modes[0].push_back(BumpAtom{cplx(0.15, -0.1), 0.7, 6, 0.04});
  return BolzaSystem(0.5, k);
}

}  // namespace maglab
