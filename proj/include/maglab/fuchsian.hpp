#pragma once

// Isometries of the Poincare disk and the genus-2 Bolza surface group.
//
// Elements are stored as SU(1,1) matrices [[a, b], [conj(b), conj(a)]]
// acting by z -> (a z + b) / (conj(b) z + conj(a)).  The side pairings of
// the regular octagon are the translations of length
// 2 arccosh(1 + sqrt 2) along the directions k pi / 4, k = 0..7, so the
// pairing for direction k + 4 is the inverse of the pairing for k.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "maglab/jet.hpp"

namespace maglab {

using cplx = std::complex<double>;

struct Mobius {
  cplx a{1.0, 0.0};
  cplx b{};
  cplx c{};
  cplx d{1.0, 0.0};

  static Mobius identity() { return {}; }
  static Mobius rotation(double phi) {
    return {std::exp(cplx(0, phi / 2)), {}, {}, std::exp(cplx(0, -phi / 2))};
  }
  /// Hyperbolic translation of length `length` along the diameter at angle phi.
  static Mobius translation(double length, double phi) {
    const double ch = std::cosh(length / 2), sh = std::sinh(length / 2);
    const cplx u = std::exp(cplx(0, phi));
    return {ch, sh * u, sh * std::conj(u), ch};
  }

  Mobius operator*(const Mobius& o) const {
    return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
  }
  Mobius inverse() const {
    const cplx det = a * d - b * c;
    return {d / det, -b / det, -c / det, a / det};
  }

  cplx operator()(cplx z) const { return (a * z + b) / (c * z + d); }
  ComplexJet operator()(const ComplexJet& z) const { return (z * a + b) / (z * c + d); }

  /// Derivative of the map (det = 1).
  cplx derivative(cplx z) const {
    const cplx w = c * z + d;
    return (a * d - b * c) / (w * w);
  }
  /// exp(i arg A'(z)) = conj(w)/w for w = c z + d (SU(1,1), det = 1).
  cplx unit_derivative(cplx z) const {
    const cplx w = c * z + d;
    return std::conj(w) / w;
  }
  ComplexJet unit_derivative(const ComplexJet& z) const {
    const ComplexJet w = z * c + d;
    return conj(w) / w;
  }

  double trace() const { return (a + d).real(); }
  double determinant_error() const { return std::abs(a * d - b * c - 1.0); }
};

/// Hyperbolic distance in the Poincare disk.
inline double disk_distance(cplx z, cplx w) {
  const double r = std::abs(z - w) / std::abs(1.0 - std::conj(w) * z);
  return 2.0 * std::atanh(std::min(r, 1.0 - 1e-16));
}

/// tanh^2(d/2) for d the hyperbolic distance; smooth in z.
inline double disk_pseudo_distance(cplx z, cplx w) {
  return std::norm(z - w) / std::norm(1.0 - std::conj(w) * z);
}

inline ComplexJet disk_pseudo_distance(const ComplexJet& z, cplx w) {
  const ComplexJet num = z - w;
  const ComplexJet den = 1.0 - z * std::conj(w);
  return (num * conj(num)) / (den * conj(den));
}

/// A reduced word in the eight side pairings; letters are indices 0..7
/// (printed g1..g8).  Letter k + 4 (mod 8) is the inverse of letter k.
class GroupWord {
 public:
  GroupWord() = default;
  explicit GroupWord(std::vector<int> letters) : letters_(std::move(letters)) { normalize(); }

  /// Parses "g1g2", "g3^-1 g5", "g1.g7".  Whitespace and '.' separate letters.
  static GroupWord parse(const std::string& text) {
    std::vector<int> letters;
    std::size_t i = 0;
    auto skip = [&] {
      while (i < text.size() && (std::isspace(static_cast<unsigned char>(text[i])) || text[i] == '.' ||
                                 text[i] == '*'))
        ++i;
    };
    skip();
    while (i < text.size()) {
      if (text[i] != 'g') throw std::invalid_argument("bad group word: " + text);
      ++i;
      std::size_t start = i;
      while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
      if (start == i) throw std::invalid_argument("bad group word: " + text);
      const int idx = std::stoi(text.substr(start, i - start));
      if (idx < 1 || idx > 8) throw std::invalid_argument("generator index out of range: " + text);
      int letter = idx - 1;
      if (text.compare(i, 3, "^-1") == 0) {
        letter = (letter + 4) % 8;
        i += 3;
      }
      letters.push_back(letter);
      skip();
    }
    return GroupWord(std::move(letters));
  }

  const std::vector<int>& letters() const { return letters_; }
  bool empty() const { return letters_.empty(); }

  std::string key() const {
    std::string s;
    for (int l : letters_) s += "g" + std::to_string(l + 1);
    return s.empty() ? "e" : s;
  }

  GroupWord inverse() const {
    std::vector<int> inv(letters_.rbegin(), letters_.rend());
    for (auto& l : inv) l = (l + 4) % 8;
    return GroupWord(std::move(inv));
  }

  bool operator<(const GroupWord& o) const { return letters_ < o.letters_; }
  bool operator==(const GroupWord& o) const { return letters_ == o.letters_; }

 private:
  // Free reduction, cyclic reduction, then the lexicographically smallest
  // rotation (a stable key for the conjugacy class in the free group).
  void normalize() {
    std::vector<int> st;
    for (int l : letters_) {
      if (!st.empty() && (st.back() + 4) % 8 == l)
        st.pop_back();
      else
        st.push_back(l);
    }
    std::size_t lo = 0, hi = st.size();
    while (hi - lo >= 2 && (st[lo] + 4) % 8 == st[hi - 1]) {
      ++lo;
      --hi;
    }
    std::vector<int> w(st.begin() + lo, st.begin() + hi);
    std::vector<int> best = w;
    for (std::size_t r = 1; r < w.size(); ++r) {
      std::vector<int> rot(w.begin() + r, w.end());
      rot.insert(rot.end(), w.begin(), w.begin() + r);
      best = std::min(best, rot);
    }
    letters_ = std::move(best);
  }

  std::vector<int> letters_;
};

/// The Bolza surface group and its regular-octagon fundamental domain.
class BolzaGroup {
 public:
  BolzaGroup() {
    for (int k = 0; k < 8; ++k) generators_[k] = Mobius::translation(translation_length(), k * kPi / 4);
  }

  static constexpr double kPi = std::numbers::pi;

  /// Translation length of each side pairing, 2 arccosh(1 + sqrt 2).
  static double translation_length() { return 2.0 * std::acosh(1.0 + std::numbers::sqrt2); }
  /// Hyperbolic distance from the center to a side midpoint.
  static double inradius() { return translation_length() / 2; }
  /// Hyperbolic distance from the center to a vertex, arccosh(3 + 2 sqrt 2).
  static double circumradius() { return std::acosh(3.0 + 2.0 * std::numbers::sqrt2); }
  static double area() { return 4.0 * kPi; }

  const std::array<Mobius, 8>& generators() const { return generators_; }
  const Mobius& generator(int k) const { return generators_.at(k); }

  Mobius element(const GroupWord& w) const {
    Mobius m;
    for (int l : w.letters()) m = m * generators_[l];
    return m;
  }

  /// Letters of the surface relation: g_{3j mod 8}, j = 0..7.
  static std::array<int, 8> relation_letters() { return {0, 3, 6, 1, 4, 7, 2, 5}; }

  Mobius relation_product() const {
    Mobius m;
    for (int l : relation_letters()) m = m * generators_[l];
    return m;
  }

  std::array<cplx, 8> vertices() const {
    std::array<cplx, 8> v{};
    const double r = std::tanh(circumradius() / 2);
    for (int k = 0; k < 8; ++k) v[k] = std::polar(r, kPi / 8 + k * kPi / 4);
    return v;
  }

  /// Largest violation of the octagon's side half-planes (<= 0 inside),
  /// measured in Klein coordinates.
  double outside_measure(cplx z) const {
    const cplx k = 2.0 * z / (1.0 + std::norm(z));
    const double t = std::tanh(inradius());
    double worst = -1e300;
    for (int j = 0; j < 8; ++j) {
      const double proj = k.real() * std::cos(j * kPi / 4) + k.imag() * std::sin(j * kPi / 4);
      worst = std::max(worst, proj - t);
    }
    return worst;
  }

  bool contains(cplx z, double tol = 1e-12) const { return outside_measure(z) <= tol; }

  /// Returns A with A(z) in the fundamental domain.
  Mobius reduce(cplx z) const {
    if (!(std::abs(z) < 1.0)) throw std::domain_error("point outside the Poincare disk");
    Mobius acc;
    cplx w = z;
    for (int iter = 0; iter < 200; ++iter) {
      const cplx k = 2.0 * w / (1.0 + std::norm(w));
      const double t = std::tanh(inradius());
      int worst = -1;
      double excess = 1e-13;
      for (int j = 0; j < 8; ++j) {
        const double proj = k.real() * std::cos(j * kPi / 4) + k.imag() * std::sin(j * kPi / 4) - t;
        if (proj > excess) {
          excess = proj;
          worst = j;
        }
      }
      if (worst < 0) return acc;
      const Mobius step = generators_[(worst + 4) % 8];
      acc = step * acc;
      w = step(w);
    }
    throw std::runtime_error("fundamental-domain reduction did not terminate");
  }

  /// All group elements g with d(g(0), 0) < radius, in a deterministic order.
  std::vector<Mobius> elements_within(double radius) const {
    auto key = [](const Mobius& m) {
      const double s = (m.a.real() < 0 || (m.a.real() == 0 && m.a.imag() < 0)) ? -1.0 : 1.0;
      auto r = [](double x) { return std::llround(x * 1e6); };
      return std::make_tuple(r(s * m.a.real()), r(s * m.a.imag()), r(s * m.b.real()), r(s * m.b.imag()));
    };
    const double prune = radius + circumradius() + 1.0;
    std::map<std::tuple<long long, long long, long long, long long>, Mobius> seen;
    std::vector<Mobius> frontier{Mobius::identity()};
    seen.emplace(key(frontier[0]), frontier[0]);
    while (!frontier.empty()) {
      std::vector<Mobius> next;
      for (const auto& m : frontier) {
        for (const auto& g : generators_) {
          const Mobius h = m * g;
          if (disk_distance(h(0.0), 0.0) > prune) continue;
          if (seen.emplace(key(h), h).second) next.push_back(h);
        }
      }
      frontier = std::move(next);
    }
    std::vector<std::pair<double, Mobius>> out;
    for (const auto& [k, m] : seen) {
      const double d = disk_distance(m(0.0), 0.0);
      if (d < radius) out.emplace_back(d, m);
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    std::vector<Mobius> res;
    res.reserve(out.size());
    for (auto& p : out) res.push_back(p.second);
    return res;
  }

 private:
  std::array<Mobius, 8> generators_;
};

/// Boundary fixed points (repelling, attracting) of a hyperbolic element.
inline std::pair<cplx, cplx> fixed_points(const Mobius& m) {
  // c z^2 + (d - a) z - b = 0
  const cplx qa = m.c, qb = m.d - m.a, qc = -m.b;
  if (std::abs(qa) < 1e-300) throw std::domain_error("element fixes the origin");
  const cplx disc = std::sqrt(qb * qb - 4.0 * qa * qc);
  cplx z1 = (-qb + disc) / (2.0 * qa);
  cplx z2 = (-qb - disc) / (2.0 * qa);
  // Attracting fixed point has |A'(z)| < 1.
  if (std::abs(m.derivative(z1)) < std::abs(m.derivative(z2))) return {z2, z1};
  return {z1, z2};
}

}  // namespace maglab
