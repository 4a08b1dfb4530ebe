#pragma once

// Truncated bivariate Taylor polynomials ("jets") in the chart variables
// (dx, dy).  A jet of order p stores the Taylor coefficients c_ij of
// f(x0 + dx, y0 + dy) for i + j <= p.  Differentiation lowers the order by
// one; products truncate at the smaller order of the two operands.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <type_traits>

namespace maglab {

inline constexpr int kMaxJetOrder = 3;

constexpr int jet_size(int order) { return (order + 1) * (order + 2) / 2; }

/// Position of the coefficient of dx^i dy^j (graded lexicographic).
constexpr int jet_index(int i, int j) {
  const int n = i + j;
  return n * (n + 1) / 2 + j;
}

inline constexpr int kJetCapacity = jet_size(kMaxJetOrder);

namespace detail {

struct JetExponents {
  std::array<int, kJetCapacity> i{};
  std::array<int, kJetCapacity> j{};
};

constexpr JetExponents make_jet_exponents() {
  JetExponents e{};
  for (int n = 0; n <= kMaxJetOrder; ++n) {
    for (int j = 0; j <= n; ++j) {
      e.i[jet_index(n - j, j)] = n - j;
      e.j[jet_index(n - j, j)] = j;
    }
  }
  return e;
}

inline constexpr JetExponents kJetExponents = make_jet_exponents();

template <class T>
struct is_complex : std::false_type {};
template <class T>
struct is_complex<std::complex<T>> : std::true_type {};

}  // namespace detail

template <class T>
class Jet {
 public:
  using value_type = T;

  Jet() = default;
  explicit Jet(int order) : order_(order) { check_order(order); }

  static Jet constant(T value, int order) {
    Jet r(order);
    r.c_[0] = value;
    return r;
  }

  /// The coordinate function x (or y) expanded about x0 (or y0).
  static Jet coordinate_x(double x0, int order) {
    Jet r = constant(T(x0), order);
    if (order >= 1) r.c_[jet_index(1, 0)] = T(1);
    return r;
  }
  static Jet coordinate_y(double y0, int order) {
    Jet r = constant(T(y0), order);
    if (order >= 1) r.c_[jet_index(0, 1)] = T(1);
    return r;
  }

  int order() const { return order_; }
  int size() const { return jet_size(order_); }

  T value() const { return c_[0]; }
  T& coeff(int i, int j) { return c_[jet_index(i, j)]; }
  const T& coeff(int i, int j) const { return c_[jet_index(i, j)]; }
  T& operator[](int idx) { return c_[idx]; }
  const T& operator[](int idx) const { return c_[idx]; }

  /// Partial derivative d^{i+j} f / dx^i dy^j at the expansion point.
  T derivative(int i, int j) const {
    if (i + j > order_) throw std::out_of_range("Jet::derivative beyond order");
    return c_[jet_index(i, j)] * T(factorial(i) * factorial(j));
  }

  Jet dx() const {
    if (order_ == 0) throw std::logic_error("Jet::dx on an order-0 jet");
    Jet r(order_ - 1);
    for (int k = 0; k < r.size(); ++k) {
      const int i = detail::kJetExponents.i[k];
      const int j = detail::kJetExponents.j[k];
      r.c_[k] = T(i + 1) * c_[jet_index(i + 1, j)];
    }
    return r;
  }

  Jet dy() const {
    if (order_ == 0) throw std::logic_error("Jet::dy on an order-0 jet");
    Jet r(order_ - 1);
    for (int k = 0; k < r.size(); ++k) {
      const int i = detail::kJetExponents.i[k];
      const int j = detail::kJetExponents.j[k];
      r.c_[k] = T(j + 1) * c_[jet_index(i, j + 1)];
    }
    return r;
  }

  /// Drop coefficients above `order`.
  Jet truncated(int order) const {
    Jet r(std::min(order, order_));
    for (int k = 0; k < r.size(); ++k) r.c_[k] = c_[k];
    return r;
  }

  Jet& operator+=(const Jet& o) {
    order_ = std::min(order_, o.order_);
    for (int k = 0; k < size(); ++k) c_[k] += o.c_[k];
    clear_tail();
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    order_ = std::min(order_, o.order_);
    for (int k = 0; k < size(); ++k) c_[k] -= o.c_[k];
    clear_tail();
    return *this;
  }
  Jet& operator*=(T s) {
    for (int k = 0; k < size(); ++k) c_[k] *= s;
    return *this;
  }
  Jet& operator+=(T s) {
    c_[0] += s;
    return *this;
  }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator-(Jet a) { return a *= T(-1); }
  friend Jet operator*(Jet a, T s) { return a *= s; }
  friend Jet operator*(T s, Jet a) { return a *= s; }
  friend Jet operator+(Jet a, T s) { return a += s; }
  friend Jet operator+(T s, Jet a) { return a += s; }
  friend Jet operator-(Jet a, T s) { return a += -s; }
  friend Jet operator-(T s, Jet a) { return (-a) += s; }

  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet r(std::min(a.order_, b.order_));
    const int n = r.size();
    for (int ka = 0; ka < n; ++ka) {
      if (a.c_[ka] == T(0)) continue;
      const int ia = detail::kJetExponents.i[ka];
      const int ja = detail::kJetExponents.j[ka];
      for (int kb = 0; kb < n; ++kb) {
        const int ib = detail::kJetExponents.i[kb];
        const int jb = detail::kJetExponents.j[kb];
        if (ia + ja + ib + jb > r.order_) continue;
        r.c_[jet_index(ia + ib, ja + jb)] += a.c_[ka] * b.c_[kb];
      }
    }
    return r;
  }

  Jet& operator*=(const Jet& o) { return *this = *this * o; }

  /// g(f) given the Taylor coefficients t_n = g^{(n)}(f0) / n!, n <= order.
  Jet compose(const std::array<T, kMaxJetOrder + 1>& taylor) const {
    Jet delta = *this;
    delta.c_[0] = T(0);
    Jet r = constant(taylor[order_], order_);
    for (int n = order_ - 1; n >= 0; --n) {
      r = r * delta;
      r.c_[0] += taylor[n];
    }
    return r;
  }

  friend Jet reciprocal(const Jet& f) {
    const T v = f.value();
    if (v == T(0)) throw std::domain_error("Jet reciprocal of zero");
    std::array<T, kMaxJetOrder + 1> t{};
    T p = T(1) / v;
    for (int n = 0; n <= kMaxJetOrder; ++n) {
      t[n] = (n % 2 == 0 ? p : -p);
      p /= v;
    }
    return f.compose(t);
  }

  friend Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }

  friend Jet pow_int(const Jet& f, int k) {
    if (k < 0) return pow_int(reciprocal(f), -k);
    Jet r = constant(T(1), f.order_);
    Jet base = f;
    while (k > 0) {
      if (k & 1) r = r * base;
      k >>= 1;
      if (k > 0) base = base * base;
    }
    return r;
  }

  friend Jet conj(const Jet& f) {
    Jet r = f;
    if constexpr (detail::is_complex<T>::value) {
      for (int k = 0; k < r.size(); ++k) r.c_[k] = std::conj(r.c_[k]);
    }
    return r;
  }

 private:
  static void check_order(int order) {
    if (order < 0 || order > kMaxJetOrder) throw std::out_of_range("Jet order out of range");
  }
  static double factorial(int n) {
    double f = 1.0;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
  }
  void clear_tail() {
    for (int k = size(); k < kJetCapacity; ++k) c_[k] = T(0);
  }

  int order_ = 0;
  std::array<T, kJetCapacity> c_{};
};

using RealJet = Jet<double>;
using ComplexJet = Jet<std::complex<double>>;

inline RealJet exp(const RealJet& f) {
  const double e = std::exp(f.value());
  std::array<double, kMaxJetOrder + 1> t{};
  double fact = 1.0;
  for (int n = 0; n <= kMaxJetOrder; ++n) {
    if (n > 0) fact *= n;
    t[n] = e / fact;
  }
  return f.compose(t);
}

inline RealJet log(const RealJet& f) {
  const double v = f.value();
  if (!(v > 0.0)) throw std::domain_error("Jet log of non-positive value");
  std::array<double, kMaxJetOrder + 1> t{};
  t[0] = std::log(v);
  double p = 1.0;
  for (int n = 1; n <= kMaxJetOrder; ++n) {
    p /= v;
    t[n] = (n % 2 == 1 ? p : -p) / n;
  }
  return f.compose(t);
}

inline RealJet sqrt(const RealJet& f) {
  const double v = f.value();
  if (!(v > 0.0)) throw std::domain_error("Jet sqrt of non-positive value");
  // Binomial series of (v + d)^{1/2}.
  std::array<double, kMaxJetOrder + 1> t{};
  double binom = 1.0;
  for (int n = 0; n <= kMaxJetOrder; ++n) {
    t[n] = binom * std::pow(v, 0.5 - n);
    binom *= (0.5 - n) / (n + 1);
  }
  return f.compose(t);
}

inline RealJet real_part(const ComplexJet& f) {
  RealJet r(f.order());
  for (int k = 0; k < f.size(); ++k) r[k] = f[k].real();
  return r;
}

inline RealJet imag_part(const ComplexJet& f) {
  RealJet r(f.order());
  for (int k = 0; k < f.size(); ++k) r[k] = f[k].imag();
  return r;
}

inline ComplexJet to_complex(const RealJet& f) {
  ComplexJet r(f.order());
  for (int k = 0; k < f.size(); ++k) r[k] = f[k];
  return r;
}

/// The complex coordinate z = x + iy expanded about z0.
inline ComplexJet coordinate_z(std::complex<double> z0, int order) {
  ComplexJet r = ComplexJet::constant(z0, order);
  if (order >= 1) {
    r.coeff(1, 0) = 1.0;
    r.coeff(0, 1) = std::complex<double>(0.0, 1.0);
  }
  return r;
}

/// Wirtinger derivatives d = (dx - i dy)/2 and dbar = (dx + i dy)/2.
inline ComplexJet wirtinger_d(const ComplexJet& f) {
  const std::complex<double> i(0.0, 1.0);
  return (f.dx() - f.dy() * i) * std::complex<double>(0.5);
}

inline ComplexJet wirtinger_dbar(const ComplexJet& f) {
  const std::complex<double> i(0.0, 1.0);
  return (f.dx() + f.dy() * i) * std::complex<double>(0.5);
}

}  // namespace maglab
