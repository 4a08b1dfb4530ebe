#pragma once

// Functions on the 2pi-periodic square.
//
// TrigPoly is the sparse, user-facing form: f(x, y) = sum c_pq e^{i(px + qy)}.
// TrigField is the dense working form used by the pseudo-spectral torus
// backend: an n x n coefficient array holding modes |p|, |q| < n/2 (the
// Nyquist row and column are kept at zero).  Derivatives are exact in
// coefficient space; products go through a 3n/2 grid (dealiased), so the
// product of two fields whose bandwidths sum to less than n/2 is exact.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "maglab/jet.hpp"

namespace maglab {

using cplx = std::complex<double>;

struct TrigTerm {
  int p = 0;
  int q = 0;
  cplx coeff{};
};

/// Sparse trigonometric polynomial in (x, y).
class TrigPoly {
 public:
  TrigPoly() = default;
  explicit TrigPoly(std::vector<TrigTerm> terms) : terms_(std::move(terms)) { canonicalize(); }

  static TrigPoly constant(double c) { return TrigPoly({{0, 0, c}}); }
  /// a cos(px + qy)
  static TrigPoly cosine(double a, int p, int q) {
    if (p == 0 && q == 0) return constant(a);
    return TrigPoly({{p, q, a / 2}, {-p, -q, a / 2}});
  }
  /// a sin(px + qy)
  static TrigPoly sine(double a, int p, int q) {
    if (p == 0 && q == 0) return {};
    return TrigPoly({{p, q, cplx(0, -a / 2)}, {-p, -q, cplx(0, a / 2)}});
  }

  const std::vector<TrigTerm>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  int bandwidth() const {
    int b = 0;
    for (const auto& t : terms_) b = std::max({b, std::abs(t.p), std::abs(t.q)});
    return b;
  }

  /// Conjugate-symmetric coefficients (real-valued function).
  bool is_real(double tol = 1e-14) const {
    for (const auto& t : terms_) {
      if (std::abs(coeff(-t.p, -t.q) - std::conj(t.coeff)) > tol) return false;
    }
    return true;
  }

  cplx coeff(int p, int q) const {
    for (const auto& t : terms_)
      if (t.p == p && t.q == q) return t.coeff;
    return {};
  }

  TrigPoly operator+(const TrigPoly& o) const {
    auto t = terms_;
    t.insert(t.end(), o.terms_.begin(), o.terms_.end());
    return TrigPoly(std::move(t));
  }
  TrigPoly operator*(double s) const {
    auto t = terms_;
    for (auto& x : t) x.coeff *= s;
    return TrigPoly(std::move(t));
  }

  /// f(x + sx, y + sy)
  TrigPoly translated(double sx, double sy) const {
    auto t = terms_;
    for (auto& x : t) x.coeff *= std::exp(cplx(0, x.p * sx + x.q * sy));
    return TrigPoly(std::move(t));
  }

  TrigPoly derivative_x() const {
    auto t = terms_;
    for (auto& x : t) x.coeff *= cplx(0, x.p);
    return TrigPoly(std::move(t));
  }
  TrigPoly derivative_y() const {
    auto t = terms_;
    for (auto& x : t) x.coeff *= cplx(0, x.q);
    return TrigPoly(std::move(t));
  }

  cplx value(double x, double y) const {
    cplx s{};
    for (const auto& t : terms_) s += t.coeff * std::exp(cplx(0, t.p * x + t.q * y));
    return s;
  }

  /// Real-part Taylor jet at (x, y).
  RealJet jet(double x, double y, int order) const {
    RealJet r(order);
    for (const auto& t : terms_) {
      const cplx e = t.coeff * std::exp(cplx(0, t.p * x + t.q * y));
      // d^{i+j}/dx^i dy^j e^{i(px+qy)} = (ip)^i (iq)^j e^{...}
      for (int n = 0; n <= order; ++n) {
        for (int j = 0; j <= n; ++j) {
          const int i = n - j;
          const cplx d = e * std::pow(cplx(0, t.p), i) * std::pow(cplx(0, t.q), j);
          r.coeff(i, j) += d.real() / (fact(i) * fact(j));
        }
      }
    }
    return r;
  }

 private:
  static double fact(int n) { return n <= 1 ? 1.0 : n * fact(n - 1); }

  void canonicalize() {
    std::map<std::pair<int, int>, cplx> acc;
    for (const auto& t : terms_) acc[{t.p, t.q}] += t.coeff;
    terms_.clear();
    for (const auto& [pq, c] : acc)
      if (c != cplx{}) terms_.push_back({pq.first, pq.second, c});
  }

  std::vector<TrigTerm> terms_;
};

namespace detail {

// Cached FFTW plans on fftw_malloc'ed buffers; callers copy through them.
class FftCache {
 public:
  struct Plan {
    fftw_complex* buffer = nullptr;
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
  };

  static FftCache& instance() {
    static FftCache cache;
    return cache;
  }

  // The returned plan is only valid while the caller holds the lock.
  std::pair<std::unique_lock<std::mutex>, Plan*> get(int m) {
    std::unique_lock<std::mutex> lock(mutex_);
    auto it = plans_.find(m);
    if (it == plans_.end()) {
      Plan p;
      p.buffer = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * m * m));
      p.forward = fftw_plan_dft_2d(m, m, p.buffer, p.buffer, FFTW_FORWARD, FFTW_ESTIMATE);
      p.backward = fftw_plan_dft_2d(m, m, p.buffer, p.buffer, FFTW_BACKWARD, FFTW_ESTIMATE);
      it = plans_.emplace(m, p).first;
    }
    return {std::move(lock), &it->second};
  }

  ~FftCache() {
    for (auto& [m, p] : plans_) {
      fftw_destroy_plan(p.forward);
      fftw_destroy_plan(p.backward);
      fftw_free(p.buffer);
    }
  }

 private:
  std::mutex mutex_;
  std::map<int, Plan> plans_;
};

inline int wrap_index(int p, int m) { return ((p % m) + m) % m; }

}  // namespace detail

class TrigField {
 public:
  TrigField() = default;
  explicit TrigField(int n) : n_(n), c_(static_cast<std::size_t>(n) * n) {
    if (n < 4 || n % 2 != 0) throw std::invalid_argument("TrigField size must be even and >= 4");
  }

  static TrigField from_poly(const TrigPoly& f, int n) {
    TrigField r(n);
    for (const auto& t : f.terms()) {
      if (std::abs(t.p) >= n / 2 || std::abs(t.q) >= n / 2)
        throw std::invalid_argument("TrigPoly bandwidth exceeds field resolution");
      r.at(t.p, t.q) += t.coeff;
    }
    return r;
  }

  static TrigField constant(cplx c, int n) {
    TrigField r(n);
    r.at(0, 0) = c;
    return r;
  }

  /// Interpolate samples of a smooth function on the n x n grid.
  template <class Fn>
  static TrigField from_samples(Fn&& f, int n) {
    std::vector<cplx> grid(static_cast<std::size_t>(n) * n);
    const double h = 2 * std::numbers::pi / n;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) grid[a * n + b] = f(a * h, b * h);
    TrigField r(n);
    r.load_grid(grid, n);
    return r;
  }

  int size() const { return n_; }
  int max_mode() const { return n_ / 2 - 1; }

  cplx& at(int p, int q) { return c_[index(p, q)]; }
  const cplx& at(int p, int q) const { return c_[index(p, q)]; }

  TrigField& operator+=(const TrigField& o) {
    check_same(o);
    for (std::size_t k = 0; k < c_.size(); ++k) c_[k] += o.c_[k];
    return *this;
  }
  TrigField& operator-=(const TrigField& o) {
    check_same(o);
    for (std::size_t k = 0; k < c_.size(); ++k) c_[k] -= o.c_[k];
    return *this;
  }
  TrigField& operator*=(cplx s) {
    for (auto& x : c_) x *= s;
    return *this;
  }
  friend TrigField operator+(TrigField a, const TrigField& b) { return a += b; }
  friend TrigField operator-(TrigField a, const TrigField& b) { return a -= b; }
  friend TrigField operator*(TrigField a, cplx s) { return a *= s; }
  friend TrigField operator*(cplx s, TrigField a) { return a *= s; }

  TrigField dx() const { return spectral_multiply([](int p, int) { return cplx(0, p); }); }
  TrigField dy() const { return spectral_multiply([](int, int q) { return cplx(0, q); }); }
  /// (dx - i dy)/2
  TrigField d() const { return spectral_multiply([](int p, int q) { return cplx(q, p) * 0.5; }); }
  /// (dx + i dy)/2
  TrigField dbar() const { return spectral_multiply([](int p, int q) { return cplx(-q, p) * 0.5; }); }
  TrigField laplacian() const {
    return spectral_multiply([](int p, int q) { return cplx(-(p * p + q * q), 0); });
  }

  TrigField conj() const {
    TrigField r(n_);
    const int b = max_mode();
    for (int p = -b; p <= b; ++p)
      for (int q = -b; q <= b; ++q) r.at(p, q) = std::conj(at(-p, -q));
    return r;
  }

  /// Dealiased product on the 3n/2 grid, truncated back to n.
  friend TrigField operator*(const TrigField& a, const TrigField& b) {
    a.check_same(b);
    const int n = a.n_;
    const int m = 3 * n / 2 + (3 * n / 2) % 2;
    std::vector<cplx> ga = a.to_grid(m);
    const std::vector<cplx> gb = b.to_grid(m);
    for (std::size_t k = 0; k < ga.size(); ++k) ga[k] *= gb[k];
    TrigField r(n);
    r.load_grid(ga, m);
    return r;
  }

  /// Map every grid value through f (then re-interpolate).  Used for
  /// smooth nonlinear functions such as exp(-lambda).
  template <class Fn>
  TrigField map_values(Fn&& f) const {
    const int m = 2 * n_;
    std::vector<cplx> g = to_grid(m);
    for (auto& v : g) v = f(v);
    TrigField r(n_);
    r.load_grid(g, m);
    return r;
  }

  /// Integral over the square [0, 2pi)^2 of f * conj(g).
  static cplx parseval(const TrigField& f, const TrigField& g) {
    f.check_same(g);
    cplx s{};
    for (std::size_t k = 0; k < f.c_.size(); ++k) s += f.c_[k] * std::conj(g.c_[k]);
    return s * (4 * std::numbers::pi * std::numbers::pi);
  }

  cplx mean() const { return at(0, 0); }

  cplx value(double x, double y) const {
    cplx s{};
    const int b = max_mode();
    for (int p = -b; p <= b; ++p)
      for (int q = -b; q <= b; ++q) {
        const cplx c = at(p, q);
        if (c != cplx{}) s += c * std::exp(cplx(0, p * x + q * y));
      }
    return s;
  }

  double max_abs_coeff() const {
    double m = 0;
    for (const auto& x : c_) m = std::max(m, std::abs(x));
    return m;
  }

  /// Largest |p| or |q| with a coefficient above tol.
  int bandwidth(double tol = 0.0) const {
    int bw = 0;
    const int b = max_mode();
    for (int p = -b; p <= b; ++p)
      for (int q = -b; q <= b; ++q)
        if (std::abs(at(p, q)) > tol) bw = std::max({bw, std::abs(p), std::abs(q)});
    return bw;
  }

  /// Grid samples on an m x m grid (m >= n).
  std::vector<cplx> to_grid(int m) const {
    auto [lock, plan] = detail::FftCache::instance().get(m);
    auto* buf = reinterpret_cast<cplx*>(plan->buffer);
    std::fill(buf, buf + static_cast<std::size_t>(m) * m, cplx{});
    const int b = max_mode();
    for (int p = -b; p <= b; ++p)
      for (int q = -b; q <= b; ++q)
        buf[detail::wrap_index(p, m) * m + detail::wrap_index(q, m)] = at(p, q);
    fftw_execute(plan->backward);
    return std::vector<cplx>(buf, buf + static_cast<std::size_t>(m) * m);
  }

 private:
  std::size_t index(int p, int q) const {
    return static_cast<std::size_t>(detail::wrap_index(p, n_)) * n_ + detail::wrap_index(q, n_);
  }

  void check_same(const TrigField& o) const {
    if (n_ != o.n_) throw std::invalid_argument("TrigField resolution mismatch");
  }

  template <class Fn>
  TrigField spectral_multiply(Fn&& symbol) const {
    TrigField r(n_);
    const int b = max_mode();
    for (int p = -b; p <= b; ++p)
      for (int q = -b; q <= b; ++q) {
        const cplx c = at(p, q);
        if (c != cplx{}) r.at(p, q) = c * symbol(p, q);
      }
    return r;
  }

  void load_grid(const std::vector<cplx>& grid, int m) {
    auto [lock, plan] = detail::FftCache::instance().get(m);
    auto* buf = reinterpret_cast<cplx*>(plan->buffer);
    std::copy(grid.begin(), grid.end(), buf);
    fftw_execute(plan->forward);
    const double scale = 1.0 / (static_cast<double>(m) * m);
    std::fill(c_.begin(), c_.end(), cplx{});
    const int b = max_mode();
    for (int p = -b; p <= b; ++p)
      for (int q = -b; q <= b; ++q)
        at(p, q) = buf[detail::wrap_index(p, m) * m + detail::wrap_index(q, m)] * scale;
  }

  int n_ = 0;
  std::vector<cplx> c_;
};

}  // namespace maglab
