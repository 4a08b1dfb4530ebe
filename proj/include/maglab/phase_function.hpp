#pragma once

// Functions on the unit tangent bundle, stored by fiber Fourier mode:
// u(x, theta) = sum_k u_k(x) e^{ik theta}.  The base coefficient type is a
// template parameter (TrigField on the torus, JetField on the Bolza surface).

#include <algorithm>
#include <complex>
#include <cstdlib>
#include <map>
#include <memory>
#include <stdexcept>
#include <vector>

#include "maglab/hyperbolic_quadrature.hpp"
#include "maglab/jet.hpp"

namespace maglab {

template <class Field>
class PhaseFunction {
 public:
  using field_type = Field;

  PhaseFunction() = default;
  PhaseFunction(int k, Field f) { modes_.emplace(k, std::move(f)); }

  const std::map<int, Field>& modes() const { return modes_; }
  bool empty() const { return modes_.empty(); }
  bool has_mode(int k) const { return modes_.count(k) != 0; }
  const Field& mode(int k) const { return modes_.at(k); }

  /// Adds f to mode k.
  void add(int k, const Field& f) {
    auto it = modes_.find(k);
    if (it == modes_.end())
      modes_.emplace(k, f);
    else
      it->second += f;
  }

  /// Largest |k| among stored modes (structural, may include zero fields).
  int stored_degree() const {
    int d = 0;
    for (const auto& [k, f] : modes_) d = std::max(d, std::abs(k));
    return d;
  }

  PhaseFunction& operator+=(const PhaseFunction& o) {
    for (const auto& [k, f] : o.modes_) add(k, f);
    return *this;
  }
  PhaseFunction& operator-=(const PhaseFunction& o) {
    for (const auto& [k, f] : o.modes_) add(k, f * cplx(-1.0));
    return *this;
  }
  PhaseFunction& operator*=(cplx s) {
    for (auto& [k, f] : modes_) f *= s;
    return *this;
  }
  friend PhaseFunction operator+(PhaseFunction a, const PhaseFunction& b) { return a += b; }
  friend PhaseFunction operator-(PhaseFunction a, const PhaseFunction& b) { return a -= b; }
  friend PhaseFunction operator*(PhaseFunction a, cplx s) { return a *= s; }
  friend PhaseFunction operator*(cplx s, PhaseFunction a) { return a *= s; }

 private:
  std::map<int, Field> modes_;
};

namespace detail {
inline ComplexJet conj_jet(const ComplexJet& j) { return conj(j); }
}  // namespace detail

/// Complex Taylor jets sampled on a shared point set.  Sums and products
/// keep the smaller order; derivatives lower the order by one.
class JetField {
 public:
  JetField() = default;
  JetField(std::shared_ptr<const PointSet> points, int order)
      : points_(std::move(points)), jets_(points_->size(), ComplexJet::constant(0.0, order)), order_(order) {}

  const std::shared_ptr<const PointSet>& points() const { return points_; }
  std::size_t size() const { return jets_.size(); }
  int order() const { return order_; }

  ComplexJet& operator[](std::size_t i) { return jets_[i]; }
  const ComplexJet& operator[](std::size_t i) const { return jets_[i]; }
  cplx value(std::size_t i) const { return jets_[i].value(); }

  JetField& operator+=(const JetField& o) {
    check_same(o);
    for (std::size_t i = 0; i < jets_.size(); ++i) jets_[i] += o.jets_[i];
    order_ = std::min(order_, o.order_);
    return *this;
  }
  JetField& operator-=(const JetField& o) {
    check_same(o);
    for (std::size_t i = 0; i < jets_.size(); ++i) jets_[i] -= o.jets_[i];
    order_ = std::min(order_, o.order_);
    return *this;
  }
  JetField& operator*=(cplx s) {
    for (auto& j : jets_) j *= s;
    return *this;
  }
  friend JetField operator+(JetField a, const JetField& b) { return a += b; }
  friend JetField operator-(JetField a, const JetField& b) { return a -= b; }
  friend JetField operator*(JetField a, cplx s) { return a *= s; }
  friend JetField operator*(cplx s, JetField a) { return a *= s; }

  friend JetField operator*(const JetField& a, const JetField& b) {
    a.check_same(b);
    JetField r(a.points_, std::min(a.order_, b.order_));
    for (std::size_t i = 0; i < r.jets_.size(); ++i) r.jets_[i] = a.jets_[i] * b.jets_[i];
    return r;
  }

  JetField d() const { return lowered([](const ComplexJet& j) { return wirtinger_d(j); }); }
  JetField dbar() const { return lowered([](const ComplexJet& j) { return wirtinger_dbar(j); }); }

  JetField conj() const {
    JetField r = *this;
    for (auto& j : r.jets_) j = detail::conj_jet(j);
    return r;
  }

 private:
  template <class Fn>
  JetField lowered(Fn&& fn) const {
    if (order_ < 1) throw std::logic_error("derivative of an order-0 jet field");
    JetField r(points_, order_ - 1);
    for (std::size_t i = 0; i < jets_.size(); ++i) r.jets_[i] = fn(jets_[i]);
    return r;
  }

  void check_same(const JetField& o) const {
    if (points_ != o.points_) throw std::invalid_argument("jet fields live on different point sets");
  }

  std::shared_ptr<const PointSet> points_;
  std::vector<ComplexJet> jets_;
  int order_ = 0;
};

}  // namespace maglab
