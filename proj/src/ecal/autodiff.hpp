// SPDX-License-Identifier: Apache-2.0
//
// Forward-mode dual numbers with a runtime derivative dimension.
//
// A Dual carries a value and up to N partial derivatives. The active length
// (dim) is fixed when the variable is seeded; constants built from plain
// numbers have dim 0 and combine with a Dual of any dim. Combining two Duals
// with different non-zero dims is an error. Storage past dim is always zero.
//
// The value type may itself be a Dual, which gives nested (second-order)
// derivatives, e.g. Dual<Dual<double, 16>, 6>.

#pragma once

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "ecal/errors.hpp"

namespace ecal {

inline constexpr int kMaxSeedDim = 16;

template <class T, int N>
class Dual;

template <class T>
struct is_dual : std::false_type {};
template <class T, int N>
struct is_dual<Dual<T, N>> : std::true_type {};
template <class T>
inline constexpr bool is_dual_v = is_dual<T>::value;

/// Innermost real value of a (possibly nested) dual.
inline double value_of(double x) { return x; }
template <class T, int N>
double value_of(const Dual<T, N>& x) {
  return value_of(x.value());
}

namespace detail {
inline int merge_dims(int a, int b) {
  if (a == b || b == 0) return a;
  if (a == 0) return b;
  throw DimensionError("dual derivative dimensions differ: " +
                       std::to_string(a) + " vs " + std::to_string(b));
}
}  // namespace detail

template <class T, int N>
class Dual {
 public:
  using value_type = T;
  static constexpr int capacity = N;

  Dual() = default;
  Dual(double v) : val_(v) {}  // NOLINT(google-explicit-constructor)
  template <class U = T>
    requires(!std::is_same_v<U, double>)
  Dual(const T& v) : val_(v) {}  // NOLINT(google-explicit-constructor)

  /// Unseeded variable with an all-zero derivative array of length dim.
  Dual(const T& v, int dim) : val_(v) { set_dim(dim); }

  const T& value() const { return val_; }
  T& value() { return val_; }
  int dim() const { return dim_; }

  const T& d(int i) const { return d_[static_cast<std::size_t>(i)]; }
  T& d(int i) { return d_[static_cast<std::size_t>(i)]; }

  std::span<const T> derivs() const {
    return {d_.data(), static_cast<std::size_t>(dim_)};
  }

  void set_dim(int dim) {
    if (dim < 0 || dim > N)
      throw DimensionError("dual dimension " + std::to_string(dim) +
                           " outside [0, " + std::to_string(N) + "]");
    if (dim < dim_)
      for (int i = dim; i < dim_; ++i) d_[i] = T(0.0);
    dim_ = dim;
  }

  /// Drops the derivative part (value kept, dim reset to 0).
  void unseed() { set_dim(0); }

  Dual& operator+=(const Dual& o) {
    const int n = detail::merge_dims(dim_, o.dim_);
    val_ += o.val_;
    for (int i = 0; i < o.dim_; ++i) d_[i] += o.d_[i];
    dim_ = n;
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    const int n = detail::merge_dims(dim_, o.dim_);
    val_ -= o.val_;
    for (int i = 0; i < o.dim_; ++i) d_[i] -= o.d_[i];
    dim_ = n;
    return *this;
  }
  Dual& operator*=(const Dual& o) {
    *this = *this * o;
    return *this;
  }
  Dual& operator/=(const Dual& o) {
    *this = *this / o;
    return *this;
  }
  Dual& operator*=(double s) {
    val_ *= s;
    for (int i = 0; i < dim_; ++i) d_[i] *= s;
    return *this;
  }

  friend Dual operator-(const Dual& a) {
    Dual r(-a.val_);
    r.dim_ = a.dim_;
    for (int i = 0; i < a.dim_; ++i) r.d_[i] = -a.d_[i];
    return r;
  }

  friend Dual operator+(const Dual& a, const Dual& b) {
    Dual r(a.val_ + b.val_);
    r.dim_ = detail::merge_dims(a.dim_, b.dim_);
    for (int i = 0; i < r.dim_; ++i) r.d_[i] = a.d_[i] + b.d_[i];
    return r;
  }
  friend Dual operator-(const Dual& a, const Dual& b) {
    Dual r(a.val_ - b.val_);
    r.dim_ = detail::merge_dims(a.dim_, b.dim_);
    for (int i = 0; i < r.dim_; ++i) r.d_[i] = a.d_[i] - b.d_[i];
    return r;
  }
  friend Dual operator*(const Dual& a, const Dual& b) {
    Dual r(a.val_ * b.val_);
    r.dim_ = detail::merge_dims(a.dim_, b.dim_);
    for (int i = 0; i < r.dim_; ++i)
      r.d_[i] = a.d_[i] * b.val_ + a.val_ * b.d_[i];
    return r;
  }
  friend Dual operator/(const Dual& a, const Dual& b) {
    if (value_of(b.val_) == 0.0) throw DomainError("dual division by zero");
    const T inv = T(1.0) / b.val_;
    const T q = a.val_ * inv;
    Dual r(q);
    r.dim_ = detail::merge_dims(a.dim_, b.dim_);
    for (int i = 0; i < r.dim_; ++i) r.d_[i] = (a.d_[i] - q * b.d_[i]) * inv;
    return r;
  }

  // Mixed operations with plain doubles. For nested duals the value type
  // also converts implicitly through the constructors above.
  friend Dual operator+(const Dual& a, double b) {
    Dual r(a);
    r.val_ += b;
    return r;
  }
  friend Dual operator+(double a, const Dual& b) { return b + a; }
  friend Dual operator-(const Dual& a, double b) {
    Dual r(a);
    r.val_ -= b;
    return r;
  }
  friend Dual operator-(double a, const Dual& b) {
    Dual r(-b);
    r.val_ += a;
    return r;
  }
  friend Dual operator*(const Dual& a, double b) {
    Dual r(a);
    r *= b;
    return r;
  }
  friend Dual operator*(double a, const Dual& b) { return b * a; }
  friend Dual operator/(const Dual& a, double b) {
    if (b == 0.0) throw DomainError("dual division by zero");
    return a * (1.0 / b);
  }
  friend Dual operator/(double a, const Dual& b) { return Dual(a) / b; }

  // Comparisons read only the value part.
  friend bool operator<(const Dual& a, const Dual& b) { return value_of(a) < value_of(b); }
  friend bool operator>(const Dual& a, const Dual& b) { return value_of(a) > value_of(b); }
  friend bool operator<=(const Dual& a, const Dual& b) { return value_of(a) <= value_of(b); }
  friend bool operator>=(const Dual& a, const Dual& b) { return value_of(a) >= value_of(b); }
  friend bool operator<(const Dual& a, double b) { return value_of(a) < b; }
  friend bool operator>(const Dual& a, double b) { return value_of(a) > b; }
  friend bool operator<=(const Dual& a, double b) { return value_of(a) <= b; }
  friend bool operator>=(const Dual& a, double b) { return value_of(a) >= b; }

 private:
  T val_{};
  std::array<T, N> d_{};
  int dim_ = 0;
};

/// Dual with the element-level capacity used across the solver.
using ADouble = Dual<double, kMaxSeedDim>;

namespace detail {
// Applies the chain rule for a unary function with value fx and slope dfx.
template <class T, int N>
Dual<T, N> chain(const Dual<T, N>& x, const T& fx, const T& dfx) {
  Dual<T, N> r(fx, x.dim());
  for (int i = 0; i < x.dim(); ++i) r.d(i) = dfx * x.d(i);
  return r;
}
template <class T, int N>
bool has_nonzero_derivs(const Dual<T, N>& x) {
  for (int i = 0; i < x.dim(); ++i)
    if (value_of(x.d(i)) != 0.0) return true;
  return false;
}
}  // namespace detail

template <class T, int N>
Dual<T, N> sqrt(const Dual<T, N>& x) {
  using std::sqrt;
  const double v = value_of(x);
  if (v < 0.0) throw DomainError("sqrt of negative value " + std::to_string(v));
  if (v == 0.0 && detail::has_nonzero_derivs(x))
    throw DomainError("sqrt is not differentiable at 0");
  const T s = sqrt(x.value());
  if (v == 0.0) return Dual<T, N>(s, x.dim());
  return detail::chain(x, s, T(0.5) / s);
}

template <class T, int N>
Dual<T, N> exp(const Dual<T, N>& x) {
  using std::exp;
  const T e = exp(x.value());
  return detail::chain(x, e, e);
}

template <class T, int N>
Dual<T, N> log(const Dual<T, N>& x) {
  using std::log;
  const double v = value_of(x);
  if (v <= 0.0) throw DomainError("log of non-positive value " + std::to_string(v));
  return detail::chain(x, log(x.value()), T(1.0) / x.value());
}

template <class T, int N>
Dual<T, N> pow(const Dual<T, N>& x, double p) {
  using std::pow;
  const double v = value_of(x);
  if (v < 0.0 && std::floor(p) != p)
    throw DomainError("pow of negative value with non-integer exponent");
  if (v == 0.0 && p < 1.0 && detail::has_nonzero_derivs(x))
    throw DomainError("pow is not differentiable at 0 for exponent < 1");
  const T fx = pow(x.value(), p);
  return detail::chain(x, fx, p * pow(x.value(), p - 1.0));
}

template <class T, int N>
Dual<T, N> cos(const Dual<T, N>& x) {
  using std::cos;
  using std::sin;
  return detail::chain(x, cos(x.value()), -sin(x.value()));
}

template <class T, int N>
Dual<T, N> sin(const Dual<T, N>& x) {
  using std::cos;
  using std::sin;
  return detail::chain(x, sin(x.value()), cos(x.value()));
}

// Plain-double counterparts that throw on domain violations, so generic code
// behaves the same for every scalar type.
inline double checked_sqrt(double x) {
  if (x < 0.0) throw DomainError("sqrt of negative value " + std::to_string(x));
  return std::sqrt(x);
}
template <class T, int N>
Dual<T, N> checked_sqrt(const Dual<T, N>& x) {
  return sqrt(x);
}

/// Seeds x as independent variable `index` of a dim-dimensional space.
template <int N = kMaxSeedDim>
Dual<double, N> seed_unit(double x, int index, int dim) {
  if (dim < 0 || dim > N)
    throw DimensionError("seed dimension " + std::to_string(dim) + " exceeds capacity");
  if (index < 0 || index >= dim)
    throw DimensionError("seed index " + std::to_string(index) +
                         " out of range for dimension " + std::to_string(dim));
  Dual<double, N> r(x, dim);
  r.d(index) = 1.0;
  return r;
}

/// Seeds values[i] with the full derivative row rows[i].
template <int N = kMaxSeedDim>
std::vector<Dual<double, N>> seed_matrix(std::span<const double> values,
                                         const std::vector<std::vector<double>>& rows) {
  if (rows.size() != values.size())
    throw DimensionError("seed_matrix: " + std::to_string(values.size()) +
                         " values but " + std::to_string(rows.size()) + " rows");
  const int dim = rows.empty() ? 0 : static_cast<int>(rows.front().size());
  std::vector<Dual<double, N>> out;
  out.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (static_cast<int>(rows[i].size()) != dim)
      throw DimensionError("seed_matrix: ragged derivative rows");
    Dual<double, N> x(values[i], dim);
    for (int j = 0; j < dim; ++j) x.d(j) = rows[i][static_cast<std::size_t>(j)];
    out.push_back(x);
  }
  return out;
}

/// Converts a plain value to scalar type S with no derivative content.
template <class S>
S constant(double v) {
  return S(v);
}

}  // namespace ecal
