// SPDX-License-Identifier: Apache-2.0
//
// 3x3 tensors over an arbitrary scalar (double or Dual). Symmetric tensors are
// stored as 6-vectors in the order (11, 22, 33, 23, 13, 12).

#pragma once

#include <array>
#include <cmath>

#include "ecal/autodiff.hpp"

namespace ecal {

template <class S>
struct Mat3 {
  std::array<S, 9> a{};

  S& operator()(int i, int j) { return a[static_cast<std::size_t>(3 * i + j)]; }
  const S& operator()(int i, int j) const { return a[static_cast<std::size_t>(3 * i + j)]; }

  static Mat3 zero() {
    Mat3 m;
    for (auto& x : m.a) x = S(0.0);
    return m;
  }
  static Mat3 identity() {
    Mat3 m = zero();
    m(0, 0) = S(1.0);
    m(1, 1) = S(1.0);
    m(2, 2) = S(1.0);
    return m;
  }
};

template <class S>
using Sym6 = std::array<S, 6>;

// Voigt-style index map for symmetric storage.
inline constexpr int kSymRow[6] = {0, 1, 2, 1, 0, 0};
inline constexpr int kSymCol[6] = {0, 1, 2, 2, 2, 1};

template <class S>
Mat3<S> operator+(const Mat3<S>& x, const Mat3<S>& y) {
  Mat3<S> r;
  for (int k = 0; k < 9; ++k) r.a[k] = x.a[k] + y.a[k];
  return r;
}
template <class S>
Mat3<S> operator-(const Mat3<S>& x, const Mat3<S>& y) {
  Mat3<S> r;
  for (int k = 0; k < 9; ++k) r.a[k] = x.a[k] - y.a[k];
  return r;
}
template <class S, class F>
Mat3<S> operator*(const F& s, const Mat3<S>& x) {
  Mat3<S> r;
  for (int k = 0; k < 9; ++k) r.a[k] = s * x.a[k];
  return r;
}
template <class S>
Mat3<S> operator*(const Mat3<S>& x, const Mat3<S>& y) {
  Mat3<S> r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      S acc = x(i, 0) * y(0, j);
      acc += x(i, 1) * y(1, j);
      acc += x(i, 2) * y(2, j);
      r(i, j) = acc;
    }
  return r;
}

template <class S>
Mat3<S> transpose(const Mat3<S>& x) {
  Mat3<S> r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = x(j, i);
  return r;
}

template <class S>
S trace(const Mat3<S>& x) {
  return x(0, 0) + x(1, 1) + x(2, 2);
}

template <class S>
S det(const Mat3<S>& x) {
  return x(0, 0) * (x(1, 1) * x(2, 2) - x(1, 2) * x(2, 1)) -
         x(0, 1) * (x(1, 0) * x(2, 2) - x(1, 2) * x(2, 0)) +
         x(0, 2) * (x(1, 0) * x(2, 1) - x(1, 1) * x(2, 0));
}

/// Inverse by cofactors; throws on a (numerically) singular matrix.
template <class S>
Mat3<S> inverse(const Mat3<S>& x) {
  const S d = det(x);
  if (value_of(d) == 0.0) throw DomainError("singular 3x3 matrix");
  const S inv = S(1.0) / d;
  Mat3<S> r;
  r(0, 0) = (x(1, 1) * x(2, 2) - x(1, 2) * x(2, 1)) * inv;
  r(0, 1) = (x(0, 2) * x(2, 1) - x(0, 1) * x(2, 2)) * inv;
  r(0, 2) = (x(0, 1) * x(1, 2) - x(0, 2) * x(1, 1)) * inv;
  r(1, 0) = (x(1, 2) * x(2, 0) - x(1, 0) * x(2, 2)) * inv;
  r(1, 1) = (x(0, 0) * x(2, 2) - x(0, 2) * x(2, 0)) * inv;
  r(1, 2) = (x(0, 2) * x(1, 0) - x(0, 0) * x(1, 2)) * inv;
  r(2, 0) = (x(1, 0) * x(2, 1) - x(1, 1) * x(2, 0)) * inv;
  r(2, 1) = (x(0, 1) * x(2, 0) - x(0, 0) * x(2, 1)) * inv;
  r(2, 2) = (x(0, 0) * x(1, 1) - x(0, 1) * x(1, 0)) * inv;
  return r;
}

template <class S>
Mat3<S> dev(const Mat3<S>& x) {
  Mat3<S> r = x;
  const S m = trace(x) / 3.0;
  r(0, 0) -= m;
  r(1, 1) -= m;
  r(2, 2) -= m;
  return r;
}

template <class S>
Mat3<S> sym(const Mat3<S>& x) {
  Mat3<S> r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = 0.5 * (x(i, j) + x(j, i));
  return r;
}

/// Double contraction x : y.
template <class S>
S ddot(const Mat3<S>& x, const Mat3<S>& y) {
  S acc = x.a[0] * y.a[0];
  for (int k = 1; k < 9; ++k) acc += x.a[k] * y.a[k];
  return acc;
}

template <class S>
S frobenius_norm(const Mat3<S>& x) {
  return checked_sqrt(ddot(x, x));
}

template <class S>
Mat3<S> from_sym(const Sym6<S>& v) {
  Mat3<S> r;
  for (int k = 0; k < 6; ++k) {
    r(kSymRow[k], kSymCol[k]) = v[k];
    r(kSymCol[k], kSymRow[k]) = v[k];
  }
  return r;
}

template <class S>
Sym6<S> to_sym(const Mat3<S>& x) {
  Sym6<S> v;
  for (int k = 0; k < 6; ++k) v[k] = x(kSymRow[k], kSymCol[k]);
  return v;
}

template <class S>
Mat3<double> values_of(const Mat3<S>& x) {
  Mat3<double> r;
  for (int k = 0; k < 9; ++k) r.a[k] = value_of(x.a[k]);
  return r;
}

/// Rotation factor of the polar decomposition F = R U.
///
/// Newton iteration X <- (X + X^{-T}) / 2 from X = F. Once the values have
/// converged one extra sweep settles the derivative part, which the iteration
/// carries along for dual scalars.
template <class S>
Mat3<S> polar_rotation(const Mat3<S>& F) {
  if (value_of(det(F)) <= 0.0) throw DomainError("polar decomposition needs det(F) > 0");
  Mat3<S> X = F;
  bool settled = false;
  for (int it = 0; it < 60; ++it) {
    Mat3<S> next = 0.5 * (X + transpose(inverse(X)));
    double change = 0.0;
    for (int k = 0; k < 9; ++k) {
      const double dk = value_of(next.a[k]) - value_of(X.a[k]);
      change += dk * dk;
    }
    X = next;
    if (settled) return X;
    if (std::sqrt(change) <= 1e-15) settled = true;
  }
  if (!settled) throw DomainError("polar decomposition did not converge");
  return X;
}

}  // namespace ecal
