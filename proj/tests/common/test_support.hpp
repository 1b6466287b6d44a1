// SPDX-License-Identifier: Apache-2.0
//
// Small helpers shared by the unit tests: a seeded generator for property
// tests and scalar comparison utilities.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "ecal/element.hpp"
#include "ecal/tensor.hpp"

namespace ecal::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  Sym6<double> sym(double scale) {
    Sym6<double> s;
    for (auto& x : s) x = uniform(-scale, scale);
    return s;
  }

  Mat3<double> near_identity(double scale) {
    Mat3<double> F = Mat3<double>::identity();
    for (auto& x : F.a) x += uniform(-scale, scale);
    return F;
  }

  Mat3<double> rotation() {
    // Rodrigues formula from a random axis and angle.
    std::array<double, 3> k{uniform(-1, 1), uniform(-1, 1), uniform(-1, 1)};
    const double n = std::sqrt(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
    for (auto& x : k) x /= n;
    return axis_rotation(k, uniform(-3.0, 3.0));
  }

  static Mat3<double> axis_rotation(const std::array<double, 3>& k, double theta) {
    Mat3<double> K = Mat3<double>::zero();
    K(0, 1) = -k[2];
    K(0, 2) = k[1];
    K(1, 0) = k[2];
    K(1, 2) = -k[0];
    K(2, 0) = -k[1];
    K(2, 1) = k[0];
    return Mat3<double>::identity() + std::sin(theta) * K + (1.0 - std::cos(theta)) * (K * K);
  }

 private:
  std::mt19937_64 rng_;
};

inline double rel_err(double a, double b, double floor = 1e-300) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline double max_abs_diff(const Mat3<double>& a, const Mat3<double>& b) {
  double m = 0.0;
  for (int k = 0; k < 9; ++k) m = std::max(m, std::abs(a.a[k] - b.a[k]));
  return m;
}

/// Reference tet with vertices 0, e1, e2, e3; node 0 stays fixed, so
/// element dofs for a homogeneous deformation F are u_a = (F - I) e_{a-1}.
inline ElementContext unit_tet_context() {
  ElementContext ctx;
  ctx.X = {Vec3{0, 0, 0}, Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}};
  ctx.G = {std::array<double, 3>{-1, -1, -1}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  ctx.volume = 1.0 / 6.0;
  ctx.h = std::sqrt(2.0);
  return ctx;
}

inline ElemVec<double> dofs_for(const Mat3<double>& F) {
  ElemVec<double> u{};
  for (int a = 1; a < 4; ++a)
    for (int i = 0; i < 3; ++i) u[kDofsPerNode * a + i] = F(i, a - 1) - (i == a - 1 ? 1.0 : 0.0);
  return u;
}

}  // namespace ecal::testing
