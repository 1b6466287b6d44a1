// SPDX-License-Identifier: Apache-2.0
//
// Hypoelastic plasticity with Hill's quadratic anisotropic yield function and
// linear isotropic hardening. Stress is integrated in the unrotated frame
// (Green-McInnis rate) with unit load-step spacing.
//
// Local state layout (7 scalars): T (6, symmetric storage), alpha.
// Parameter layout: E, nu, Y, K, R11, R22, R33, R23, R13, R12.

#pragma once

#include <array>
#include <cmath>

#include "ecal/material_j2.hpp"
#include "ecal/tensor.hpp"

namespace ecal::hill {

inline constexpr int kLocal = 7;
inline constexpr int kParams = 10;
enum Param : int { kE = 0, kNu, kY, kK, kR11, kR22, kR33, kR23, kR13, kR12 };
inline constexpr int kAlpha = 6;

template <class S>
using Local = std::array<S, kLocal>;
template <class S>
using Params = std::array<S, kParams>;

inline Local<double> virgin_state() { return {0, 0, 0, 0, 0, 0, 0}; }

template <class S>
struct Lame {
  S lambda;
  S mu;
};

template <class S>
Lame<S> lame(const S& E, const S& nu) {
  const auto m = j2::elastic_moduli(E, nu);
  return {m.kappa - 2.0 / 3.0 * m.mu, m.mu};
}

template <class S>
struct Coefficients {
  S F, G, H, L, M, N;
};

/// Coefficients from directional yield stresses sigma_ii = R_ii Y and
/// tau_ij = R_ij Y / sqrt(3). R is ordered (11, 22, 33, 23, 13, 12).
template <class S>
Coefficients<S> hill_coefficients(const S& Y, const std::array<S, 6>& R) {
  for (const auto& r : R)
    if (!(value_of(r) > 0.0)) throw DomainError("Hill ratios must be positive");
  if (!(value_of(Y) > 0.0)) throw DomainError("Hill reference yield stress must be positive");
  const S y2 = Y * Y;
  const S s11 = R[0] * Y, s22 = R[1] * Y, s33 = R[2] * Y;
  const S i11 = 1.0 / (s11 * s11), i22 = 1.0 / (s22 * s22), i33 = 1.0 / (s33 * s33);
  const double r3 = std::sqrt(3.0);
  const S t23 = R[3] * Y / r3, t13 = R[4] * Y / r3, t12 = R[5] * Y / r3;
  return {0.5 * y2 * (i22 + i33 - i11), 0.5 * y2 * (i33 + i11 - i22),
          0.5 * y2 * (i11 + i22 - i33), 0.5 * y2 / (t23 * t23),
          0.5 * y2 / (t13 * t13),       0.5 * y2 / (t12 * t12)};
}

template <class S>
S hill_phi(const Sym6<S>& T, const Coefficients<S>& c) {
  const S a = T[1] - T[2], b = T[2] - T[0], d = T[0] - T[1];
  const S q = c.F * a * a + c.G * b * b + c.H * d * d + 2.0 * c.L * T[3] * T[3] +
              2.0 * c.M * T[4] * T[4] + 2.0 * c.N * T[5] * T[5];
  return checked_sqrt(q);
}

/// Tensor derivative d(phi)/dT by a nested forward-mode evaluation. Shear
/// entries are half the derivative with respect to the stored component,
/// since each stored shear value stands for two tensor entries.
template <class S>
Sym6<S> hill_normal(const Sym6<S>& T, const Coefficients<S>& c) {
  using Inner = Dual<S, 6>;
  Sym6<Inner> t;
  for (int k = 0; k < 6; ++k) {
    t[k] = Inner(T[k], 6);
    t[k].d(k) = S(1.0);
  }
  const Coefficients<Inner> ci{Inner(c.F), Inner(c.G), Inner(c.H),
                               Inner(c.L), Inner(c.M), Inner(c.N)};
  const Inner phi = hill_phi(t, ci);
  Sym6<S> n;
  for (int k = 0; k < 6; ++k) n[k] = k < 3 ? phi.d(k) : 0.5 * phi.d(k);
  return n;
}

template <class S>
struct Kinematics {
  Mat3<S> R;  // rotation of the current polar decomposition
  Mat3<S> d;  // unrotated rate of deformation over the step
};

template <class S>
Kinematics<S> corotational_kinematics(const Mat3<S>& F_n, const Mat3<S>& F_prev) {
  const Mat3<S> L = (F_n - F_prev) * inverse(F_n);
  const Mat3<S> R = polar_rotation(F_n);
  return {R, transpose(R) * sym(L) * R};
}

template <class S>
Coefficients<S> coefficients_of(const Params<S>& beta) {
  return hill_coefficients(beta[kY], {beta[kR11], beta[kR22], beta[kR33], beta[kR23],
                                      beta[kR13], beta[kR12]});
}

/// Elastic predictor lambda tr(d) I + 2 mu d (unit step spacing).
template <class S>
Mat3<S> elastic_increment(const Mat3<S>& d, const Lame<S>& m) {
  Mat3<S> inc = (2.0 * m.mu) * d;
  const S vol = m.lambda * trace(d);
  for (int i = 0; i < 3; ++i) inc(i, i) += vol;
  return inc;
}

template <class S>
struct Trial {
  Local<S> xi;
  double f;
};

template <class S>
Trial<S> trial_state(const Mat3<S>& F_n, const Mat3<S>& F_prev, const Local<S>& xi_prev,
                     const Params<S>& beta) {
  const auto kin = corotational_kinematics(F_n, F_prev);
  const auto m = lame(beta[kE], beta[kNu]);
  const Sym6<S> inc = to_sym(elastic_increment(kin.d, m));
  Trial<S> t;
  for (int k = 0; k < 6; ++k) t.xi[k] = xi_prev[k] + inc[k];
  t.xi[kAlpha] = xi_prev[kAlpha];

  Params<double> b;
  for (int k = 0; k < kParams; ++k) b[k] = value_of(beta[k]);
  Sym6<double> tt;
  for (int k = 0; k < 6; ++k) tt[k] = value_of(t.xi[k]);
  t.f = hill_phi(tt, coefficients_of(b)) - b[kY] - b[kK] * value_of(xi_prev[kAlpha]);
  return t;
}

/// Unrotated plastic rate (alpha_n - alpha_prev) d(phi)/dT at the state xi.
template <class S>
Mat3<S> plastic_rate(const Local<S>& xi, const Local<S>& xi_prev, const Params<S>& beta) {
  const Sym6<S> T{xi[0], xi[1], xi[2], xi[3], xi[4], xi[5]};
  const S d_alpha = xi[kAlpha] - xi_prev[kAlpha];
  return d_alpha * from_sym(hill_normal(T, coefficients_of(beta)));
}

template <class S>
Local<S> local_residual(const Local<S>& xi, const Local<S>& xi_prev, const Mat3<S>& F_n,
                        const Mat3<S>& F_prev, const Params<S>& beta, bool plastic) {
  const auto kin = corotational_kinematics(F_n, F_prev);
  const auto m = lame(beta[kE], beta[kNu]);
  Mat3<S> d_el = kin.d;
  if (plastic) d_el = d_el - plastic_rate(xi, xi_prev, beta);
  const Sym6<S> inc = to_sym(elastic_increment(d_el, m));

  Local<S> C;
  for (int k = 0; k < 6; ++k) C[k] = xi[k] - xi_prev[k] - inc[k];
  if (plastic) {
    const Sym6<S> T{xi[0], xi[1], xi[2], xi[3], xi[4], xi[5]};
    C[kAlpha] = hill_phi(T, coefficients_of(beta)) - beta[kY] - beta[kK] * xi[kAlpha];
  } else {
    C[kAlpha] = xi[kAlpha] - xi_prev[kAlpha];
  }
  return C;
}

}  // namespace ecal::hill
