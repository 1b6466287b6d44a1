// SPDX-License-Identifier: Apache-2.0
//
// Finite-deformation J2 plasticity on the isochoric elastic left Cauchy-Green
// tensor, with linear plus Voce isotropic hardening.
//
// Local state layout (8 scalars): zeta (6, symmetric storage), Ie, alpha.
// Parameter layout: E, nu, Y, K, S, D.

#pragma once

#include <array>
#include <cmath>

#include "ecal/tensor.hpp"

namespace ecal::j2 {

inline constexpr int kLocal = 8;
inline constexpr int kParams = 6;
enum Param : int { kE = 0, kNu, kY, kK, kS, kD };
inline constexpr int kIe = 6;
inline constexpr int kAlpha = 7;

template <class S>
using Local = std::array<S, kLocal>;
template <class S>
using Params = std::array<S, kParams>;

template <class S>
struct Moduli {
  S kappa;
  S mu;
};

template <class S>
Moduli<S> elastic_moduli(const S& E, const S& nu) {
  if (!(value_of(E) > 0.0)) throw DomainError("Young's modulus must be positive");
  if (!(value_of(nu) > -1.0 && value_of(nu) < 0.5))
    throw DomainError("Poisson ratio must lie in (-1, 0.5)");
  return {E / (3.0 * (1.0 - 2.0 * nu)), E / (2.0 * (1.0 + nu))};
}

template <class S>
S yield_stress(const S& alpha, const Params<S>& beta) {
  using std::exp;
  return beta[kY] + beta[kK] * alpha + beta[kS] * (1.0 - exp(-beta[kD] * alpha));
}

inline Local<double> virgin_state() { return {0, 0, 0, 0, 0, 0, 1.0, 0}; }

template <class S>
struct Trial {
  Mat3<S> bbar;  // trial isochoric elastic left Cauchy-Green tensor
  Local<S> xi;   // trial local state
  double f;      // trial yield function value
};

template <class S>
Trial<S> trial_state(const Mat3<S>& F_n, const Mat3<S>& F_prev, const Local<S>& xi_prev,
                     const Params<S>& beta) {
  using std::pow;
  const Mat3<S> f = F_n * inverse(F_prev);
  const S jf = det(f);
  if (!(value_of(jf) > 0.0)) throw DomainError("relative deformation gradient is inverted");
  const Mat3<S> fbar = pow(jf, -1.0 / 3.0) * f;

  Mat3<S> be_prev = from_sym(Sym6<S>{xi_prev[0], xi_prev[1], xi_prev[2], xi_prev[3], xi_prev[4],
                                     xi_prev[5]});
  for (int i = 0; i < 3; ++i) be_prev(i, i) += xi_prev[kIe];

  Trial<S> t;
  t.bbar = fbar * be_prev * transpose(fbar);
  const Sym6<S> zeta = to_sym(dev(t.bbar));
  for (int k = 0; k < 6; ++k) t.xi[k] = zeta[k];
  t.xi[kIe] = trace(t.bbar) / 3.0;
  t.xi[kAlpha] = xi_prev[kAlpha];

  const auto mu = elastic_moduli(value_of(beta[kE]), value_of(beta[kNu])).mu;
  const double s_norm = mu * frobenius_norm(values_of(dev(t.bbar)));
  Params<double> b;
  for (int k = 0; k < kParams; ++k) b[k] = value_of(beta[k]);
  t.f = s_norm - std::sqrt(2.0 / 3.0) * yield_stress(value_of(xi_prev[kAlpha]), b);
  return t;
}

/// Discrete evolution residual C. The elastic branch pins the state to the
/// trial state; the plastic branch is the radial return with the isochoric
/// constraint and the consistency condition.
template <class S>
Local<S> local_residual(const Local<S>& xi, const Local<S>& xi_prev, const Mat3<S>& F_n,
                        const Mat3<S>& F_prev, const Params<S>& beta, bool plastic) {
  const Trial<S> trial = trial_state(F_n, F_prev, xi_prev, beta);
  Local<S> C;
  if (!plastic) {
    for (int k = 0; k < kLocal; ++k) C[k] = xi[k] - trial.xi[k];
    return C;
  }
  const S mu = elastic_moduli(beta[kE], beta[kNu]).mu;
  const Mat3<S> zeta = from_sym(Sym6<S>{xi[0], xi[1], xi[2], xi[3], xi[4], xi[5]});
  const Mat3<S> s = mu * zeta;
  if (frobenius_norm(values_of(s)) == 0.0)
    throw DomainError("plastic branch needs a nonzero deviatoric stress");
  const S s_norm = frobenius_norm(s);
  const S d_alpha = xi[kAlpha] - xi_prev[kAlpha];
  const S flow = 2.0 * std::sqrt(1.5) * d_alpha * xi[kIe] / s_norm;
  const Sym6<S> r = to_sym(zeta - dev(trial.bbar) + flow * s);
  for (int k = 0; k < 6; ++k) C[k] = r[k];

  Mat3<S> be = zeta;
  for (int i = 0; i < 3; ++i) be(i, i) += xi[kIe];
  C[kIe] = det(be) - 1.0;
  C[kAlpha] = s_norm - std::sqrt(2.0 / 3.0) * yield_stress(xi[kAlpha], beta);
  return C;
}

}  // namespace ecal::j2
