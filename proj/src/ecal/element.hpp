// SPDX-License-Identifier: Apache-2.0
//
// Stabilized mixed displacement-pressure residuals on linear tetrahedra and
// the per-model glue (local residual from element dofs, trial predictor).
//
// Element dofs are node-major: 4 * node + c with c = 0..2 displacement and
// c = 3 pressure. Everything except the p q term is integrated with the
// centroid rule; p q uses the exact linear-tet mass matrix.

#pragma once

#include <array>
#include <string_view>

#include "ecal/material_hill.hpp"
#include "ecal/material_j2.hpp"
#include "ecal/mesh.hpp"
#include "ecal/tensor.hpp"

namespace ecal {

template <class S>
using ElemVec = std::array<S, kElemDofs>;

struct ElementContext {
  std::array<Vec3, 4> X;                   // reference node coordinates
  std::array<std::array<double, 3>, 4> G;  // reference shape-function gradients
  double volume = 0.0;
  double h = 0.0;  // longest edge

  static ElementContext from_mesh(const Mesh& mesh, std::size_t elem);
};

/// Exact integral of N_a N_b over a linear tet: V/20 (1 + delta_ab).
inline double tet_mass(double volume, int a, int b) {
  return volume / 20.0 * (a == b ? 2.0 : 1.0);
}

template <class S>
Mat3<S> deformation_gradient(const ElementContext& ctx, const ElemVec<S>& u) {
  Mat3<S> F = Mat3<S>::identity();
  for (int a = 0; a < kNodesPerTet; ++a)
    for (int i = 0; i < 3; ++i)
      for (int J = 0; J < 3; ++J) F(i, J) += u[kDofsPerNode * a + i] * ctx.G[a][J];
  return F;
}

namespace detail {

// Shared pieces of both global residuals: first Piola stress P tested
// against grad w, and the pressure-gradient stabilization.
template <class S>
void add_momentum(const ElementContext& ctx, const Mat3<S>& P, ElemVec<S>& R) {
  for (int a = 0; a < kNodesPerTet; ++a)
    for (int i = 0; i < 3; ++i) {
      S acc = P(i, 0) * ctx.G[a][0];
      acc += P(i, 1) * ctx.G[a][1];
      acc += P(i, 2) * ctx.G[a][2];
      R[kDofsPerNode * a + i] = ctx.volume * acc;
    }
}

template <class S>
void add_stabilization(const ElementContext& ctx, const ElemVec<S>& u, const S& J,
                       const Mat3<S>& Finv, const S& mu, ElemVec<S>& R) {
  const S tau = ctx.h * ctx.h / (2.0 * mu);
  const Mat3<S> Cinv = J * (Finv * transpose(Finv));
  std::array<S, 3> grad_p;
  for (int I = 0; I < 3; ++I) {
    grad_p[I] = u[3] * ctx.G[0][I];
    for (int b = 1; b < kNodesPerTet; ++b) grad_p[I] += u[kDofsPerNode * b + 3] * ctx.G[b][I];
  }
  std::array<S, 3> flux;
  for (int J2 = 0; J2 < 3; ++J2)
    flux[J2] = Cinv(0, J2) * grad_p[0] + Cinv(1, J2) * grad_p[1] + Cinv(2, J2) * grad_p[2];
  for (int a = 0; a < kNodesPerTet; ++a) {
    const S q = flux[0] * ctx.G[a][0] + flux[1] * ctx.G[a][1] + flux[2] * ctx.G[a][2];
    R[kDofsPerNode * a + 3] -= ctx.volume * tau * q;
  }
}

template <class S>
S mean_pressure(const ElemVec<S>& u) {
  return 0.25 * (u[3] + u[7] + u[11] + u[15]);
}

template <class S>
S mass_times_pressure(const ElementContext& ctx, const ElemVec<S>& u, int a) {
  S acc = tet_mass(ctx.volume, a, 0) * u[3];
  for (int b = 1; b < kNodesPerTet; ++b) acc += tet_mass(ctx.volume, a, b) * u[kDofsPerNode * b + 3];
  return acc;
}

}  // namespace detail

/// Internal-force residual of the hyperelastic-plastic model (no traction).
template <class S>
ElemVec<S> global_residual_j2(const ElemVec<S>& u, const j2::Local<S>& xi,
                              const j2::Params<S>& beta, const ElementContext& ctx) {
  const auto mod = j2::elastic_moduli(beta[j2::kE], beta[j2::kNu]);
  const Mat3<S> F = deformation_gradient(ctx, u);
  const S J = det(F);
  const Mat3<S> Finv = inverse(F);
  const Mat3<S> FinvT = transpose(Finv);
  const S p = detail::mean_pressure(u);
  const Mat3<S> zeta = from_sym(Sym6<S>{xi[0], xi[1], xi[2], xi[3], xi[4], xi[5]});
  const Mat3<S> P = (mod.mu * zeta) * FinvT - (J * p) * FinvT;

  ElemVec<S> R;
  detail::add_momentum(ctx, P, R);
  const S vol = (J * J - 1.0) / (2.0 * J);
  for (int a = 0; a < kNodesPerTet; ++a)
    R[kDofsPerNode * a + 3] =
        -(detail::mass_times_pressure(ctx, u, a) / mod.kappa) - 0.25 * ctx.volume * vol;
  detail::add_stabilization(ctx, u, J, Finv, mod.mu, R);
  return R;
}

/// Internal-force residual of the hypoelastic model (no traction).
template <class S>
ElemVec<S> global_residual_hill(const ElemVec<S>& u, const hill::Local<S>& xi,
                                const hill::Params<S>& beta, const ElementContext& ctx) {
  const S mu = j2::elastic_moduli(beta[hill::kE], beta[hill::kNu]).mu;
  const Mat3<S> F = deformation_gradient(ctx, u);
  const S J = det(F);
  const Mat3<S> Finv = inverse(F);
  const Mat3<S> Rot = polar_rotation(F);
  const Mat3<S> T = from_sym(Sym6<S>{xi[0], xi[1], xi[2], xi[3], xi[4], xi[5]});
  const Mat3<S> sigma = Rot * T * transpose(Rot);
  const S p = detail::mean_pressure(u);
  Mat3<S> stress = dev(sigma);
  for (int i = 0; i < 3; ++i) stress(i, i) -= p;
  const Mat3<S> P = J * (stress * transpose(Finv));

  ElemVec<S> R;
  detail::add_momentum(ctx, P, R);
  const S mean = trace(sigma) / 3.0;
  for (int a = 0; a < kNodesPerTet; ++a)
    R[kDofsPerNode * a + 3] = -detail::mass_times_pressure(ctx, u, a) - 0.25 * ctx.volume * mean;
  detail::add_stabilization(ctx, u, J, Finv, mu, R);
  return R;
}

/// Model traits consumed by the solver and sensitivity engines.
struct J2Model {
  static constexpr int kLocal = j2::kLocal;
  static constexpr int kParams = j2::kParams;
  static constexpr std::string_view kName = "j2";

  static std::array<double, kLocal> virgin_state() { return j2::virgin_state(); }

  template <class S>
  static std::array<S, kLocal> local_residual(const ElementContext& ctx, const ElemVec<S>& u,
                                              const ElemVec<S>& u_prev,
                                              const std::array<S, kLocal>& xi,
                                              const std::array<S, kLocal>& xi_prev,
                                              const std::array<S, kParams>& beta, bool plastic) {
    return j2::local_residual(xi, xi_prev, deformation_gradient(ctx, u),
                              deformation_gradient(ctx, u_prev), beta, plastic);
  }

  template <class S>
  static ElemVec<S> global_residual(const ElementContext& ctx, const ElemVec<S>& u,
                                    const std::array<S, kLocal>& xi,
                                    const std::array<S, kParams>& beta) {
    return global_residual_j2(u, xi, beta, ctx);
  }

  /// Returns the trial yield value and the trial local state.
  static j2::Trial<double> trial(const ElementContext& ctx, const ElemVec<double>& u,
                                 const ElemVec<double>& u_prev,
                                 const std::array<double, kLocal>& xi_prev,
                                 const std::array<double, kParams>& beta) {
    return j2::trial_state(deformation_gradient(ctx, u), deformation_gradient(ctx, u_prev),
                           xi_prev, beta);
  }

  static double alpha(const std::array<double, kLocal>& xi) { return xi[j2::kAlpha]; }
};

struct HillModel {
  static constexpr int kLocal = hill::kLocal;
  static constexpr int kParams = hill::kParams;
  static constexpr std::string_view kName = "hill";

  static std::array<double, kLocal> virgin_state() { return hill::virgin_state(); }

  template <class S>
  static std::array<S, kLocal> local_residual(const ElementContext& ctx, const ElemVec<S>& u,
                                              const ElemVec<S>& u_prev,
                                              const std::array<S, kLocal>& xi,
                                              const std::array<S, kLocal>& xi_prev,
                                              const std::array<S, kParams>& beta, bool plastic) {
    return hill::local_residual(xi, xi_prev, deformation_gradient(ctx, u),
                                deformation_gradient(ctx, u_prev), beta, plastic);
  }

  template <class S>
  static ElemVec<S> global_residual(const ElementContext& ctx, const ElemVec<S>& u,
                                    const std::array<S, kLocal>& xi,
                                    const std::array<S, kParams>& beta) {
    return global_residual_hill(u, xi, beta, ctx);
  }

  static hill::Trial<double> trial(const ElementContext& ctx, const ElemVec<double>& u,
                                   const ElemVec<double>& u_prev,
                                   const std::array<double, kLocal>& xi_prev,
                                   const std::array<double, kParams>& beta) {
    return hill::trial_state(deformation_gradient(ctx, u), deformation_gradient(ctx, u_prev),
                             xi_prev, beta);
  }

  static double alpha(const std::array<double, kLocal>& xi) { return xi[hill::kAlpha]; }
};

/// Consistent traction -h A / 3 on each node of a reference face.
void add_traction(const std::vector<Face>& faces, const Vec3& h, std::span<double> residual);

}  // namespace ecal
