// SPDX-License-Identifier: Apache-2.0
//
// AD-seeded element evaluations: Jacobian blocks of the local and global
// residuals, the local Newton solve, and the consistent element tangent.

#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "ecal/autodiff.hpp"
#include "ecal/element.hpp"
#include "ecal/errors.hpp"

namespace ecal {

/// Independent variable group a Jacobian block is taken with respect to.
enum class Wrt { U, UPrev, Xi, XiPrev, Beta };

/// Everything a single element evaluation at one load step depends on.
template <class Model>
struct ElementInputs {
  static constexpr int L = Model::kLocal;
  static constexpr int P = Model::kParams;

  const ElementContext* ctx = nullptr;
  ElemVec<double> u{};
  ElemVec<double> u_prev{};
  std::array<double, L> xi{};
  std::array<double, L> xi_prev{};
  std::array<double, P> beta{};
  bool plastic = false;
};

struct Evaluation {
  Eigen::VectorXd value;
  Eigen::MatrixXd jacobian;
};

namespace detail {

template <std::size_t N>
std::array<ADouble, N> lift(const std::array<double, N>& v, bool seeded) {
  std::array<ADouble, N> out;
  for (std::size_t i = 0; i < N; ++i)
    out[i] = seeded ? seed_unit(v[i], static_cast<int>(i), static_cast<int>(N)) : ADouble(v[i]);
  return out;
}

template <std::size_t N>
Evaluation unpack(const std::array<ADouble, N>& r, int dim) {
  Evaluation e{Eigen::VectorXd(static_cast<Eigen::Index>(N)),
               Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(N), dim)};
  for (std::size_t i = 0; i < N; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    e.value(row) = r[i].value();
    for (int j = 0; j < r[i].dim(); ++j) e.jacobian(row, j) = r[i].d(j);
  }
  return e;
}

inline int wrt_dim(Wrt w, int local, int params) {
  switch (w) {
    case Wrt::U:
    case Wrt::UPrev:
      return kElemDofs;
    case Wrt::Xi:
    case Wrt::XiPrev:
      return local;
    case Wrt::Beta:
      return params;
  }
  return 0;
}

}  // namespace detail

/// C and dC/d(w) for one seeded variable group.
template <class Model>
Evaluation local_jacobian(const ElementInputs<Model>& in, Wrt w) {
  using detail::lift;
  const auto r = Model::local_residual(*in.ctx, lift(in.u, w == Wrt::U),
                                       lift(in.u_prev, w == Wrt::UPrev), lift(in.xi, w == Wrt::Xi),
                                       lift(in.xi_prev, w == Wrt::XiPrev),
                                       lift(in.beta, w == Wrt::Beta), in.plastic);
  return detail::unpack(r, detail::wrt_dim(w, Model::kLocal, Model::kParams));
}

/// R and dR/d(w); the global residual depends on U, xi and beta only.
template <class Model>
Evaluation global_jacobian(const ElementInputs<Model>& in, Wrt w) {
  using detail::lift;
  if (w == Wrt::UPrev || w == Wrt::XiPrev)
    throw DimensionError("global residual has no previous-step dependence");
  const auto r = Model::global_residual(*in.ctx, lift(in.u, w == Wrt::U),
                                        lift(in.xi, w == Wrt::Xi), lift(in.beta, w == Wrt::Beta));
  return detail::unpack(r, detail::wrt_dim(w, Model::kLocal, Model::kParams));
}

template <class Model>
Eigen::VectorXd local_value(const ElementInputs<Model>& in) {
  const auto r =
      Model::local_residual(*in.ctx, in.u, in.u_prev, in.xi, in.xi_prev, in.beta, in.plastic);
  return Eigen::Map<const Eigen::VectorXd>(r.data(), Model::kLocal);
}

template <class Model>
Eigen::VectorXd global_value(const ElementInputs<Model>& in) {
  const auto r = Model::global_residual(*in.ctx, in.u, in.xi, in.beta);
  return Eigen::Map<const Eigen::VectorXd>(r.data(), kElemDofs);
}

struct LocalSolveOptions {
  double tol = 1e-12;
  int max_iters = 50;
};

struct LocalSolveStats {
  int iterations = 0;
  double residual_norm = 0.0;
};

/// Local Newton solve for xi at fixed element dofs. The branch is fixed by
/// the trial yield value on entry (in.plastic is overwritten). The elastic
/// branch starts from xi_prev; the plastic branch starts from the trial
/// state. On return in.xi holds the converged state and `dC_dxi` the local
/// Jacobian there. `history`, when given, receives |C| at every iterate.
template <class Model>
LocalSolveStats solve_local(ElementInputs<Model>& in, Eigen::MatrixXd& dC_dxi,
                            const LocalSolveOptions& opt = {},
                            std::vector<double>* history = nullptr) {
  const auto trial = Model::trial(*in.ctx, in.u, in.u_prev, in.xi_prev, in.beta);
  in.plastic = trial.f > 0.0;
  in.xi = in.plastic ? trial.xi : in.xi_prev;

  LocalSolveStats stats;
  for (;;) {
    Evaluation ev = local_jacobian(in, Wrt::Xi);
    stats.residual_norm = ev.value.norm();
    if (history) history->push_back(stats.residual_norm);
    if (!std::isfinite(stats.residual_norm))
      throw SolverError("local residual is not finite");
    if (stats.residual_norm <= opt.tol) {
      dC_dxi = std::move(ev.jacobian);
      return stats;
    }
    if (stats.iterations == opt.max_iters)
      throw SolverError("local Newton did not converge in " + std::to_string(opt.max_iters) +
                        " iterations (|C| = " + std::to_string(stats.residual_norm) + ")");
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(ev.jacobian);
    const Eigen::VectorXd step = lu.solve(-ev.value);
    for (int k = 0; k < Model::kLocal; ++k) in.xi[k] += step(k);
    ++stats.iterations;
  }
}

/// Total local sensitivity d(xi)/dU = -D^{-1} dC/dU at a converged state.
template <class Model>
Eigen::MatrixXd local_sensitivity(const ElementInputs<Model>& in, const Eigen::MatrixXd& dC_dxi) {
  const Evaluation cu = local_jacobian(in, Wrt::U);
  return Eigen::PartialPivLU<Eigen::MatrixXd>(dC_dxi).solve(-cu.jacobian);
}

/// R and dR/dU including the implicit xi(U) dependence, from one evaluation
/// with U unit-seeded and xi seeded with the rows of dxi_dU.
template <class Model>
Evaluation element_tangent(const ElementInputs<Model>& in, const Eigen::MatrixXd& dxi_dU) {
  std::array<ADouble, Model::kLocal> xi;
  for (int k = 0; k < Model::kLocal; ++k) {
    xi[k] = ADouble(in.xi[k], kElemDofs);
    for (int j = 0; j < kElemDofs; ++j) xi[k].d(j) = dxi_dU(k, j);
  }
  const auto r = Model::global_residual(*in.ctx, detail::lift(in.u, true), xi,
                                        detail::lift(in.beta, false));
  return detail::unpack(r, kElemDofs);
}

}  // namespace ecal
