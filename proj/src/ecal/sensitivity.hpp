// SPDX-License-Identifier: Apache-2.0
//
// Gradients of the reduced objective J(beta) = J(U(beta), beta): finite
// differences over full forward solves, forward sensitivities marched with
// the load steps, and the adjoint marched backwards through the trajectory.
//
// Element blocks at step n (all from AD-seeded element evaluations):
//   A = dR/dU   B = dR/dxi   Rb = dR/dbeta
//   Cu = dC/dU  D = dC/dxi   Cup = dC/dU_prev  Cxp = dC/dxi_prev  Cb = dC/dbeta
// Only active parameter columns are kept in Rb and Cb.

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ecal/forward_solver.hpp"
#include "ecal/objective.hpp"

namespace ecal {

/// One reduced-space calibration problem. Inactive parameters stay at the
/// values passed in beta.
struct Problem {
  ModelKind model = ModelKind::J2;
  const Discretization* disc = nullptr;
  const DICObjective* objective = nullptr;
  LoadSchedule loads;
  SolverOptions solver;
  std::vector<int> active;
};

struct ElementBlocks {
  Eigen::MatrixXd A, B, Rb, Cu, D, Cup, Cxp, Cb;
};

template <class Model>
ElementBlocks element_blocks(const ElementInputs<Model>& in, const std::vector<int>& active) {
  auto cols = [&](const Eigen::MatrixXd& full) {
    Eigen::MatrixXd out(full.rows(), static_cast<Eigen::Index>(active.size()));
    for (std::size_t k = 0; k < active.size(); ++k)
      out.col(static_cast<Eigen::Index>(k)) = full.col(active[k]);
    return out;
  };
  ElementBlocks b;
  b.A = global_jacobian(in, Wrt::U).jacobian;
  b.B = global_jacobian(in, Wrt::Xi).jacobian;
  b.Rb = cols(global_jacobian(in, Wrt::Beta).jacobian);
  b.Cu = local_jacobian(in, Wrt::U).jacobian;
  b.D = local_jacobian(in, Wrt::Xi).jacobian;
  b.Cup = local_jacobian(in, Wrt::UPrev).jacobian;
  b.Cxp = local_jacobian(in, Wrt::XiPrev).jacobian;
  b.Cb = cols(local_jacobian(in, Wrt::Beta).jacobian);
  return b;
}

struct ForwardResult {
  Trajectory traj;
  ObjectiveValue J;
};

/// Forward solve plus objective (one nonlinear solve).
ForwardResult evaluate(const Problem& pb, const std::vector<double>& beta,
                       Counters* counters = nullptr);

/// Forward sensitivities along a converged trajectory: per step one
/// factorization of the Schur-complement LHS with N_active right-hand sides.
std::vector<double> gradient_forward(const Problem& pb, const Trajectory& traj,
                                     const std::vector<double>& beta,
                                     Counters* counters = nullptr);

/// Adjoint gradient: one linear solve per load step, backwards in time.
std::vector<double> gradient_adjoint(const Problem& pb, const Trajectory& traj,
                                     const std::vector<double>& beta,
                                     Counters* counters = nullptr);

enum class FdScheme { Forward, Central };

struct FdOptions {
  FdScheme scheme = FdScheme::Forward;
  /// Absolute step; 0 selects sqrt(machine eps) (1 + |beta_i|) per component.
  double step = 0.0;
};

struct FdGradient {
  double J = 0.0;  // objective at beta
  std::vector<double> gradient;
};

/// Finite-difference gradient over the active parameters. Forward scheme:
/// N_active + 1 nonlinear solves; central scheme: 2 N_active + 1.
FdGradient gradient_fd(const Problem& pb, const std::vector<double>& beta,
                       const FdOptions& opt = {}, Counters* counters = nullptr);

/// Default step sweep 1, 1e-1, ..., 1e-12.
std::vector<double> default_fd_steps();

struct FdSweepPoint {
  double eps;
  double directional;  // (J(beta + eps D) - J(beta - eps D)) / (2 eps)
};

/// Centered directional differences along `direction` (active components).
std::vector<FdSweepPoint> fd_sweep(const Problem& pb, const std::vector<double>& beta,
                                   const std::vector<double>& direction,
                                   const std::vector<double>& steps,
                                   Counters* counters = nullptr);

/// E(eps) = |grad . D - FD(eps)| for each sweep point.
std::vector<double> fd_check_errors(const std::vector<FdSweepPoint>& sweep,
                                    const std::vector<double>& gradient,
                                    const std::vector<double>& direction);

struct VCurve {
  std::size_t argmin = 0;
  double min_error = 0.0;
  double min_relative = 0.0;  // min_error / scale
  bool v_shaped = false;      // interior minimum, both ends >= 100x the minimum
};

VCurve analyze_v_curve(const std::vector<double>& errors, double scale);

/// Schur-complement LHS sum_e (A - B D^{-1} Cu) at `step`, with Dirichlet
/// elimination.
SparseMatrix forward_sensitivity_lhs(const Problem& pb, const Trajectory& traj,
                                     std::size_t step, const std::vector<double>& beta);

/// Adjoint LHS sum_e (A^T - Cu^T D^{-T} B^T) at `step`, with Dirichlet
/// elimination.
SparseMatrix adjoint_lhs(const Problem& pb, const Trajectory& traj, std::size_t step,
                         const std::vector<double>& beta);

/// Number of (step, element) pairs where alpha_n - alpha_prev > eps_alpha
/// disagrees with the recorded branch flag.
std::size_t branch_flag_mismatches(ModelKind model, const Trajectory& traj, double eps_alpha);

}  // namespace ecal
