// SPDX-License-Identifier: Apache-2.0
//
// Nested Newton forward solve: per-element local solves inside a global
// Newton iteration on displacement and pressure, over a load schedule.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ecal/assembly.hpp"
#include "ecal/element_ops.hpp"

namespace ecal {

enum class ModelKind { J2, Hill };

ModelKind parse_model(const std::string& name);
std::string model_name(ModelKind kind);
int num_params(ModelKind kind);
int num_local(ModelKind kind);
std::vector<std::string> param_names(ModelKind kind);

/// Tractions per load step on the traction_y face set (y component) and the
/// traction_x face set (x component).
struct LoadSchedule {
  std::vector<double> traction_y;
  std::vector<double> traction_x;

  std::size_t steps() const { return traction_y.size(); }
  double hx(std::size_t step) const { return traction_x.empty() ? 0.0 : traction_x[step - 1]; }
  double hy(std::size_t step) const { return traction_y[step - 1]; }
};

struct SolverOptions {
  double tol_global = 1e-10;
  int max_global_iters = 25;
  LocalSolveOptions local;
};

/// Instrumented work counters.
struct Counters {
  std::uint64_t nonlinear_solves = 0;
  std::uint64_t newton_linear_solves = 0;
  std::uint64_t sensitivity_factorizations = 0;
  std::uint64_t sensitivity_rhs_columns = 0;
  std::uint64_t adjoint_linear_solves = 0;
  std::uint64_t objective_evals = 0;
  std::uint64_t gradient_evals = 0;
};

struct StepDiagnostics {
  int newton_iterations = 0;
  std::vector<double> residual_norms;
  int max_local_iterations = 0;
  std::size_t plastic_elements = 0;
};

/// Converged states for steps 0..N_L. Step 0 is the virgin state.
struct Trajectory {
  int num_local = 0;
  std::vector<std::vector<double>> U;        // [step][dof]
  std::vector<std::vector<double>> xi;       // [step][elem * num_local + k]
  std::vector<std::vector<char>> plastic;    // [step][elem]
  std::vector<StepDiagnostics> diagnostics;  // [step - 1]

  std::size_t steps() const { return U.empty() ? 0 : U.size() - 1; }
  std::span<const double> local_state(std::size_t step, std::size_t elem) const {
    return {xi[step].data() + elem * static_cast<std::size_t>(num_local),
            static_cast<std::size_t>(num_local)};
  }
};

/// Element inputs at (step, elem) read from a converged trajectory.
template <class Model>
ElementInputs<Model> inputs_at(const Discretization& disc, const Trajectory& traj,
                               std::size_t step, std::size_t elem,
                               const std::array<double, Model::kParams>& beta) {
  ElementInputs<Model> in;
  in.ctx = &disc.context(elem);
  in.u = gather(disc.mesh(), traj.U[step], elem);
  in.u_prev = gather(disc.mesh(), traj.U[step - 1], elem);
  const auto cur = traj.local_state(step, elem);
  const auto prev = traj.local_state(step - 1, elem);
  std::copy(cur.begin(), cur.end(), in.xi.begin());
  std::copy(prev.begin(), prev.end(), in.xi_prev.begin());
  in.beta = beta;
  in.plastic = traj.plastic[step][elem] != 0;
  return in;
}

template <class Model>
std::array<double, Model::kParams> to_params(const std::vector<double>& beta) {
  if (beta.size() != static_cast<std::size_t>(Model::kParams))
    throw ConfigError(std::string(Model::kName) + " model expects " +
                      std::to_string(Model::kParams) + " parameters, got " +
                      std::to_string(beta.size()));
  std::array<double, Model::kParams> b;
  std::copy(beta.begin(), beta.end(), b.begin());
  return b;
}

/// Assembles the global residual (internal forces plus tractions) for the
/// state at `step` without re-solving local states. Constrained rows are
/// zeroed.
template <class Model>
std::vector<double> assemble_residual(const Discretization& disc, const Trajectory& traj,
                                      std::size_t step, const std::vector<double>& beta,
                                      const LoadSchedule& loads);

/// Assembles the residual with local states re-solved for the trial global
/// vector U (local states of `step - 1` from the trajectory).
template <class Model>
std::vector<double> residual_with_local_solves(const Discretization& disc,
                                               const Trajectory& traj, std::size_t step,
                                               const std::vector<double>& U,
                                               const std::vector<double>& beta,
                                               const LoadSchedule& loads,
                                               const SolverOptions& opt);

/// Consistent tangent at a converged step (constrained rows/columns carry a
/// unit diagonal).
template <class Model>
SparseMatrix assemble_tangent(const Discretization& disc, const Trajectory& traj,
                              std::size_t step, const std::vector<double>& beta,
                              const SolverOptions& opt);

template <class Model>
Trajectory solve_forward(const Discretization& disc, const std::vector<double>& beta,
                         const LoadSchedule& loads, const SolverOptions& opt,
                         Counters* counters = nullptr);

/// Runtime-dispatched forward solve.
Trajectory solve_forward(ModelKind kind, const Discretization& disc,
                         const std::vector<double>& beta, const LoadSchedule& loads,
                         const SolverOptions& opt, Counters* counters = nullptr);

/// Adds the traction load of `step` to a global residual.
void add_step_traction(const Mesh& mesh, const LoadSchedule& loads, std::size_t step,
                       std::span<double> residual);

}  // namespace ecal
