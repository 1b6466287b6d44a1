// SPDX-License-Identifier: Apache-2.0

#include "ecal/forward_solver.hpp"

#include <cmath>
#include <sstream>

namespace ecal {

ModelKind parse_model(const std::string& name) {
  if (name == "j2") return ModelKind::J2;
  if (name == "hill") return ModelKind::Hill;
  throw ConfigError("unknown model '" + name + "' (expected j2 or hill)");
}

std::string model_name(ModelKind kind) { return kind == ModelKind::J2 ? "j2" : "hill"; }

int num_params(ModelKind kind) {
  return kind == ModelKind::J2 ? J2Model::kParams : HillModel::kParams;
}

int num_local(ModelKind kind) { return kind == ModelKind::J2 ? J2Model::kLocal : HillModel::kLocal; }

std::vector<std::string> param_names(ModelKind kind) {
  if (kind == ModelKind::J2) return {"E", "nu", "Y", "K", "S", "D"};
  return {"E", "nu", "Y", "K", "R11", "R22", "R33", "R23", "R13", "R12"};
}

void add_step_traction(const Mesh& mesh, const LoadSchedule& loads, std::size_t step,
                       std::span<double> residual) {
  if (mesh.has_face_set(kTractionY) && loads.hy(step) != 0.0)
    add_traction(mesh.face_set(kTractionY), {0.0, loads.hy(step), 0.0}, residual);
  if (mesh.has_face_set(kTractionX) && loads.hx(step) != 0.0)
    add_traction(mesh.face_set(kTractionX), {loads.hx(step), 0.0, 0.0}, residual);
}

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

struct StepWork {
  std::vector<double> R;
  SparseMatrix K;
  std::vector<double> xi;
  std::vector<char> plastic;
  int max_local_iterations = 0;
};

// Local solves at every element for the global vector U, followed by
// assembly of R (and K when requested). Elements are visited in index order.
template <class Model>
void solve_locals_and_assemble(const Discretization& disc, const std::vector<double>& U,
                               const std::vector<double>& U_prev,
                               const std::vector<double>& xi_prev,
                               const std::array<double, Model::kParams>& beta,
                               const SolverOptions& opt, bool with_tangent, StepWork& w) {
  constexpr int L = Model::kLocal;
  const Mesh& mesh = disc.mesh();
  w.R.assign(disc.num_dofs(), 0.0);
  w.xi.resize(disc.num_elements() * L);
  w.plastic.assign(disc.num_elements(), 0);
  w.max_local_iterations = 0;
  if (with_tangent) w.K = disc.zero_matrix();

  Eigen::MatrixXd D;
  for (std::size_t e = 0; e < disc.num_elements(); ++e) {
    ElementInputs<Model> in;
    in.ctx = &disc.context(e);
    in.u = gather(mesh, U, e);
    in.u_prev = gather(mesh, U_prev, e);
    std::copy_n(xi_prev.begin() + static_cast<std::ptrdiff_t>(e * L), L, in.xi_prev.begin());
    in.beta = beta;

    const double J = det(deformation_gradient(*in.ctx, in.u));
    if (!(J > 0.0))
      throw SolverError("element " + std::to_string(e) + " inverted (det F = " + fmt(J) + ")");

    try {
      const LocalSolveStats stats = solve_local(in, D, opt.local);
      w.max_local_iterations = std::max(w.max_local_iterations, stats.iterations);
      std::copy(in.xi.begin(), in.xi.end(), w.xi.begin() + static_cast<std::ptrdiff_t>(e * L));
      w.plastic[e] = in.plastic ? 1 : 0;
      if (with_tangent) {
        const Evaluation ev = element_tangent(in, local_sensitivity(in, D));
        scatter_add(mesh, std::span<const double>(ev.value.data(), kElemDofs), e, w.R);
        disc.add_element_matrix(w.K, e, ev.jacobian);
      } else {
        const Eigen::VectorXd r = global_value(in);
        scatter_add(mesh, std::span<const double>(r.data(), kElemDofs), e, w.R);
      }
    } catch (const SolverError& err) {
      throw SolverError("element " + std::to_string(e) + ": " + err.what());
    } catch (const DomainError& err) {
      throw SolverError("element " + std::to_string(e) + ": " + err.what());
    }
  }
}

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

template <class Model>
std::vector<double> assemble_residual(const Discretization& disc, const Trajectory& traj,
                                      std::size_t step, const std::vector<double>& beta,
                                      const LoadSchedule& loads) {
  const auto b = to_params<Model>(beta);
  std::vector<double> R(disc.num_dofs(), 0.0);
  for (std::size_t e = 0; e < disc.num_elements(); ++e) {
    const auto in = inputs_at<Model>(disc, traj, step, e, b);
    const Eigen::VectorXd r = global_value(in);
    scatter_add(disc.mesh(), std::span<const double>(r.data(), kElemDofs), e, R);
  }
  add_step_traction(disc.mesh(), loads, step, R);
  disc.zero_constrained(R);
  return R;
}

template <class Model>
std::vector<double> residual_with_local_solves(const Discretization& disc,
                                               const Trajectory& traj, std::size_t step,
                                               const std::vector<double>& U,
                                               const std::vector<double>& beta,
                                               const LoadSchedule& loads,
                                               const SolverOptions& opt) {
  StepWork w;
  solve_locals_and_assemble<Model>(disc, U, traj.U[step - 1], traj.xi[step - 1],
                                   to_params<Model>(beta), opt, false, w);
  add_step_traction(disc.mesh(), loads, step, w.R);
  disc.zero_constrained(w.R);
  return w.R;
}

template <class Model>
SparseMatrix assemble_tangent(const Discretization& disc, const Trajectory& traj,
                              std::size_t step, const std::vector<double>& beta,
                              const SolverOptions& opt) {
  StepWork w;
  solve_locals_and_assemble<Model>(disc, traj.U[step], traj.U[step - 1], traj.xi[step - 1],
                                   to_params<Model>(beta), opt, true, w);
  disc.finalize(w.K);
  return w.K;
}

template <class Model>
Trajectory solve_forward(const Discretization& disc, const std::vector<double>& beta,
                         const LoadSchedule& loads, const SolverOptions& opt,
                         Counters* counters) {
  const auto b = to_params<Model>(beta);
  if (!loads.traction_x.empty() && loads.traction_x.size() != loads.traction_y.size())
    throw ConfigError("traction_x and traction_y schedules differ in length");
  if (counters) ++counters->nonlinear_solves;

  Trajectory traj;
  traj.num_local = Model::kLocal;
  traj.U.emplace_back(disc.num_dofs(), 0.0);
  {
    std::vector<double> xi0;
    xi0.reserve(disc.num_elements() * Model::kLocal);
    const auto v = Model::virgin_state();
    for (std::size_t e = 0; e < disc.num_elements(); ++e) xi0.insert(xi0.end(), v.begin(), v.end());
    traj.xi.push_back(std::move(xi0));
  }
  traj.plastic.emplace_back(disc.num_elements(), 0);

  LinearSolver solver;
  StepWork w;
  for (std::size_t n = 1; n <= loads.steps(); ++n) {
    std::vector<double> U = traj.U[n - 1];
    StepDiagnostics diag;
    for (int it = 0;; ++it) {
      solve_locals_and_assemble<Model>(disc, U, traj.U[n - 1], traj.xi[n - 1], b, opt, true, w);
      diag.max_local_iterations = std::max(diag.max_local_iterations, w.max_local_iterations);
      add_step_traction(disc.mesh(), loads, n, w.R);
      disc.zero_constrained(w.R);
      const double norm = norm2(w.R);
      diag.residual_norms.push_back(norm);
      if (!std::isfinite(norm))
        throw SolverError("global residual is not finite at step " + std::to_string(n));
      if (norm <= opt.tol_global) break;
      if (it == opt.max_global_iters)
        throw SolverError("global Newton did not converge at step " + std::to_string(n) +
                          " in " + std::to_string(opt.max_global_iters) +
                          " iterations (|R| = " + fmt(norm) + ")");
      disc.finalize(w.K);
      solver.factorize(w.K);
      const Eigen::VectorXd dU =
          solver.solve(-Eigen::Map<const Eigen::VectorXd>(w.R.data(), static_cast<Eigen::Index>(w.R.size())));
      if (counters) ++counters->newton_linear_solves;
      for (std::size_t d = 0; d < U.size(); ++d) U[d] += dU(static_cast<Eigen::Index>(d));
      diag.newton_iterations = it + 1;
    }
    for (char p : w.plastic) diag.plastic_elements += p ? 1 : 0;
    traj.U.push_back(std::move(U));
    traj.xi.push_back(w.xi);
    traj.plastic.push_back(w.plastic);
    traj.diagnostics.push_back(std::move(diag));
  }
  return traj;
}

Trajectory solve_forward(ModelKind kind, const Discretization& disc,
                         const std::vector<double>& beta, const LoadSchedule& loads,
                         const SolverOptions& opt, Counters* counters) {
  if (kind == ModelKind::J2) return solve_forward<J2Model>(disc, beta, loads, opt, counters);
  return solve_forward<HillModel>(disc, beta, loads, opt, counters);
}

#define ECAL_INSTANTIATE(M)                                                                     \
  template std::vector<double> assemble_residual<M>(const Discretization&, const Trajectory&,  \
                                                    std::size_t, const std::vector<double>&,    \
                                                    const LoadSchedule&);                       \
  template std::vector<double> residual_with_local_solves<M>(                                  \
      const Discretization&, const Trajectory&, std::size_t, const std::vector<double>&,        \
      const std::vector<double>&, const LoadSchedule&, const SolverOptions&);                   \
  template SparseMatrix assemble_tangent<M>(const Discretization&, const Trajectory&,          \
                                            std::size_t, const std::vector<double>&,            \
                                            const SolverOptions&);                              \
  template Trajectory solve_forward<M>(const Discretization&, const std::vector<double>&,      \
                                       const LoadSchedule&, const SolverOptions&, Counters*);

ECAL_INSTANTIATE(J2Model)
ECAL_INSTANTIATE(HillModel)
#undef ECAL_INSTANTIATE

}  // namespace ecal
