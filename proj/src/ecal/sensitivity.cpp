// SPDX-License-Identifier: Apache-2.0

#include "ecal/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ecal {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void check_problem(const Problem& pb, const std::vector<double>& beta) {
  if (!pb.disc || !pb.objective) throw ConfigError("problem is missing its mesh or data");
  if (static_cast<int>(beta.size()) != num_params(pb.model))
    throw ConfigError(model_name(pb.model) + " model expects " +
                      std::to_string(num_params(pb.model)) + " parameters, got " +
                      std::to_string(beta.size()));
  for (int k : pb.active)
    if (k < 0 || k >= num_params(pb.model))
      throw ConfigError("active parameter index " + std::to_string(k) + " out of range");
  if (pb.loads.steps() != pb.objective->steps())
    throw ConfigError("load schedule has " + std::to_string(pb.loads.steps()) +
                      " steps but the data has " + std::to_string(pb.objective->steps()));
}

MatrixXd gather_rows(const Mesh& mesh, const MatrixXd& global, std::size_t e) {
  const auto dofs = mesh.element_dofs(e);
  MatrixXd out(kElemDofs, global.cols());
  for (int i = 0; i < kElemDofs; ++i) out.row(i) = global.row(dofs[static_cast<std::size_t>(i)]);
  return out;
}

void scatter_rows(const Mesh& mesh, const MatrixXd& local, std::size_t e, MatrixXd& global) {
  const auto dofs = mesh.element_dofs(e);
  for (int i = 0; i < kElemDofs; ++i) global.row(dofs[static_cast<std::size_t>(i)]) += local.row(i);
}

VectorXd objective_gradient(const Problem& pb, const Trajectory& traj, std::size_t step) {
  std::vector<double> g(pb.disc->num_dofs(), 0.0);
  pb.objective->add_step_gradient(step, traj.U[step], g);
  return Eigen::Map<const VectorXd>(g.data(), static_cast<Index>(g.size()));
}

Eigen::PartialPivLU<MatrixXd> factor_local(const MatrixXd& M, std::size_t e, std::size_t n) {
  Eigen::PartialPivLU<MatrixXd> lu(M);
  // PartialPivLU does not flag singular input; the pivot product does.
  const double d = std::abs(lu.determinant());
  if (!(d > 0.0) || !std::isfinite(d))
    throw SolverError("element " + std::to_string(e) + ": singular local Jacobian at step " +
                      std::to_string(n));
  return lu;
}

template <class Model>
std::vector<double> forward_impl(const Problem& pb, const Trajectory& traj,
                                 const std::vector<double>& beta_vec, Counters* counters) {
  const auto beta = to_params<Model>(beta_vec);
  const Discretization& disc = *pb.disc;
  const Mesh& mesh = disc.mesh();
  const auto na = static_cast<Index>(pb.active.size());
  const auto ndof = static_cast<Index>(disc.num_dofs());
  const std::size_t ne = disc.num_elements();

  MatrixXd X = MatrixXd::Zero(ndof, na);
  std::vector<MatrixXd> Y(ne, MatrixXd::Zero(Model::kLocal, na));
  std::vector<MatrixXd> DinvCu(ne), DinvG(ne);
  std::vector<double> grad(pb.active.size(), 0.0);
  LinearSolver solver;

  for (std::size_t n = 1; n <= traj.steps(); ++n) {
    SparseMatrix K = disc.zero_matrix();
    MatrixXd F = MatrixXd::Zero(ndof, na);
    for (std::size_t e = 0; e < ne; ++e) {
      const auto in = inputs_at<Model>(disc, traj, n, e, beta);
      const ElementBlocks b = element_blocks(in, pb.active);
      // Local RHS: everything in dC/dbeta except the unknown Cu X term.
      const MatrixXd G = -(b.Cb + b.Cup * gather_rows(mesh, X, e) + b.Cxp * Y[e]);
      const auto lu = factor_local(b.D, e, n);
      DinvCu[e] = lu.solve(b.Cu);
      DinvG[e] = lu.solve(G);
      disc.add_element_matrix(K, e, b.A - b.B * DinvCu[e]);
      scatter_rows(mesh, -b.Rb - b.B * DinvG[e], e, F);
    }
    disc.finalize(K);
    disc.zero_constrained(F);
    solver.factorize(K);
    X = solver.solve(F);
    if (counters) {
      ++counters->sensitivity_factorizations;
      counters->sensitivity_rhs_columns += static_cast<std::uint64_t>(na);
    }
    for (std::size_t e = 0; e < ne; ++e) Y[e] = DinvG[e] - DinvCu[e] * gather_rows(mesh, X, e);

    const VectorXd dJ = objective_gradient(pb, traj, n);
    const VectorXd contrib = X.transpose() * dJ;
    for (Index k = 0; k < na; ++k) grad[static_cast<std::size_t>(k)] += contrib(k);
  }
  return grad;
}

template <class Model>
std::vector<double> adjoint_impl(const Problem& pb, const Trajectory& traj,
                                 const std::vector<double>& beta_vec, Counters* counters) {
  const auto beta = to_params<Model>(beta_vec);
  const Discretization& disc = *pb.disc;
  const Mesh& mesh = disc.mesh();
  const auto na = static_cast<Index>(pb.active.size());
  const auto ndof = static_cast<Index>(disc.num_dofs());
  const std::size_t ne = disc.num_elements();

  // History terms carried from step n + 1 to step n; zero at the last step.
  VectorXd f_hist = VectorXd::Zero(ndof);
  std::vector<VectorXd> g_hist(ne, VectorXd::Zero(Model::kLocal));

  struct Saved {
    MatrixXd W;    // D^{-T} B^T
    VectorXd w_g;  // D^{-T} g
    MatrixXd Rb, Cb, Cup, Cxp;
  };
  std::vector<Saved> saved(ne);
  std::vector<double> grad(pb.active.size(), 0.0);
  LinearSolver solver;

  for (std::size_t n = traj.steps(); n >= 1; --n) {
    SparseMatrix K = disc.zero_matrix();
    VectorXd rhs = -objective_gradient(pb, traj, n) + f_hist;
    for (std::size_t e = 0; e < ne; ++e) {
      const auto in = inputs_at<Model>(disc, traj, n, e, beta);
      ElementBlocks b = element_blocks(in, pb.active);
      const auto lut = factor_local(b.D.transpose(), e, n);
      Saved& s = saved[e];
      s.W = lut.solve(b.B.transpose());
      s.w_g = lut.solve(g_hist[e]);
      disc.add_element_matrix(K, e, b.A.transpose() - b.Cu.transpose() * s.W);
      const VectorXd r = -b.Cu.transpose() * s.w_g;
      const auto dofs = mesh.element_dofs(e);
      for (int i = 0; i < kElemDofs; ++i) rhs(dofs[static_cast<std::size_t>(i)]) += r(i);
      s.Rb = std::move(b.Rb);
      s.Cb = std::move(b.Cb);
      s.Cup = std::move(b.Cup);
      s.Cxp = std::move(b.Cxp);
    }
    disc.finalize(K);
    disc.zero_constrained(std::span<double>(rhs.data(), static_cast<std::size_t>(ndof)));
    solver.factorize(K);
    const VectorXd eta = solver.solve(rhs);
    if (counters) ++counters->adjoint_linear_solves;

    VectorXd f_next = VectorXd::Zero(ndof);
    for (std::size_t e = 0; e < ne; ++e) {
      const Saved& s = saved[e];
      const auto dofs = mesh.element_dofs(e);
      VectorXd eta_e(kElemDofs);
      for (int i = 0; i < kElemDofs; ++i) eta_e(i) = eta(dofs[static_cast<std::size_t>(i)]);
      const VectorXd phi = s.w_g - s.W * eta_e;
      const VectorXd contrib = s.Rb.transpose() * eta_e + s.Cb.transpose() * phi;
      for (Index k = 0; k < na; ++k) grad[static_cast<std::size_t>(k)] += contrib(k);
      const VectorXd fe = -s.Cup.transpose() * phi;
      for (int i = 0; i < kElemDofs; ++i) f_next(dofs[static_cast<std::size_t>(i)]) += fe(i);
      g_hist[e] = -s.Cxp.transpose() * phi;
    }
    f_hist = std::move(f_next);
  }
  return grad;
}

template <class Model>
SparseMatrix lhs_impl(const Problem& pb, const Trajectory& traj, std::size_t step,
                      const std::vector<double>& beta_vec, bool transposed) {
  const auto beta = to_params<Model>(beta_vec);
  const Discretization& disc = *pb.disc;
  SparseMatrix K = disc.zero_matrix();
  for (std::size_t e = 0; e < disc.num_elements(); ++e) {
    const auto in = inputs_at<Model>(disc, traj, step, e, beta);
    const ElementBlocks b = element_blocks(in, pb.active);
    if (transposed) {
      const MatrixXd W = factor_local(b.D.transpose(), e, step).solve(b.B.transpose());
      disc.add_element_matrix(K, e, b.A.transpose() - b.Cu.transpose() * W);
    } else {
      disc.add_element_matrix(K, e, b.A - b.B * factor_local(b.D, e, step).solve(b.Cu));
    }
  }
  disc.finalize(K);
  return K;
}

}  // namespace

ForwardResult evaluate(const Problem& pb, const std::vector<double>& beta, Counters* counters) {
  check_problem(pb, beta);
  ForwardResult r;
  r.traj = solve_forward(pb.model, *pb.disc, beta, pb.loads, pb.solver, counters);
  r.J = pb.objective->evaluate(r.traj);
  return r;
}

std::vector<double> gradient_forward(const Problem& pb, const Trajectory& traj,
                                     const std::vector<double>& beta, Counters* counters) {
  check_problem(pb, beta);
  if (pb.model == ModelKind::J2) return forward_impl<J2Model>(pb, traj, beta, counters);
  return forward_impl<HillModel>(pb, traj, beta, counters);
}

std::vector<double> gradient_adjoint(const Problem& pb, const Trajectory& traj,
                                     const std::vector<double>& beta, Counters* counters) {
  check_problem(pb, beta);
  if (pb.model == ModelKind::J2) return adjoint_impl<J2Model>(pb, traj, beta, counters);
  return adjoint_impl<HillModel>(pb, traj, beta, counters);
}

FdGradient gradient_fd(const Problem& pb, const std::vector<double>& beta, const FdOptions& opt,
                       Counters* counters) {
  FdGradient out;
  out.J = evaluate(pb, beta, counters).J.total;
  for (int k : pb.active) {
    const auto i = static_cast<std::size_t>(k);
    const double h = opt.step > 0.0
                         ? opt.step
                         : std::sqrt(std::numeric_limits<double>::epsilon()) * (1.0 + std::abs(beta[i]));
    std::vector<double> bp = beta;
    bp[i] += h;
    const double jp = evaluate(pb, bp, counters).J.total;
    if (opt.scheme == FdScheme::Forward) {
      out.gradient.push_back((jp - out.J) / h);
    } else {
      std::vector<double> bm = beta;
      bm[i] -= h;
      const double jm = evaluate(pb, bm, counters).J.total;
      out.gradient.push_back((jp - jm) / (2.0 * h));
    }
  }
  return out;
}

std::vector<double> default_fd_steps() {
  std::vector<double> s;
  for (int k = 0; k <= 12; ++k) s.push_back(std::pow(10.0, -k));
  return s;
}

std::vector<FdSweepPoint> fd_sweep(const Problem& pb, const std::vector<double>& beta,
                                   const std::vector<double>& direction,
                                   const std::vector<double>& steps, Counters* counters) {
  if (direction.size() != pb.active.size())
    throw ConfigError("FD direction has " + std::to_string(direction.size()) +
                      " entries, expected one per active parameter (" +
                      std::to_string(pb.active.size()) + ")");
  std::vector<FdSweepPoint> out;
  for (double eps : steps) {
    std::vector<double> bp = beta, bm = beta;
    for (std::size_t k = 0; k < pb.active.size(); ++k) {
      const auto i = static_cast<std::size_t>(pb.active[k]);
      bp[i] += eps * direction[k];
      bm[i] -= eps * direction[k];
    }
    const double jp = evaluate(pb, bp, counters).J.total;
    const double jm = evaluate(pb, bm, counters).J.total;
    out.push_back({eps, (jp - jm) / (2.0 * eps)});
  }
  return out;
}

std::vector<double> fd_check_errors(const std::vector<FdSweepPoint>& sweep,
                                    const std::vector<double>& gradient,
                                    const std::vector<double>& direction) {
  if (gradient.size() != direction.size())
    throw DimensionError("gradient and direction lengths differ");
  double dir = 0.0;
  for (std::size_t k = 0; k < gradient.size(); ++k) dir += gradient[k] * direction[k];
  std::vector<double> e;
  e.reserve(sweep.size());
  for (const auto& p : sweep) e.push_back(std::abs(dir - p.directional));
  return e;
}

VCurve analyze_v_curve(const std::vector<double>& errors, double scale) {
  VCurve v;
  if (errors.empty()) return v;
  v.argmin = static_cast<std::size_t>(std::min_element(errors.begin(), errors.end()) - errors.begin());
  v.min_error = errors[v.argmin];
  v.min_relative = scale > 0.0 ? v.min_error / scale : std::numeric_limits<double>::infinity();
  const bool interior = v.argmin > 0 && v.argmin + 1 < errors.size();
  v.v_shaped = interior && errors.front() >= 100.0 * v.min_error &&
               errors.back() >= 100.0 * v.min_error;
  return v;
}

SparseMatrix forward_sensitivity_lhs(const Problem& pb, const Trajectory& traj,
                                     std::size_t step, const std::vector<double>& beta) {
  check_problem(pb, beta);
  if (pb.model == ModelKind::J2) return lhs_impl<J2Model>(pb, traj, step, beta, false);
  return lhs_impl<HillModel>(pb, traj, step, beta, false);
}

SparseMatrix adjoint_lhs(const Problem& pb, const Trajectory& traj, std::size_t step,
                         const std::vector<double>& beta) {
  check_problem(pb, beta);
  if (pb.model == ModelKind::J2) return lhs_impl<J2Model>(pb, traj, step, beta, true);
  return lhs_impl<HillModel>(pb, traj, step, beta, true);
}

std::size_t branch_flag_mismatches(ModelKind model, const Trajectory& traj, double eps_alpha) {
  const std::size_t a = model == ModelKind::J2 ? j2::kAlpha : hill::kAlpha;
  std::size_t bad = 0;
  for (std::size_t n = 1; n <= traj.steps(); ++n)
    for (std::size_t e = 0; e < traj.plastic[n].size(); ++e) {
      const double d = traj.local_state(n, e)[a] - traj.local_state(n - 1, e)[a];
      if ((d > eps_alpha) != (traj.plastic[n][e] != 0)) ++bad;
    }
  return bad;
}

}  // namespace ecal
