// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "ecal/assembly.hpp"
#include "ecal/element_ops.hpp"
#include "ecal/forward_solver.hpp"
#include "test_support.hpp"

using namespace ecal;
using ecal::testing::Gen;

namespace {

const std::array<double, 6> kJ2{1000.0, 0.25, 2.0, 100.0, 0.0, 0.0};
const std::array<double, 10> kHill{1000.0, 0.25, 2.0, 100.0, 1.0, 0.9, 1.05, 1.0, 1.0, 0.85};

// A generic (not right-angled) tet so that all shape gradients are distinct.
ElementContext skew_tet() {
  const Mesh m({{0.1, 0.0, 0.0}, {1.2, 0.1, 0.0}, {0.2, 0.9, 0.1}, {0.0, 0.3, 1.1}},
               {{{0, 1, 2, 3}}});
  return ElementContext::from_mesh(m, 0);
}

template <class Model>
ElementInputs<Model> make_inputs(const ElementContext& ctx, const ElemVec<double>& u,
                                 const std::array<double, Model::kParams>& beta) {
  ElementInputs<Model> in;
  in.ctx = &ctx;
  in.u = u;
  in.xi_prev = Model::virgin_state();
  in.xi = in.xi_prev;
  in.beta = beta;
  return in;
}

// Total element tangent through the local solve, as the solver builds it.
template <class Model>
Evaluation consistent_tangent(ElementInputs<Model> in) {
  Eigen::MatrixXd D;
  solve_local(in, D);
  return element_tangent(in, local_sensitivity(in, D));
}

// Residual after re-solving the local state at the perturbed dofs.
template <class Model>
Eigen::VectorXd resolved_residual(ElementInputs<Model> in) {
  Eigen::MatrixXd D;
  solve_local(in, D);
  return global_value(in);
}

double col_rel_err(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double scale = std::max({a.norm(), b.norm(), 1e-8});
  return (a - b).norm() / scale;
}

template <class Model>
void check_element_tangent_fd(const std::array<double, Model::kParams>& beta, bool expect_plastic) {
  const ElementContext ctx = skew_tet();
  Gen g(41);
  ElemVec<double> u{};
  // Stretch along x plus a small random perturbation and random pressures.
  for (int a = 0; a < 4; ++a) {
    u[4 * a + 0] = 0.02 * ctx.X[a][0] + g.uniform(-1e-3, 1e-3);
    u[4 * a + 1] = -0.007 * ctx.X[a][1] + g.uniform(-1e-3, 1e-3);
    u[4 * a + 2] = -0.007 * ctx.X[a][2] + g.uniform(-1e-3, 1e-3);
    u[4 * a + 3] = g.uniform(-1.0, 1.0);
  }
  auto in = make_inputs<Model>(ctx, u, beta);
  const Evaluation K = consistent_tangent(in);
  {
    Eigen::MatrixXd D;
    auto probe = in;
    solve_local(probe, D);
    CHECK(probe.plastic == expect_plastic);
  }
  const double h = 1e-7;
  for (int j = 0; j < kElemDofs; ++j) {
    auto ip = in, im = in;
    ip.u[j] += h;
    im.u[j] -= h;
    const Eigen::VectorXd fd = (resolved_residual(ip) - resolved_residual(im)) / (2 * h);
    CHECK(col_rel_err(K.jacobian.col(j), fd) <= 1e-6);
  }
}

template <class Model>
Trajectory loaded_problem(const Discretization& disc, const std::vector<double>& beta,
                          const LoadSchedule& loads) {
  return solve_forward<Model>(disc, beta, loads, SolverOptions{});
}

template <class Model>
void check_assembled_tangent_fd(const std::vector<double>& beta) {
  const Mesh mesh = generate_bar({1.0, 1.0, 0.2}, {2, 2, 1});
  const Discretization disc(mesh);
  REQUIRE(disc.num_dofs() <= 100);
  const LoadSchedule loads{{1.2, 2.4}, {}};
  const Trajectory traj = loaded_problem<Model>(disc, beta, loads);
  const std::size_t n = traj.steps();
  std::size_t plastic = 0;
  for (char p : traj.plastic[n]) plastic += p ? 1 : 0;
  CHECK(plastic > 0);

  const SparseMatrix K = assemble_tangent<Model>(disc, traj, n, beta, SolverOptions{});
  const Eigen::MatrixXd Kd(K);
  const double h = 1e-7;
  double worst = 0.0;
  for (std::size_t j = 0; j < disc.num_dofs(); ++j) {
    if (disc.constrained(j)) continue;
    auto Up = traj.U[n], Um = traj.U[n];
    Up[j] += h;
    Um[j] -= h;
    const auto rp = residual_with_local_solves<Model>(disc, traj, n, Up, beta, loads, {});
    const auto rm = residual_with_local_solves<Model>(disc, traj, n, Um, beta, loads, {});
    Eigen::VectorXd fd(static_cast<Eigen::Index>(disc.num_dofs()));
    for (std::size_t i = 0; i < disc.num_dofs(); ++i)
      fd(static_cast<Eigen::Index>(i)) = (rp[i] - rm[i]) / (2 * h);
    worst = std::max(worst, col_rel_err(Kd.col(static_cast<Eigen::Index>(j)), fd));
  }
  CHECK(worst <= 1e-6);
}

}  // namespace

TEST_CASE("stress-free reference state has zero residual") {
  const ElementContext ctx = skew_tet();
  const ElemVec<double> zero{};
  for (double r : global_residual_j2(zero, j2::virgin_state(), kJ2, ctx)) CHECK(r == 0.0);
  for (double r : global_residual_hill(zero, hill::virgin_state(), kHill, ctx)) CHECK(r == 0.0);
}

TEST_CASE("pure dilation with the matching pressure satisfies the pressure equation") {
  const ElementContext ctx = skew_tet();
  const double lam = 1.003;
  const double J = lam * lam * lam;
  const auto mod = j2::elastic_moduli(kJ2[j2::kE], kJ2[j2::kNu]);
  const double p = -mod.kappa * (J * J - 1.0) / (2.0 * J);
  ElemVec<double> u{};
  for (int a = 0; a < 4; ++a) {
    for (int i = 0; i < 3; ++i) u[4 * a + i] = (lam - 1.0) * ctx.X[a][i];
    u[4 * a + 3] = p;
  }
  // Dilation leaves the isochoric elastic strain at zero.
  const auto R = global_residual_j2(u, j2::virgin_state(), kJ2, ctx);
  for (int a = 0; a < 4; ++a) CHECK(std::abs(R[4 * a + 3]) <= 1e-16);
  // Constant stress gives self-equilibrated nodal forces.
  for (int i = 0; i < 3; ++i) {
    double sum = 0.0;
    for (int a = 0; a < 4; ++a) sum += R[4 * a + i];
    CHECK(std::abs(sum) <= 1e-14);
  }
}

TEST_CASE("hydrostatic Hill stress sets the pressure to minus the mean stress") {
  const ElementContext ctx = skew_tet();
  const double t = 0.7;
  hill::Local<double> xi{t, t, t, 0, 0, 0, 0};
  ElemVec<double> u{};
  for (int a = 0; a < 4; ++a) u[4 * a + 3] = -t;
  const auto R = global_residual_hill(u, xi, kHill, ctx);
  for (int a = 0; a < 4; ++a) CHECK(std::abs(R[4 * a + 3]) <= 1e-16);
  u[3] += 0.1;
  const auto R2 = global_residual_hill(u, xi, kHill, ctx);
  CHECK(std::abs(R2[3]) > 1e-4);
}

TEST_CASE("traction on a unit-area face") {
  const Mesh one({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, {{{0, 1, 2, 3}}});
  std::vector<double> R(one.num_dofs(), 0.0);
  add_traction({Face{{1, 2, 3}, 1.0}}, {0.0, 1.0, 0.0}, R);
  for (int n = 0; n < 4; ++n)
    for (int c = 0; c < 4; ++c) {
      const double expect = (c == 1 && n > 0) ? -1.0 / 3.0 : 0.0;
      CHECK(R[static_cast<std::size_t>(4 * n + c)] == doctest::Approx(expect).epsilon(1e-15));
    }

  // Total applied force over the traction face set is -h times its area.
  const Mesh bar = generate_bar({1.0, 2.0, 0.1}, {2, 4, 1});
  std::vector<double> Rb(bar.num_dofs(), 0.0);
  add_traction(bar.face_set(kTractionY), {0.0, 2.5, 0.0}, Rb);
  double fy = 0.0;
  for (std::size_t n = 0; n < bar.num_nodes(); ++n) fy += Rb[4 * n + 1];
  CHECK(fy == doctest::Approx(-2.5 * 0.1).epsilon(1e-13));
}

TEST_CASE("pressure mass matrix is exact against a degree-two quadrature rule") {
  // Four-point Gauss rule on the tet, exact for quadratics.
  const double a = 0.5854101966249685, b = 0.1381966011250105;
  const std::array<std::array<double, 4>, 4> bary{{{a, b, b, b}, {b, a, b, b}, {b, b, a, b}, {b, b, b, a}}};
  const ElementContext ctx = skew_tet();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      double q = 0.0;
      for (const auto& l : bary) q += ctx.volume / 4.0 * l[i] * l[j];
      CHECK(std::abs(tet_mass(ctx.volume, i, j) - q) <= 1e-14 * ctx.volume);
    }
  // Row sums integrate N_a: V/4.
  for (int i = 0; i < 4; ++i) {
    double s = 0.0;
    for (int j = 0; j < 4; ++j) s += tet_mass(ctx.volume, i, j);
    CHECK(std::abs(s - ctx.volume / 4.0) <= 1e-15);
  }
}

TEST_CASE("rigid translation leaves the residual unchanged") {
  const ElementContext ctx = skew_tet();
  Gen g(42);
  for (int trial = 0; trial < 10; ++trial) {
    ElemVec<double> u{};
    for (auto& x : u) x = g.uniform(-0.01, 0.01);
    const std::array<double, 3> c{g.uniform(-1, 1), g.uniform(-1, 1), g.uniform(-1, 1)};
    ElemVec<double> v = u;
    for (int a = 0; a < 4; ++a)
      for (int i = 0; i < 3; ++i) v[4 * a + i] += c[i];
    const auto xi_j = j2::Local<double>{0.001, -0.002, 0.001, 0.0005, 0.0, -0.001, 1.0, 0.0};
    const auto r1 = global_residual_j2(u, xi_j, kJ2, ctx);
    const auto r2 = global_residual_j2(v, xi_j, kJ2, ctx);
    const hill::Local<double> xi_h{0.3, -0.1, 0.2, 0.05, 0.0, 0.1, 0.0};
    const auto h1 = global_residual_hill(u, xi_h, kHill, ctx);
    const auto h2 = global_residual_hill(v, xi_h, kHill, ctx);
    for (int k = 0; k < kElemDofs; ++k) {
      CHECK(std::abs(r1[k] - r2[k]) <= 1e-12);
      CHECK(std::abs(h1[k] - h2[k]) <= 1e-12);
    }
  }
}

TEST_CASE("zero local sensitivity reduces the tangent to the partial derivative") {
  const ElementContext ctx = skew_tet();
  Gen g(43);
  ElemVec<double> u{};
  for (auto& x : u) x = g.uniform(-0.01, 0.01);
  auto in = make_inputs<J2Model>(ctx, u, kJ2);
  in.xi = {0.001, -0.002, 0.001, 0.0005, 0.0, -0.001, 1.0, 0.0};
  const Evaluation t = element_tangent(in, Eigen::MatrixXd::Zero(J2Model::kLocal, kElemDofs));
  const Evaluation p = global_jacobian(in, Wrt::U);
  CHECK((t.jacobian - p.jacobian).cwiseAbs().maxCoeff() == 0.0);
  CHECK((t.value - p.value).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("tangent at the reference state is the small-strain mixed stiffness") {
  // Independent block formulas, dofs node-major with pressure last:
  //   uu: V [mu (G_aj G_bi + d_ij G_a.G_b) - 2 mu / 3 G_ai G_bj]   (deviatoric)
  //   up: -V/4 G_ai
  //   pu: -V/4 G_bi (j2) or -V/4 kappa G_bi (hill)
  //   pp: -M_ab / kappa - V tau G_a.G_b (j2) or -M_ab - V tau G_a.G_b (hill)
  const ElementContext ctx = skew_tet();
  const auto mod = j2::elastic_moduli(1000.0, 0.25);
  const double mu = mod.mu, kappa = mod.kappa;
  const double tau = ctx.h * ctx.h / (2 * mu);
  const auto& G = ctx.G;
  const double V = ctx.volume;
  auto dot = [&](int a, int b) { return G[a][0] * G[b][0] + G[a][1] * G[b][1] + G[a][2] * G[b][2]; };

  const ElemVec<double> zero{};
  const auto Kj = consistent_tangent(make_inputs<J2Model>(ctx, zero, kJ2)).jacobian;
  std::array<double, 10> iso = kHill;
  for (int k = hill::kR11; k <= hill::kR12; ++k) iso[k] = 1.0;
  const auto Kh = consistent_tangent(make_inputs<HillModel>(ctx, zero, iso)).jacobian;

  double worst_j = 0.0, worst_h = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
          const double uu = V * (mu * (G[a][j] * G[b][i] + (i == j ? dot(a, b) : 0.0)) -
                                 2.0 * mu / 3.0 * G[a][i] * G[b][j]);
          worst_j = std::max(worst_j, std::abs(Kj(4 * a + i, 4 * b + j) - uu));
          worst_h = std::max(worst_h, std::abs(Kh(4 * a + i, 4 * b + j) - uu));
        }
        const double up = -V / 4.0 * G[a][i];
        worst_j = std::max(worst_j, std::abs(Kj(4 * a + i, 4 * b + 3) - up));
        worst_h = std::max(worst_h, std::abs(Kh(4 * a + i, 4 * b + 3) - up));
        const double pu = -V / 4.0 * G[b][i];
        worst_j = std::max(worst_j, std::abs(Kj(4 * a + 3, 4 * b + i) - pu));
        worst_h = std::max(worst_h, std::abs(Kh(4 * a + 3, 4 * b + i) - kappa * pu));
      }
      const double pp = -V * tau * dot(a, b);
      worst_j = std::max(worst_j, std::abs(Kj(4 * a + 3, 4 * b + 3) -
                                           (pp - tet_mass(V, a, b) / kappa)));
      worst_h = std::max(worst_h, std::abs(Kh(4 * a + 3, 4 * b + 3) - (pp - tet_mass(V, a, b))));
    }
  CHECK(worst_j <= 1e-10);
  CHECK(worst_h <= 1e-10);
}

TEST_CASE("element tangent matches central differences with local re-solves") {
  SUBCASE("j2 plastic") { check_element_tangent_fd<J2Model>(kJ2, true); }
  SUBCASE("hill plastic") { check_element_tangent_fd<HillModel>(kHill, true); }
  SUBCASE("j2 elastic") {
    auto b = kJ2;
    b[j2::kY] = 1e3;
    check_element_tangent_fd<J2Model>(b, false);
  }
}

TEST_CASE("assembled tangent matches the FD Jacobian of the assembled residual") {
  SUBCASE("j2") {
    check_assembled_tangent_fd<J2Model>({kJ2.begin(), kJ2.end()});
  }
  SUBCASE("hill") {
    check_assembled_tangent_fd<HillModel>({kHill.begin(), kHill.end()});
  }
}

TEST_CASE("Dirichlet elimination") {
  const Mesh mesh = generate_bar({1.0, 1.0, 0.2}, {1, 1, 1});
  const Discretization disc(mesh);
  const auto fixed = mesh.face_set_nodes(kDirichlet);
  for (std::size_t n = 0; n < mesh.num_nodes(); ++n) {
    const bool on = std::binary_search(fixed.begin(), fixed.end(), static_cast<int>(n));
    for (int c = 0; c < 3; ++c) CHECK(disc.constrained(4 * n + c) == on);
    CHECK_FALSE(disc.constrained(4 * n + 3));
  }
  SparseMatrix K = disc.zero_matrix();
  for (std::size_t e = 0; e < disc.num_elements(); ++e)
    disc.add_element_matrix(K, e, Eigen::MatrixXd::Ones(kElemDofs, kElemDofs));
  disc.finalize(K);
  const Eigen::MatrixXd Kd(K);
  for (std::size_t i = 0; i < disc.num_dofs(); ++i)
    for (std::size_t j = 0; j < disc.num_dofs(); ++j) {
      const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
      if (disc.constrained(i) || disc.constrained(j)) CHECK(Kd(ii, jj) == (i == j ? 1.0 : 0.0));
    }
  // Symmetric elimination keeps a symmetric matrix symmetric.
  CHECK((Kd - Kd.transpose()).cwiseAbs().maxCoeff() == 0.0);
}
