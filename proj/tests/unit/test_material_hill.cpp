// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <vector>

#include "doctest.h"
#include "ecal/element_ops.hpp"
#include "ecal/material_hill.hpp"
#include "test_support.hpp"

using namespace ecal;
using ecal::testing::Gen;
using ecal::testing::max_abs_diff;
using ecal::testing::rel_err;

namespace {

using HP = hill::Params<double>;

HP params(double r11, double r22, double r33, double r23, double r13, double r12) {
  return {1000.0, 0.25, 2.0, 100.0, r11, r22, r33, r23, r13, r12};
}
const HP kIso = params(1, 1, 1, 1, 1, 1);
const HP kAniso = params(1.0, 0.9, 1.05, 1.0, 1.0, 0.85);

Mat3<double> stress_of(const hill::Local<double>& xi) {
  return from_sym(Sym6<double>{xi[0], xi[1], xi[2], xi[3], xi[4], xi[5]});
}

struct PointResult {
  hill::Local<double> xi;
  bool plastic;
  int iterations;
};

PointResult solve_point(const Mat3<double>& F_n, const Mat3<double>& F_prev,
                        const hill::Local<double>& xi_prev, const HP& beta) {
  static const ElementContext ctx = ecal::testing::unit_tet_context();
  ElementInputs<HillModel> in;
  in.ctx = &ctx;
  in.u = ecal::testing::dofs_for(F_n);
  in.u_prev = ecal::testing::dofs_for(F_prev);
  in.xi_prev = xi_prev;
  in.beta = beta;
  Eigen::MatrixXd D;
  const auto stats = solve_local(in, D);
  return {in.xi, in.plastic, stats.iterations};
}

// Independent oracle: small-strain backward-Euler radial return for von Mises
// with linear hardening, driven by the increment d.
struct Radial {
  Mat3<double> T;
  double alpha;
};

Radial radial_return(const Radial& prev, const Mat3<double>& d, double E, double nu, double Y,
                     double K) {
  const double mu = E / (2 * (1 + nu));
  const double lambda = E * nu / ((1 + nu) * (1 - 2 * nu));
  Mat3<double> T = prev.T + (2 * mu) * d;
  const double vol = lambda * trace(d);
  for (int i = 0; i < 3; ++i) T(i, i) += vol;
  const Mat3<double> s = dev(T);
  const double q = std::sqrt(1.5 * ddot(s, s));
  const double f = q - Y - K * prev.alpha;
  if (f <= 0.0) return {T, prev.alpha};
  const double dg = f / (3 * mu + K);
  const Mat3<double> s_new = (1.0 - 3 * mu * dg / q) * s;
  Mat3<double> out = s_new;
  const double p = trace(T) / 3.0;
  for (int i = 0; i < 3; ++i) out(i, i) += p;
  return {out, prev.alpha + dg};
}

Mat3<double> diag(double a, double b, double c) {
  Mat3<double> m = Mat3<double>::zero();
  m(0, 0) = a;
  m(1, 1) = b;
  m(2, 2) = c;
  return m;
}

}  // namespace

TEST_CASE("Hill coefficients") {
  const std::array<double, 6> ones{1, 1, 1, 1, 1, 1};
  const auto c = hill::hill_coefficients(2.0, ones);
  for (double v : {c.F, c.G, c.H}) CHECK(v == doctest::Approx(0.5).epsilon(1e-15));
  for (double v : {c.L, c.M, c.N}) CHECK(v == doctest::Approx(1.5).epsilon(1e-15));

  const auto t = hill::hill_coefficients(1.0, std::array<double, 6>{1, 1, 100, 1, 1, 1});
  CHECK(t.F == doctest::Approx(5e-5).epsilon(1e-12));
  CHECK(t.G == doctest::Approx(5e-5).epsilon(1e-12));
  CHECK(t.H == doctest::Approx(0.99995).epsilon(1e-14));

  // The coefficients depend on the ratios only.
  const std::array<double, 6> r{1.0, 0.9, 1.05, 1.1, 0.95, 0.85};
  const auto a = hill::hill_coefficients(1.0, r);
  const auto b = hill::hill_coefficients(37.0, r);
  CHECK(rel_err(a.F, b.F) <= 1e-14);
  CHECK(rel_err(a.H, b.H) <= 1e-14);
  CHECK(rel_err(a.N, b.N) <= 1e-14);

  CHECK_THROWS_AS(hill::hill_coefficients(1.0, std::array<double, 6>{1, 0, 1, 1, 1, 1}),
                  DomainError);
  CHECK_THROWS_AS(hill::hill_coefficients(0.0, ones), DomainError);
}

TEST_CASE("Hill function reduces to directional yield stresses") {
  const std::array<double, 6> r{1.0, 0.9, 1.05, 1.1, 0.95, 0.85};
  const double Y = 2.0;
  const auto c = hill::hill_coefficients(Y, r);
  for (int i = 0; i < 3; ++i) {
    Sym6<double> T{};
    T[i] = r[i] * Y;  // uniaxial stress at the directional yield stress
    CHECK(hill::hill_phi(T, c) == doctest::Approx(Y).epsilon(1e-14));
  }
  for (int k = 3; k < 6; ++k) {
    Sym6<double> T{};
    T[k] = r[k] * Y / std::sqrt(3.0);
    CHECK(hill::hill_phi(T, c) == doctest::Approx(Y).epsilon(1e-14));
  }
  // Hydrostatic stress does not load the Hill function.
  // q is quadratic in T, so its derivative also vanishes there.
  const auto phi0 = hill::hill_phi(Sym6<ADouble>{seed_unit(3.0, 0, 1), 3.0, 3.0, 0, 0, 0},
                                   hill::Coefficients<ADouble>{c.F, c.G, c.H, c.L, c.M, c.N});
  CHECK(phi0.value() == 0.0);
  CHECK(phi0.d(0) == 0.0);
  CHECK(hill::hill_phi(Sym6<double>{3, 3, 3, 0, 0, 0}, c) == 0.0);
}

TEST_CASE("property: isotropic Hill equals von Mises") {
  const auto c = hill::hill_coefficients(1.0, std::array<double, 6>{1, 1, 1, 1, 1, 1});
  Gen g(31);
  for (int trial = 0; trial < 100; ++trial) {
    const auto T = g.sym(5.0);
    const Mat3<double> s = dev(from_sym(T));
    const double vm = std::sqrt(1.5 * ddot(s, s));
    CHECK(rel_err(hill::hill_phi(T, c), vm) <= 1e-12);
  }
}

TEST_CASE("property: Hill normal is traceless and matches central differences") {
  Gen g(32);
  for (int trial = 0; trial < 30; ++trial) {
    std::array<double, 6> r;
    for (auto& x : r) x = g.uniform(0.7, 1.3);
    const auto c = hill::hill_coefficients(2.0, r);
    const auto T = g.sym(3.0);
    const auto n = hill::hill_normal(T, c);
    CHECK(std::abs(n[0] + n[1] + n[2]) <= 1e-12);

    const auto dir = g.sym(1.0);
    const double h = 1e-6;
    Sym6<double> tp = T, tm = T;
    for (int k = 0; k < 6; ++k) {
      tp[k] += h * dir[k];
      tm[k] -= h * dir[k];
    }
    const double fd = (hill::hill_phi(tp, c) - hill::hill_phi(tm, c)) / (2 * h);
    // Tensor contraction n : dT counts each shear twice.
    CHECK(std::abs(ddot(from_sym(n), from_sym(dir)) - fd) <= 1e-8);
  }

  // Isotropic case: n = 3/2 s / phi.
  const auto ci = hill::hill_coefficients(1.0, std::array<double, 6>{1, 1, 1, 1, 1, 1});
  const Sym6<double> T{1.0, -0.5, 0.2, 0.3, -0.1, 0.4};
  const auto n = hill::hill_normal(T, ci);
  const Mat3<double> s = dev(from_sym(T));
  const auto expect = (1.5 / hill::hill_phi(T, ci)) * s;
  CHECK(max_abs_diff(from_sym(n), expect) <= 1e-14);
}

TEST_CASE("corotational kinematics") {
  const auto I = Mat3<double>::identity();
  const auto Q = Gen::axis_rotation({0, 0, 1}, 0.4);
  const auto rigid = hill::corotational_kinematics(Q, Q);
  CHECK(max_abs_diff(rigid.d, Mat3<double>::zero()) <= 1e-15);
  CHECK(max_abs_diff(rigid.R, Q) <= 1e-15);

  const auto st = hill::corotational_kinematics(diag(1.1, 1.0, 0.9), I);
  CHECK(max_abs_diff(st.d, diag(1 - 1 / 1.1, 0.0, 1 - 1 / 0.9)) <= 1e-15);
  CHECK(max_abs_diff(st.R, I) <= 1e-15);

  // Superposed rigid rotation leaves the unrotated rate unchanged.
  Gen g(33);
  for (int trial = 0; trial < 20; ++trial) {
    const auto Fp = g.near_identity(0.1), Fn = g.near_identity(0.1), R = g.rotation();
    const auto a = hill::corotational_kinematics(Fn, Fp);
    const auto b = hill::corotational_kinematics(R * Fn, R * Fp);
    CHECK(max_abs_diff(a.d, b.d) <= 1e-13);
    CHECK(max_abs_diff(R * a.R, b.R) <= 1e-13);
  }
}

TEST_CASE("elastic step: residual zero at the trial state, one iteration") {
  Gen g(34);
  const auto F_prev = g.near_identity(1e-4);
  const auto F_n = g.near_identity(1e-4);
  const auto t = hill::trial_state(F_n, F_prev, hill::virgin_state(), kAniso);
  CHECK(t.f < 0.0);
  const auto C = hill::local_residual(t.xi, hill::virgin_state(), F_n, F_prev, kAniso, false);
  for (double c : C) CHECK(std::abs(c) <= 1e-14);
  const auto r = solve_point(F_n, F_prev, hill::virgin_state(), kAniso);
  CHECK_FALSE(r.plastic);
  CHECK(r.iterations == 1);
}

TEST_CASE("uniaxial strain path matches the radial return oracle") {
  const auto I = Mat3<double>::identity();
  hill::Local<double> xi = hill::virgin_state();
  Radial ref{Mat3<double>::zero(), 0.0};
  Mat3<double> F_prev = I;
  bool yielded = false;
  for (int n = 1; n <= 12; ++n) {
    const double eps = 0.001 * n;
    const auto F_n = diag(1.0 + eps, 1.0, 1.0);
    const double d11 = (F_n(0, 0) - F_prev(0, 0)) / F_n(0, 0);
    ref = radial_return(ref, diag(d11, 0.0, 0.0), 1000.0, 0.25, 2.0, 100.0);
    const auto r = solve_point(F_n, F_prev, xi, kIso);
    xi = r.xi;
    F_prev = F_n;
    yielded = yielded || r.plastic;
    CHECK(max_abs_diff(stress_of(xi), ref.T) <= 1e-8);
    CHECK(std::abs(xi[hill::kAlpha] - ref.alpha) <= 1e-10);
  }
  CHECK(yielded);
}

TEST_CASE("property: single coaxial steps match the radial return oracle") {
  // Symmetric positive F has R = I and d = sym((F - I) F^{-1}) exactly.
  Gen g(35);
  int plastic = 0;
  for (int trial = 0; trial < 40; ++trial) {
    Mat3<double> F = Mat3<double>::identity() + from_sym(g.sym(0.006));
    const auto Tprev = g.sym(1.0);
    hill::Local<double> xi_prev{Tprev[0], Tprev[1], Tprev[2], Tprev[3], Tprev[4], Tprev[5], 0.002};
    const auto I = Mat3<double>::identity();
    const auto kin = hill::corotational_kinematics(F, I);
    REQUIRE(max_abs_diff(kin.R, I) <= 1e-14);
    const Mat3<double> d = sym((F - I) * inverse(F));
    const auto ref = radial_return({stress_of(xi_prev), 0.002}, d, 1000.0, 0.25, 2.0, 100.0);
    const auto r = solve_point(F, I, xi_prev, kIso);
    plastic += r.plastic ? 1 : 0;
    CHECK(max_abs_diff(stress_of(r.xi), ref.T) <= 1e-8);
    CHECK(std::abs(r.xi[hill::kAlpha] - ref.alpha) <= 1e-10);
  }
  CHECK(plastic > 5);
}

TEST_CASE("plastic return: converged, on the yield surface, isochoric flow") {
  const auto I = Mat3<double>::identity();
  const auto F = diag(1.01, 1.0, 0.995);
  const auto r = solve_point(F, I, hill::virgin_state(), kAniso);
  REQUIRE(r.plastic);
  const auto C = hill::local_residual(r.xi, hill::virgin_state(), F, I, kAniso, true);
  double n2 = 0.0;
  for (double c : C) n2 += c * c;
  CHECK(std::sqrt(n2) <= 1e-12);

  const Sym6<double> T{r.xi[0], r.xi[1], r.xi[2], r.xi[3], r.xi[4], r.xi[5]};
  const auto coeff = hill::coefficients_of(kAniso);
  CHECK(std::abs(hill::hill_phi(T, coeff) - 2.0 - 100.0 * r.xi[hill::kAlpha]) <= 1e-12);
  const auto dp = hill::plastic_rate(r.xi, hill::virgin_state(), kAniso);
  CHECK(std::abs(trace(dp)) <= 1e-10);
  // Pressure only sees the total volumetric rate.
  const auto kin = hill::corotational_kinematics(F, I);
  const double kappa = 1000.0 / (3 * (1 - 2 * 0.25));
  CHECK(std::abs(trace(stress_of(r.xi)) / 3.0 - kappa * trace(kin.d)) <= 1e-10);
}

TEST_CASE("property: superposed rotation leaves the unrotated state unchanged") {
  Gen g(36);
  for (int path = 0; path < 10; ++path) {
    const auto target = g.near_identity(0.01);
    const auto Q = g.rotation();
    Mat3<double> F_prev = Mat3<double>::identity();
    auto xi = hill::virgin_state();
    auto xi_rot = hill::virgin_state();
    for (int n = 1; n <= 4; ++n) {
      const Mat3<double> F_n =
          Mat3<double>::identity() + (n / 4.0) * (target - Mat3<double>::identity());
      const auto a = solve_point(F_n, F_prev, xi, kAniso);
      const auto b = solve_point(Q * F_n, Q * F_prev, xi_rot, kAniso);
      CHECK(a.plastic == b.plastic);
      for (int k = 0; k < hill::kLocal; ++k) CHECK(std::abs(a.xi[k] - b.xi[k]) <= 1e-10);
      CHECK(a.xi[hill::kAlpha] >= xi[hill::kAlpha]);
      xi = a.xi;
      xi_rot = b.xi;
      F_prev = F_n;
    }
  }

  // A pure small rotation from rest produces no yield-function change.
  const auto I = Mat3<double>::identity();
  const auto R = Gen::axis_rotation({0.0, 0.6, 0.8}, 1e-7);
  const auto c = hill::coefficients_of(kAniso);
  const Sym6<double> T0{1.0, -0.4, 0.3, 0.2, 0.1, -0.3};
  const hill::Local<double> xi0{T0[0], T0[1], T0[2], T0[3], T0[4], T0[5], 0.0};
  const auto t = hill::trial_state(R, I, xi0, kAniso);
  const Sym6<double> T1{t.xi[0], t.xi[1], t.xi[2], t.xi[3], t.xi[4], t.xi[5]};
  CHECK(std::abs(hill::hill_phi(T1, c) - hill::hill_phi(T0, c)) <= 1e-10);
}
