// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <vector>

#include "doctest.h"
#include "ecal/objective.hpp"
#include "test_support.hpp"

using namespace ecal;
using ecal::testing::Gen;

namespace {

// Monomial integral over a triangle: int l1^a l2^b l3^c dA = 2A a! b! c! / (a+b+c+2)!.
double monomial(int a, int b, int c, double area) {
  auto f = [](int n) {
    double r = 1.0;
    for (int k = 2; k <= n; ++k) r *= k;
    return r;
  };
  return 2.0 * area * f(a) * f(b) * f(c) / f(a + b + c + 2);
}

struct Fixture {
  Mesh mesh = generate_bar({1.0, 2.0, 0.05}, {2, 4, 1});
  Trajectory traj;

  explicit Fixture(std::size_t steps, std::uint64_t seed = 1) {
    Gen g(seed);
    traj.num_local = 8;
    for (std::size_t n = 0; n <= steps; ++n) {
      std::vector<double> U(mesh.num_dofs());
      for (auto& x : U) x = n == 0 ? 0.0 : g.uniform(-0.01, 0.01);
      traj.U.push_back(U);
    }
  }
};

}  // namespace

TEST_CASE("three-point rule integrates squared linear fields exactly") {
  Gen g(51);
  for (int trial = 0; trial < 20; ++trial) {
    const double area = g.uniform(0.1, 3.0);
    std::array<std::array<double, 3>, 3> e{};
    for (auto& node : e)
      for (auto& x : node) x = g.uniform(-1, 1);
    // Analytic: 1/2 sum_i int (sum_a l_a e_ai)^2 dA via monomial integrals.
    double exact = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
          int p[3] = {0, 0, 0};
          ++p[a];
          ++p[b];
          exact += 0.5 * e[a][i] * e[b][i] * monomial(p[0], p[1], p[2], area);
        }
    CHECK(std::abs(face_mismatch(e, area) - exact) <= 1e-14 * std::max(1.0, exact));
  }
}

TEST_CASE("face gradient matches AD and vanishes at a perfect fit") {
  Gen g(52);
  for (int trial = 0; trial < 20; ++trial) {
    const double area = g.uniform(0.1, 2.0);
    std::array<Vec3, 3> e;
    std::array<std::array<ADouble, 3>, 3> ed;
    for (int a = 0; a < 3; ++a)
      for (int i = 0; i < 3; ++i) {
        e[a][i] = g.uniform(-1, 1);
        ed[a][i] = seed_unit(e[a][i], 3 * a + i, 9);
      }
    const auto grad = face_mismatch_gradient(e, area);
    const ADouble j = face_mismatch(ed, area);
    for (int a = 0; a < 3; ++a)
      for (int i = 0; i < 3; ++i) CHECK(std::abs(grad[a][i] - j.d(3 * a + i)) <= 1e-14);
  }
  const auto zero = face_mismatch_gradient({}, 1.0);
  for (const auto& v : zero)
    for (double x : v) CHECK(x == 0.0);
}

TEST_CASE("objective examples") {
  Fixture fx(1);
  DICData same = synthesize_data(fx.mesh, fx.traj, 0.0, 0);
  const DICObjective exact(fx.mesh, same);
  CHECK(exact.evaluate(fx.traj).total == 0.0);

  // Constant mismatch c over the dic face of area 1 * 2.
  DICData shifted = same;
  const Vec3 c{0.3, -0.2, 0.1};
  for (auto& v : shifted.steps[0])
    for (int i = 0; i < 3; ++i) v[i] -= c[i];
  const DICObjective obj(fx.mesh, shifted);
  const double expect = 0.5 * 2.0 * (0.09 + 0.04 + 0.01);
  CHECK(std::abs(obj.evaluate(fx.traj).total - expect) <= 1e-14);
}

TEST_CASE("objective gradient matches central differences") {
  Fixture fx(2);
  Fixture other(2, 9);
  const DICObjective obj(fx.mesh, synthesize_data(fx.mesh, other.traj, 0.0, 0));
  for (std::size_t n = 1; n <= 2; ++n) {
    std::vector<double> g(fx.mesh.num_dofs(), 0.0);
    obj.add_step_gradient(n, fx.traj.U[n], g);
    const double h = 1e-6;
    for (std::size_t d = 0; d < g.size(); ++d) {
      auto up = fx.traj.U[n], dn = fx.traj.U[n];
      up[d] += h;
      dn[d] -= h;
      const double fd = (obj.step_value(n, up) - obj.step_value(n, dn)) / (2 * h);
      CHECK(std::abs(g[d] - fd) <= 1e-8);
      if (d % kDofsPerNode == 3) CHECK(g[d] == 0.0);
    }
  }
}

TEST_CASE("property: objective is non-negative and blind to nodes off the dic surface") {
  Fixture fx(1);
  const auto dic = fx.mesh.face_set_nodes(kDic);
  Gen g(53);
  for (int trial = 0; trial < 10; ++trial) {
    Fixture data(1, 100 + static_cast<std::uint64_t>(trial));
    const DICObjective obj(fx.mesh, synthesize_data(fx.mesh, data.traj, 0.0, 0));
    const double j = obj.step_value(1, fx.traj.U[1]);
    CHECK(j >= 0.0);
    auto U = fx.traj.U[1];
    for (std::size_t n = 0; n < fx.mesh.num_nodes(); ++n)
      if (!std::binary_search(dic.begin(), dic.end(), static_cast<int>(n)))
        for (int c = 0; c < 4; ++c) U[4 * n + static_cast<std::size_t>(c)] = g.uniform(-1, 1);
    CHECK(obj.step_value(1, U) == j);
  }
}

TEST_CASE("data validation") {
  Fixture fx(1);
  DICData d = synthesize_data(fx.mesh, fx.traj, 0.0, 0);
  DICData bad_hash = d;
  bad_hash.mesh_hash ^= 1;
  CHECK_THROWS_AS(DICObjective(fx.mesh, bad_hash), ConfigError);
  DICData bad_nodes = d;
  bad_nodes.node_ids.pop_back();
  CHECK_THROWS_AS(DICObjective(fx.mesh, bad_nodes), ConfigError);
  DICData bad_value = d;
  bad_value.steps[0][0][1] = std::nan("");
  CHECK_THROWS_AS(DICObjective(fx.mesh, bad_value), ConfigError);
  const DICObjective ok(fx.mesh, d);
  CHECK_THROWS_AS(ok.step_value(2, fx.traj.U[1]), ConfigError);
}

TEST_CASE("noise stream reference values") {
  // Frozen from an independent implementation of the documented stream.
  const NoiseStream s(42);
  CHECK(s.uniform(0) == 0.7415648787718234);
  CHECK(s.uniform(1) == 0.15991039287692022);
  CHECK(s.uniform(2) == 0.2786011302551388);
  CHECK(std::abs(s.normal(0) - 0.41471975043153003) <= 1e-15);
  CHECK(std::abs(s.normal(1) - 0.652681222151943) <= 1e-15);
  CHECK(std::abs(s.normal(2) - -0.8918862136277573) <= 1e-15);
  CHECK(std::abs(s.normal(3) - 1.3268335628141055) <= 1e-15);
  CHECK(std::abs(NoiseStream(7).normal(1001) - 0.17299080147567913) <= 1e-15);
}

TEST_CASE("noise statistics") {
  const NoiseStream s(2024);
  const std::size_t n = 200000;
  double sum = 0.0, sq = 0.0, cross = 0.0;
  double umin = 1.0, umax = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double x = s.normal(k);
    sum += x;
    sq += x * x;
    // Adjacent draws share a Box-Muller pair: the strongest dependence risk.
    if (k % 2 == 0) cross += x * s.normal(k + 1);
    const double u = s.uniform(k);
    umin = std::min(umin, u);
    umax = std::max(umax, u);
  }
  const double mean = sum / static_cast<double>(n);
  const double sd = std::sqrt(sq / static_cast<double>(n) - mean * mean);
  CHECK(std::abs(mean) <= 0.01);
  CHECK(std::abs(sd - 1.0) <= 0.02);
  CHECK(std::abs(cross / static_cast<double>(n / 2)) <= 0.01);
  CHECK(umin > 0.0);
  CHECK(umax <= 1.0);
}

TEST_CASE("synthetic data") {
  Fixture fx(3);
  const auto clean = synthesize_data(fx.mesh, fx.traj, 0.0, 5);
  const auto dic = fx.mesh.face_set_nodes(kDic);
  REQUIRE(clean.steps.size() == 3);
  for (std::size_t n = 1; n <= 3; ++n)
    for (std::size_t i = 0; i < dic.size(); ++i)
      for (int c = 0; c < 3; ++c)
        CHECK(clean.steps[n - 1][i][c] == fx.traj.U[n][4 * static_cast<std::size_t>(dic[i]) + static_cast<std::size_t>(c)]);

  const auto a = synthesize_data(fx.mesh, fx.traj, 1e-3, 5);
  const auto b = synthesize_data(fx.mesh, fx.traj, 1e-3, 5);
  const auto c = synthesize_data(fx.mesh, fx.traj, 1e-3, 6);
  CHECK(a.steps == b.steps);
  CHECK(a.steps != c.steps);

  // Draw order: step, node, component.
  const NoiseStream s(5);
  const std::size_t nn = dic.size();
  const double expect = fx.traj.U[2][4 * static_cast<std::size_t>(dic[1]) + 2] + 1e-3 * s.normal((1 * nn + 1) * 3 + 2);
  CHECK(a.steps[1][1][2] == expect);
  CHECK_THROWS_AS(synthesize_data(fx.mesh, fx.traj, -1.0, 5), ConfigError);
}

TEST_CASE("noise floor") {
  CHECK(noise_floor(2.0) == doctest::Approx(6.1035e-5).epsilon(1e-4));
  CHECK(noise_floor(3.25) == doctest::Approx(9.918e-5).epsilon(1e-4));
  CHECK(noise_floor(9.0) == doctest::Approx(2.747e-4).epsilon(1e-3));
  CHECK(noise_floor(2.0) == 0.05 * 2.0 / 1638.4);
  CHECK_THROWS_AS(noise_floor(0.0), ConfigError);
}

TEST_CASE("data JSON round trip") {
  Fixture fx(2);
  const auto d = synthesize_data(fx.mesh, fx.traj, 2.5e-4, 77, {1000.0, 0.25});
  const auto back = dic_from_json(dic_to_json(d));
  CHECK(back.mesh_hash == d.mesh_hash);
  CHECK(back.node_ids == d.node_ids);
  CHECK(back.steps == d.steps);
  CHECK(back.eps_noise == d.eps_noise);
  CHECK(back.seed == d.seed);
  CHECK(back.source_params == d.source_params);
  CHECK(dic_to_json(back) == dic_to_json(d));
  CHECK_THROWS_AS(dic_from_json("{"), ConfigError);
  CHECK_THROWS_AS(dic_from_json("{\"format\": \"other\"}"), ConfigError);
  CHECK_THROWS_AS(dic_from_json("{\"format\": \"ecal.dic/1\"}"), ConfigError);
}
