// SPDX-License-Identifier: Apache-2.0
//
// DIC displacement-mismatch objective over the dic face set, synthetic data
// with reproducible Gaussian noise, and the pixel-based noise floor.
//
// J = sum_n 1/2 int_{Gamma_dic} |u^n - d^n|^2 dA on reference triangles,
// evaluated with the 3-point rule (exact for the quadratic integrand).

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ecal/forward_solver.hpp"
#include "ecal/mesh.hpp"

namespace ecal {

/// Nodal displacement data on the dic nodes for load steps 1..N_L.
struct DICData {
  std::uint64_t mesh_hash = 0;
  std::vector<int> node_ids;               // sorted dic node ids
  std::vector<std::vector<Vec3>> steps;    // [step - 1][position in node_ids]
  double eps_noise = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> source_params;
};

/// Half the squared mismatch integrated over one triangle with the 3-point
/// rule; e holds u - d at the three face nodes.
template <class S>
S face_mismatch(const std::array<std::array<S, 3>, 3>& e, double area) {
  static constexpr double kA = 2.0 / 3.0, kB = 1.0 / 6.0;
  static constexpr double kW[3][3] = {{kA, kB, kB}, {kB, kA, kB}, {kB, kB, kA}};
  S total = S(0.0);
  for (const auto& w : kW) {
    S sq = S(0.0);
    for (int i = 0; i < 3; ++i) {
      const S v = w[0] * e[0][i] + w[1] * e[1][i] + w[2] * e[2][i];
      sq += v * v;
    }
    total += (area / 3.0) * 0.5 * sq;
  }
  return total;
}

/// Exact gradient of face_mismatch with respect to the face node values:
/// g_a = sum_b A/12 (1 + delta_ab) e_b.
std::array<Vec3, 3> face_mismatch_gradient(const std::array<Vec3, 3>& e, double area);

struct ObjectiveValue {
  double total = 0.0;
  std::vector<double> per_step;  // J^n for n = 1..N_L
};

class DICObjective {
 public:
  /// Validates the data against the mesh (hash, node set, finite values).
  DICObjective(const Mesh& mesh, DICData data);

  const DICData& data() const { return data_; }
  std::size_t steps() const { return data_.steps.size(); }

  /// J^n for the global dof vector U at load step n (1-based).
  double step_value(std::size_t step, std::span<const double> U) const;
  /// Adds dJ^n/dU to a global dof vector; pressure entries are untouched.
  void add_step_gradient(std::size_t step, std::span<const double> U,
                         std::span<double> grad) const;

  ObjectiveValue evaluate(const Trajectory& traj) const;

 private:
  std::array<Vec3, 3> face_error(const Face& f, std::size_t step,
                                 std::span<const double> U) const;

  const Mesh* mesh_;
  DICData data_;
  std::vector<Face> faces_;
  std::unordered_map<int, std::size_t> slot_;  // node id -> position in node_ids
};

/// Counter-based SplitMix64 stream with a Box-Muller normal transform. Draw
/// k depends only on (seed, k).
class NoiseStream {
 public:
  explicit NoiseStream(std::uint64_t seed) : seed_(seed) {}

  /// Uniform in (0, 1] with 53 random bits.
  double uniform(std::uint64_t k) const;
  /// Standard normal: pair j = k / 2 uses uniforms 2j and 2j + 1; even k
  /// takes the cosine branch, odd k the sine branch.
  double normal(std::uint64_t k) const;

  static std::uint64_t mix(std::uint64_t z);

 private:
  std::uint64_t seed_;
};

/// d = u + eps n on every dic node, component and step; draws are indexed
/// ((step - 1) * num_dic_nodes + node_position) * 3 + component.
DICData synthesize_data(const Mesh& mesh, const Trajectory& traj, double eps_noise,
                        std::uint64_t seed, std::vector<double> source_params = {});

/// Displacement noise equivalent to 0.05 px when L_y spans 80% of a 2048 px
/// sensor.
double noise_floor(double length_y);

std::string dic_to_json(const DICData& data);
DICData dic_from_json(const std::string& text);

}  // namespace ecal
