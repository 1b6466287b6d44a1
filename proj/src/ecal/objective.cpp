// SPDX-License-Identifier: Apache-2.0

#include "ecal/objective.hpp"

#include <cmath>
#include <numbers>

#include "ecal/errors.hpp"
#include "json.hpp"

namespace ecal {

std::array<Vec3, 3> face_mismatch_gradient(const std::array<Vec3, 3>& e, double area) {
  std::array<Vec3, 3> g{};
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      const double m = area / 12.0 * (a == b ? 2.0 : 1.0);
      for (int i = 0; i < 3; ++i) g[a][i] += m * e[b][i];
    }
  return g;
}

DICObjective::DICObjective(const Mesh& mesh, DICData data)
    : mesh_(&mesh), data_(std::move(data)), faces_(mesh.face_set(kDic)) {
  if (data_.mesh_hash != mesh.content_hash())
    throw ConfigError("DIC data mesh hash " + hash_hex(data_.mesh_hash) +
                      " does not match the mesh (" + hash_hex(mesh.content_hash()) + ")");
  if (data_.node_ids != mesh.face_set_nodes(kDic))
    throw ConfigError("DIC data node ids do not match the mesh dic face set");
  for (std::size_t n = 0; n < data_.steps.size(); ++n) {
    if (data_.steps[n].size() != data_.node_ids.size())
      throw ConfigError("DIC data step " + std::to_string(n + 1) + " has " +
                        std::to_string(data_.steps[n].size()) + " nodes, expected " +
                        std::to_string(data_.node_ids.size()));
    for (const auto& v : data_.steps[n])
      for (double x : v)
        if (!std::isfinite(x)) throw ConfigError("DIC data contains a non-finite value");
  }
  for (std::size_t i = 0; i < data_.node_ids.size(); ++i) slot_[data_.node_ids[i]] = i;
}

std::array<Vec3, 3> DICObjective::face_error(const Face& f, std::size_t step,
                                             std::span<const double> U) const {
  std::array<Vec3, 3> e;
  const auto& d = data_.steps[step - 1];
  for (int a = 0; a < 3; ++a) {
    const auto node = static_cast<std::size_t>(f.nodes[a]);
    const auto& dn = d[slot_.at(f.nodes[a])];
    for (int i = 0; i < 3; ++i) e[a][i] = U[kDofsPerNode * node + static_cast<std::size_t>(i)] - dn[i];
  }
  return e;
}

double DICObjective::step_value(std::size_t step, std::span<const double> U) const {
  if (step < 1 || step > steps())
    throw ConfigError("objective step " + std::to_string(step) + " outside the data range");
  double j = 0.0;
  for (const auto& f : faces_) j += face_mismatch(face_error(f, step, U), f.area);
  return j;
}

void DICObjective::add_step_gradient(std::size_t step, std::span<const double> U,
                                     std::span<double> grad) const {
  if (step < 1 || step > steps())
    throw ConfigError("objective step " + std::to_string(step) + " outside the data range");
  for (const auto& f : faces_) {
    const auto g = face_mismatch_gradient(face_error(f, step, U), f.area);
    for (int a = 0; a < 3; ++a)
      for (int i = 0; i < 3; ++i)
        grad[kDofsPerNode * static_cast<std::size_t>(f.nodes[a]) + static_cast<std::size_t>(i)] +=
            g[a][i];
  }
}

ObjectiveValue DICObjective::evaluate(const Trajectory& traj) const {
  if (traj.steps() != steps())
    throw ConfigError("trajectory has " + std::to_string(traj.steps()) +
                      " steps but the data has " + std::to_string(steps()));
  ObjectiveValue v;
  for (std::size_t n = 1; n <= steps(); ++n) {
    v.per_step.push_back(step_value(n, traj.U[n]));
    v.total += v.per_step.back();
  }
  return v;
}

std::uint64_t NoiseStream::mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double NoiseStream::uniform(std::uint64_t k) const {
  constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
  const std::uint64_t bits = mix(seed_ + (k + 1) * kGamma) >> 11;
  return static_cast<double>(bits + 1) * 0x1.0p-53;
}

double NoiseStream::normal(std::uint64_t k) const {
  const std::uint64_t j = k / 2;
  const double r = std::sqrt(-2.0 * std::log(uniform(2 * j)));
  const double theta = 2.0 * std::numbers::pi * uniform(2 * j + 1);
  return (k % 2 == 0) ? r * std::cos(theta) : r * std::sin(theta);
}

DICData synthesize_data(const Mesh& mesh, const Trajectory& traj, double eps_noise,
                        std::uint64_t seed, std::vector<double> source_params) {
  if (!(eps_noise >= 0.0) || !std::isfinite(eps_noise))
    throw ConfigError("noise level must be a finite non-negative number");
  DICData d;
  d.mesh_hash = mesh.content_hash();
  d.node_ids = mesh.face_set_nodes(kDic);
  d.eps_noise = eps_noise;
  d.seed = seed;
  d.source_params = std::move(source_params);
  const NoiseStream rng(seed);
  const std::size_t nn = d.node_ids.size();
  for (std::size_t n = 1; n <= traj.steps(); ++n) {
    std::vector<Vec3> step(nn);
    for (std::size_t i = 0; i < nn; ++i)
      for (std::size_t c = 0; c < 3; ++c) {
        const double u = traj.U[n][kDofsPerNode * static_cast<std::size_t>(d.node_ids[i]) + c];
        const std::uint64_t k = ((n - 1) * nn + i) * 3 + c;
        // eps = 0 must reproduce u bit-exactly (including the sign of zero).
        step[i][c] = eps_noise == 0.0 ? u : u + eps_noise * rng.normal(k);
      }
    d.steps.push_back(std::move(step));
  }
  return d;
}

double noise_floor(double length_y) {
  if (!(length_y > 0.0)) throw ConfigError("noise floor needs a positive length");
  return 0.05 * length_y / (0.8 * 2048.0);
}

namespace {
constexpr const char* kDicFormat = "ecal.dic/1";
}

std::string dic_to_json(const DICData& data) {
  nlohmann::ordered_json j;
  j["format"] = kDicFormat;
  j["mesh_hash"] = hash_hex(data.mesh_hash);
  j["node_ids"] = data.node_ids;
  j["eps_noise"] = data.eps_noise;
  j["seed"] = data.seed;
  j["source_params"] = data.source_params;
  j["steps"] = data.steps;
  return j.dump(1) + "\n";
}

DICData dic_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("DIC data is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kDicFormat)
      throw ConfigError("unsupported DIC data format '" + j.at("format").get<std::string>() + "'");
    DICData d;
    d.mesh_hash = std::stoull(j.at("mesh_hash").get<std::string>(), nullptr, 16);
    d.node_ids = j.at("node_ids").get<std::vector<int>>();
    d.eps_noise = j.at("eps_noise").get<double>();
    d.seed = j.at("seed").get<std::uint64_t>();
    d.source_params = j.at("source_params").get<std::vector<double>>();
    d.steps = j.at("steps").get<std::vector<std::vector<Vec3>>>();
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed DIC data: ") + e.what());
  } catch (const std::logic_error& e) {
    throw ConfigError(std::string("malformed DIC data: ") + e.what());
  }
}

}  // namespace ecal
