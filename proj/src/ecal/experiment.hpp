// SPDX-License-Identifier: Apache-2.0
//
// Experiment configuration and the command pipeline behind the CLI: mesh,
// forward, synth, gradcheck and calibrate. Every command is a pure function
// of the resolved configuration, so reruns write byte-identical files.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ecal/mesh.hpp"
#include "ecal/optimizer.hpp"

namespace ecal {

struct GeometryConfig {
  enum class Kind { Bar, Cruciform };
  Kind kind = Kind::Bar;
  // bar
  Vec3 extents{1.0, 2.0, 0.05};
  std::array<int, 3> divisions{8, 16, 1};
  std::optional<Notch> notch;
  // cruciform
  double arm_half_width = 1.5;
  double arm_length = 4.5;
  double thickness = 0.12;
  CruciformDivisions cross{4, 4, 1};

  /// Specimen length along y, the reference for the noise floor.
  double length_y() const;
};

struct NoiseConfig {
  double eps = 0.0;         // resolved value
  bool from_floor = false;  // eps came from "floor"
  std::uint64_t seed = 0;
};

struct ExperimentConfig {
  GeometryConfig geometry;
  ModelKind model = ModelKind::J2;
  std::vector<double> beta_true;
  std::vector<double> beta0;  // defaults to beta_true
  std::vector<double> lower;  // empty when no bounds were given
  std::vector<double> upper;
  std::vector<int> active;
  LoadSchedule loads;
  SolverOptions solver;
  NoiseConfig noise;
  GradientMethod method = GradientMethod::Adjoint;
  OptOptions optimizer;
  FdOptions fd;
  std::vector<double> gradcheck_direction;  // empty: 0.1 per active parameter
  std::vector<double> gradcheck_steps;      // empty: 1, 1e-1, ..., 1e-12
  std::string data_path;                    // optional DIC data file
  std::string output_dir = "out";
  std::string base_dir;                     // resolves data_path; not serialized
};

/// Parses and validates a configuration. Unknown keys are rejected with
/// their full dotted path. Throws ConfigError.
ExperimentConfig parse_config(const std::string& json_text, const std::string& base_dir = "");
ExperimentConfig load_config(const std::string& path);

/// Canonical JSON of the configuration with every default filled in and the
/// noise level resolved. parse_config(resolved_config_json(c)) reproduces c.
std::string resolved_config_json(const ExperimentConfig& cfg);

Mesh build_mesh(const GeometryConfig& geometry);

struct CommandResult {
  std::vector<std::string> files;  // written paths, in write order
  std::string summary_json;        // command summary including wall time
};

/// Runs one of mesh, forward, synth, gradcheck, calibrate and writes its
/// outputs into out_dir (created if missing).
CommandResult run_command(const std::string& command, const ExperimentConfig& cfg,
                          const std::string& out_dir);

}  // namespace ecal
