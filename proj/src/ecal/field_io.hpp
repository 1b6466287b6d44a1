// SPDX-License-Identifier: Apache-2.0
//
// Plain-text field files in the legacy VTK ASCII unstructured-grid layout.
// Reals are written with %.17g so a reader recovers every double exactly.

#pragma once

#include <string>
#include <vector>

#include "ecal/forward_solver.hpp"
#include "ecal/mesh.hpp"

namespace ecal {

/// Nodal or per-element array with `components` values per entry (1 or 3).
struct FieldArray {
  std::string name;
  int components = 1;
  std::vector<double> values;
};

std::string vtk_unstructured(const Mesh& mesh, const std::string& title,
                             const std::vector<FieldArray>& point_data,
                             const std::vector<FieldArray>& cell_data);

/// Mesh with element volumes and 0/1 node markers for every face set.
std::string mesh_field_file(const Mesh& mesh, const std::string& title);

/// One converged step: displacement and pressure at the nodes, alpha and the
/// plastic branch flag per element.
std::string step_field_file(const Mesh& mesh, ModelKind model, const Trajectory& traj,
                            std::size_t step, const std::string& title);

}  // namespace ecal
