// SPDX-License-Identifier: Apache-2.0

#include "ecal/field_io.hpp"

#include <cstdio>

#include "ecal/errors.hpp"
#include "ecal/material_hill.hpp"
#include "ecal/material_j2.hpp"

namespace ecal {

namespace {

void append_real(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

void append_arrays(std::string& out, const std::vector<FieldArray>& arrays, std::size_t count) {
  for (const auto& a : arrays) {
    const auto nc = static_cast<std::size_t>(a.components);
    if ((nc != 1 && nc != 3) || a.values.size() != nc * count)
      throw DimensionError("field '" + a.name + "' has " + std::to_string(a.values.size()) +
                           " values for " + std::to_string(count) + " entries");
    if (a.name.empty() || a.name.find_first_of(" \t\n") != std::string::npos)
      throw ConfigError("field names must be non-empty and contain no whitespace");
    out += (nc == 3 ? "VECTORS " : "SCALARS ") + a.name + " double";
    out += nc == 3 ? "\n" : " 1\nLOOKUP_TABLE default\n";
    for (std::size_t i = 0; i < count; ++i) {
      for (std::size_t c = 0; c < nc; ++c) {
        if (c) out += ' ';
        append_real(out, a.values[i * nc + c]);
      }
      out += '\n';
    }
  }
}

}  // namespace

std::string vtk_unstructured(const Mesh& mesh, const std::string& title,
                             const std::vector<FieldArray>& point_data,
                             const std::vector<FieldArray>& cell_data) {
  if (title.find('\n') != std::string::npos) throw ConfigError("field file title must be one line");
  const std::size_t nn = mesh.num_nodes(), ne = mesh.num_elements();
  std::string out = "# vtk DataFile Version 3.0\n" + title + "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out += "POINTS " + std::to_string(nn) + " double\n";
  for (const auto& x : mesh.nodes()) {
    append_real(out, x[0]);
    out += ' ';
    append_real(out, x[1]);
    out += ' ';
    append_real(out, x[2]);
    out += '\n';
  }
  out += "CELLS " + std::to_string(ne) + " " + std::to_string(5 * ne) + "\n";
  for (const auto& t : mesh.tets())
    out += "4 " + std::to_string(t[0]) + " " + std::to_string(t[1]) + " " + std::to_string(t[2]) +
           " " + std::to_string(t[3]) + "\n";
  out += "CELL_TYPES " + std::to_string(ne) + "\n";
  for (std::size_t e = 0; e < ne; ++e) out += "10\n";  // VTK_TETRA
  if (!point_data.empty()) {
    out += "POINT_DATA " + std::to_string(nn) + "\n";
    append_arrays(out, point_data, nn);
  }
  if (!cell_data.empty()) {
    out += "CELL_DATA " + std::to_string(ne) + "\n";
    append_arrays(out, cell_data, ne);
  }
  return out;
}

std::string mesh_field_file(const Mesh& mesh, const std::string& title) {
  std::vector<FieldArray> point;
  for (const char* name : {kDirichlet, kTractionY, kTractionX, kDic}) {
    if (!mesh.has_face_set(name)) continue;
    FieldArray a{std::string("on_") + name, 1, std::vector<double>(mesh.num_nodes(), 0.0)};
    for (int n : mesh.face_set_nodes(name)) a.values[static_cast<std::size_t>(n)] = 1.0;
    point.push_back(std::move(a));
  }
  return vtk_unstructured(mesh, title, point, {{"volume", 1, mesh.element_volumes()}});
}

std::string step_field_file(const Mesh& mesh, ModelKind model, const Trajectory& traj,
                            std::size_t step, const std::string& title) {
  if (step > traj.steps()) throw ConfigError("step " + std::to_string(step) + " not in trajectory");
  const std::size_t nn = mesh.num_nodes(), ne = mesh.num_elements();
  FieldArray u{"displacement", 3, std::vector<double>(3 * nn)};
  FieldArray p{"pressure", 1, std::vector<double>(nn)};
  for (std::size_t n = 0; n < nn; ++n) {
    for (std::size_t c = 0; c < 3; ++c) u.values[3 * n + c] = traj.U[step][kDofsPerNode * n + c];
    p.values[n] = traj.U[step][kDofsPerNode * n + 3];
  }
  const std::size_t ia = model == ModelKind::J2 ? j2::kAlpha : hill::kAlpha;
  FieldArray alpha{"alpha", 1, std::vector<double>(ne)};
  FieldArray plastic{"plastic", 1, std::vector<double>(ne)};
  for (std::size_t e = 0; e < ne; ++e) {
    alpha.values[e] = traj.local_state(step, e)[ia];
    plastic.values[e] = step > 0 && traj.plastic[step][e] ? 1.0 : 0.0;
  }
  return vtk_unstructured(mesh, title, {u, p}, {alpha, plastic});
}

}  // namespace ecal
