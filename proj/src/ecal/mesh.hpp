// SPDX-License-Identifier: Apache-2.0
//
// Structured tetrahedral meshes for the calibration test geometries.

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ecal {

using Vec3 = std::array<double, 3>;

inline constexpr int kNodesPerTet = 4;
inline constexpr int kDofsPerNode = 4;  // ux, uy, uz, p
inline constexpr int kElemDofs = kNodesPerTet * kDofsPerNode;

/// Boundary triangle with outward-consistent node order and reference area.
struct Face {
  std::array<int, 3> nodes;
  double area;
};

// Face-set names used throughout.
inline constexpr const char* kDirichlet = "dirichlet";
inline constexpr const char* kTractionY = "traction_y";
inline constexpr const char* kTractionX = "traction_x";
inline constexpr const char* kDic = "dic";

class Mesh {
 public:
  Mesh(std::vector<Vec3> nodes, std::vector<std::array<int, 4>> tets);

  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_elements() const { return tets_.size(); }
  std::size_t num_dofs() const { return nodes_.size() * kDofsPerNode; }

  const std::vector<Vec3>& nodes() const { return nodes_; }
  const std::vector<std::array<int, 4>>& tets() const { return tets_; }
  const std::vector<double>& element_volumes() const { return volumes_; }
  double total_volume() const;

  /// Every boundary triangle exactly once.
  const std::vector<Face>& boundary_faces() const { return boundary_; }

  const std::vector<Face>& face_set(const std::string& name) const;
  bool has_face_set(const std::string& name) const;
  /// Sorted unique node ids touched by a face set.
  std::vector<int> face_set_nodes(const std::string& name) const;

  /// Tags boundary faces whose nodes all lie on the plane x[axis] == value.
  void tag_plane(const std::string& name, int axis, double value, double tol = 1e-9);

  double extent(int axis) const;

  /// Element dof indices in node-major (ux, uy, uz, p) order.
  std::array<int, kElemDofs> element_dofs(std::size_t elem) const;

  /// FNV-1a hash over coordinates and connectivity.
  std::uint64_t content_hash() const;

 private:
  void build_boundary();

  std::vector<Vec3> nodes_;
  std::vector<std::array<int, 4>> tets_;
  std::vector<double> volumes_;
  std::vector<Face> boundary_;
  std::map<std::string, std::vector<Face>> face_sets_;
};

/// FNV-1a over raw bytes; the same function behind Mesh::content_hash.
std::uint64_t hash_bytes(std::string_view data);

/// Fixed-width lowercase hex rendering used for hashes in output files.
std::string hash_hex(std::uint64_t h);

double tet_signed_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);
double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c);

struct Notch {
  double y_lo;
  double y_hi;
  /// Fraction of the cross-section width removed, split across both sides.
  double width_reduction;
};

/// Box [0,Lx]x[0,Ly]x[0,Lz] split into hexes, each cut into 6 tets. An optional
/// double-edge notch removes element columns over a y-interval. Face sets:
/// dirichlet (min y), traction_y (max y), dic (max z).
Mesh generate_bar(const Vec3& extents, const std::array<int, 3>& divisions,
                  const std::optional<Notch>& notch = std::nullopt);

struct CruciformDivisions {
  int across_arm;  // cells across the arm width 2w
  int along_arm;   // cells along each arm outside the center square
  int thickness;
};

/// Plus-shaped plate inside [-L,L]^2 x [0,t] with arms of half width w.
/// Face sets: dirichlet (min x and min y), traction_y (max y), traction_x
/// (max x), dic (max z).
Mesh generate_cruciform(double arm_half_width, double arm_length, double thickness,
                        const CruciformDivisions& divisions);

/// Element vector (16 entries) from a global dof vector.
std::array<double, kElemDofs> gather(const Mesh& mesh, std::span<const double> global,
                                     std::size_t elem);

/// Adds an element vector into a global dof vector.
void scatter_add(const Mesh& mesh, std::span<const double> local, std::size_t elem,
                 std::span<double> global);

}  // namespace ecal
