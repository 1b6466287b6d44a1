// SPDX-License-Identifier: Apache-2.0

#include "ecal/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ecal {

namespace {

Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

// Kuhn split of the unit cube along the 0-7 diagonal. Corner index bits:
// x = 1, y = 2, z = 4.
constexpr int kKuhn[6][4] = {
    {0, 1, 3, 7}, {0, 1, 5, 7}, {0, 2, 3, 7}, {0, 2, 6, 7}, {0, 4, 5, 7}, {0, 4, 6, 7},
};

struct GridBuilder {
  std::vector<double> xs, ys, zs;

  int node_id(std::size_t i, std::size_t j, std::size_t k) const {
    return static_cast<int>((k * ys.size() + j) * xs.size() + i);
  }

  // Splits the kept cells into tets and compacts away unused nodes.
  Mesh build(const std::vector<std::array<std::size_t, 3>>& cells) const {
    std::vector<Vec3> all;
    all.reserve(xs.size() * ys.size() * zs.size());
    for (double z : zs)
      for (double y : ys)
        for (double x : xs) all.push_back({x, y, z});

    std::vector<std::array<int, 4>> tets;
    tets.reserve(cells.size() * 6);
    for (const auto& c : cells) {
      int corner[8];
      for (int b = 0; b < 8; ++b)
        corner[b] = node_id(c[0] + (b & 1), c[1] + ((b >> 1) & 1), c[2] + ((b >> 2) & 1));
      for (const auto& k : kKuhn) {
        std::array<int, 4> t = {corner[k[0]], corner[k[1]], corner[k[2]], corner[k[3]]};
        if (tet_signed_volume(all[t[0]], all[t[1]], all[t[2]], all[t[3]]) < 0.0)
          std::swap(t[2], t[3]);
        tets.push_back(t);
      }
    }

    std::vector<int> remap(all.size(), -1);
    std::vector<Vec3> used;
    for (const auto& t : tets)
      for (int n : t) remap[n] = -2;
    for (std::size_t n = 0; n < all.size(); ++n)
      if (remap[n] == -2) {
        remap[n] = static_cast<int>(used.size());
        used.push_back(all[n]);
      }
    for (auto& t : tets)
      for (int& n : t) n = remap[n];
    return Mesh(std::move(used), std::move(tets));
  }
};

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) v[i] = lo + (hi - lo) * static_cast<double>(i) / n;
  v.back() = hi;
  return v;
}

void fnv1a(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
}

}  // namespace

double tet_signed_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  return dot(sub(b, a), cross(sub(c, a), sub(d, a))) / 6.0;
}

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 n = cross(sub(b, a), sub(c, a));
  return 0.5 * std::sqrt(dot(n, n));
}

Mesh::Mesh(std::vector<Vec3> nodes, std::vector<std::array<int, 4>> tets)
    : nodes_(std::move(nodes)), tets_(std::move(tets)) {
  volumes_.reserve(tets_.size());
  for (std::size_t e = 0; e < tets_.size(); ++e) {
    const auto& t = tets_[e];
    for (int n : t)
      if (n < 0 || static_cast<std::size_t>(n) >= nodes_.size())
        throw std::invalid_argument("tet " + std::to_string(e) + " references missing node");
    const double v = tet_signed_volume(nodes_[t[0]], nodes_[t[1]], nodes_[t[2]], nodes_[t[3]]);
    if (!(v > 0.0))
      throw std::invalid_argument("tet " + std::to_string(e) + " has non-positive volume");
    volumes_.push_back(v);
  }
  build_boundary();
}

void Mesh::build_boundary() {
  // Tet faces ordered so the right-hand normal points outward for positive tets.
  static constexpr int kFaces[4][3] = {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};
  std::map<std::array<int, 3>, std::pair<int, std::array<int, 3>>> seen;
  for (const auto& t : tets_)
    for (const auto& f : kFaces) {
      std::array<int, 3> ordered = {t[f[0]], t[f[1]], t[f[2]]};
      std::array<int, 3> key = ordered;
      std::sort(key.begin(), key.end());
      auto [it, inserted] = seen.try_emplace(key, 1, ordered);
      if (!inserted) ++it->second.first;
    }
  boundary_.clear();
  for (const auto& [key, entry] : seen)
    if (entry.first == 1) {
      const auto& n = entry.second;
      boundary_.push_back({n, triangle_area(nodes_[n[0]], nodes_[n[1]], nodes_[n[2]])});
    }
}

double Mesh::total_volume() const {
  double v = 0.0;
  for (double x : volumes_) v += x;
  return v;
}

const std::vector<Face>& Mesh::face_set(const std::string& name) const {
  auto it = face_sets_.find(name);
  if (it == face_sets_.end()) throw std::out_of_range("mesh has no face set '" + name + "'");
  return it->second;
}

bool Mesh::has_face_set(const std::string& name) const { return face_sets_.count(name) > 0; }

std::vector<int> Mesh::face_set_nodes(const std::string& name) const {
  std::vector<int> ids;
  if (!has_face_set(name)) return ids;
  for (const auto& f : face_set(name)) ids.insert(ids.end(), f.nodes.begin(), f.nodes.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

void Mesh::tag_plane(const std::string& name, int axis, double value, double tol) {
  auto& set = face_sets_[name];
  for (const auto& f : boundary_) {
    bool on = true;
    for (int n : f.nodes) on = on && std::abs(nodes_[n][axis] - value) <= tol;
    if (on) set.push_back(f);
  }
}

double Mesh::extent(int axis) const {
  double lo = nodes_.front()[axis], hi = lo;
  for (const auto& x : nodes_) {
    lo = std::min(lo, x[axis]);
    hi = std::max(hi, x[axis]);
  }
  return hi - lo;
}

std::array<int, kElemDofs> Mesh::element_dofs(std::size_t elem) const {
  std::array<int, kElemDofs> dofs;
  const auto& t = tets_[elem];
  for (int a = 0; a < kNodesPerTet; ++a)
    for (int c = 0; c < kDofsPerNode; ++c) dofs[kDofsPerNode * a + c] = kDofsPerNode * t[a] + c;
  return dofs;
}

std::uint64_t Mesh::content_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& x : nodes_) fnv1a(h, x.data(), sizeof(double) * 3);
  for (const auto& t : tets_) {
    for (int n : t) {
      const std::int32_t v = n;
      fnv1a(h, &v, sizeof(v));
    }
  }
  return h;
}

std::uint64_t hash_bytes(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  fnv1a(h, data.data(), data.size());
  return h;
}

std::string hash_hex(std::uint64_t h) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = kDigits[h & 0xf];
  return out;
}

Mesh generate_bar(const Vec3& extents, const std::array<int, 3>& divisions,
                  const std::optional<Notch>& notch) {
  for (int a = 0; a < 3; ++a) {
    if (!(extents[a] > 0.0)) throw std::invalid_argument("bar extents must be positive");
    if (divisions[a] < 1) throw std::invalid_argument("bar divisions must be >= 1");
  }
  GridBuilder g{linspace(0.0, extents[0], divisions[0]), linspace(0.0, extents[1], divisions[1]),
                linspace(0.0, extents[2], divisions[2])};

  std::size_t cut_per_side = 0;
  if (notch) {
    if (!(notch->y_lo >= 0.0 && notch->y_hi <= extents[1] && notch->y_lo < notch->y_hi))
      throw std::invalid_argument("notch interval must lie inside the bar");
    if (!(notch->width_reduction >= 0.0 && notch->width_reduction < 1.0))
      throw std::invalid_argument("notch width reduction must be in [0, 1)");
    cut_per_side = static_cast<std::size_t>(
        std::lround(0.5 * notch->width_reduction * divisions[0]));
    if (2 * cut_per_side >= static_cast<std::size_t>(divisions[0]))
      throw std::invalid_argument("notch removes the full cross-section");
  }

  std::vector<std::array<std::size_t, 3>> cells;
  const auto nx = static_cast<std::size_t>(divisions[0]);
  for (std::size_t k = 0; k < static_cast<std::size_t>(divisions[2]); ++k)
    for (std::size_t j = 0; j < static_cast<std::size_t>(divisions[1]); ++j)
      for (std::size_t i = 0; i < nx; ++i) {
        if (notch && cut_per_side > 0) {
          const double yc = 0.5 * (g.ys[j] + g.ys[j + 1]);
          const bool in_band = yc >= notch->y_lo && yc <= notch->y_hi;
          if (in_band && (i < cut_per_side || i >= nx - cut_per_side)) continue;
        }
        cells.push_back({i, j, k});
      }

  Mesh mesh = g.build(cells);
  mesh.tag_plane(kDirichlet, 1, 0.0);
  mesh.tag_plane(kTractionY, 1, extents[1]);
  mesh.tag_plane(kDic, 2, extents[2]);
  return mesh;
}

Mesh generate_cruciform(double arm_half_width, double arm_length, double thickness,
                        const CruciformDivisions& div) {
  if (!(arm_half_width > 0.0 && thickness > 0.0 && arm_length > arm_half_width))
    throw std::invalid_argument("cruciform needs 0 < arm_half_width < arm_length, thickness > 0");
  if (div.across_arm < 1 || div.along_arm < 1 || div.thickness < 1)
    throw std::invalid_argument("cruciform divisions must be >= 1");

  const double w = arm_half_width, L = arm_length;
  std::vector<double> axis = linspace(-L, -w, div.along_arm);
  const auto mid = linspace(-w, w, div.across_arm);
  axis.insert(axis.end(), mid.begin() + 1, mid.end());
  const auto hi = linspace(w, L, div.along_arm);
  axis.insert(axis.end(), hi.begin() + 1, hi.end());

  GridBuilder g{axis, axis, linspace(0.0, thickness, div.thickness)};
  const auto lo_c = static_cast<std::size_t>(div.along_arm);
  const auto hi_c = lo_c + static_cast<std::size_t>(div.across_arm);
  auto in_band = [&](std::size_t c) { return c >= lo_c && c < hi_c; };

  std::vector<std::array<std::size_t, 3>> cells;
  const std::size_t n = axis.size() - 1;
  for (std::size_t k = 0; k < static_cast<std::size_t>(div.thickness); ++k)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < n; ++i)
        if (in_band(i) || in_band(j)) cells.push_back({i, j, k});

  Mesh mesh = g.build(cells);
  mesh.tag_plane(kDirichlet, 1, -L);
  mesh.tag_plane(kDirichlet, 0, -L);
  mesh.tag_plane(kTractionY, 1, L);
  mesh.tag_plane(kTractionX, 0, L);
  mesh.tag_plane(kDic, 2, thickness);
  return mesh;
}

std::array<double, kElemDofs> gather(const Mesh& mesh, std::span<const double> global,
                                     std::size_t elem) {
  std::array<double, kElemDofs> out;
  const auto dofs = mesh.element_dofs(elem);
  for (int i = 0; i < kElemDofs; ++i) out[i] = global[static_cast<std::size_t>(dofs[i])];
  return out;
}

void scatter_add(const Mesh& mesh, std::span<const double> local, std::size_t elem,
                 std::span<double> global) {
  const auto dofs = mesh.element_dofs(elem);
  for (int i = 0; i < kElemDofs; ++i) global[static_cast<std::size_t>(dofs[i])] += local[i];
}

}  // namespace ecal
