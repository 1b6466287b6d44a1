// SPDX-License-Identifier: Apache-2.0

#include "ecal/element.hpp"

#include <algorithm>
#include <cmath>

namespace ecal {

ElementContext ElementContext::from_mesh(const Mesh& mesh, std::size_t elem) {
  ElementContext ctx;
  const auto& t = mesh.tets()[elem];
  for (int a = 0; a < 4; ++a) ctx.X[a] = mesh.nodes()[static_cast<std::size_t>(t[a])];

  // Shape gradients from the inverse of the edge matrix [X1-X0, X2-X0, X3-X0].
  Mat3<double> E;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 3; ++i) E(i, c) = ctx.X[c + 1][i] - ctx.X[0][i];
  const Mat3<double> Einv = inverse(E);
  for (int J = 0; J < 3; ++J) {
    ctx.G[0][J] = 0.0;
    for (int a = 1; a < 4; ++a) {
      ctx.G[a][J] = Einv(a - 1, J);
      ctx.G[0][J] -= Einv(a - 1, J);
    }
  }
  ctx.volume = mesh.element_volumes()[elem];

  double h2 = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b) {
      double d2 = 0.0;
      for (int i = 0; i < 3; ++i) d2 += (ctx.X[a][i] - ctx.X[b][i]) * (ctx.X[a][i] - ctx.X[b][i]);
      h2 = std::max(h2, d2);
    }
  ctx.h = std::sqrt(h2);
  return ctx;
}

void add_traction(const std::vector<Face>& faces, const Vec3& h, std::span<double> residual) {
  for (const auto& f : faces)
    for (int n : f.nodes)
      for (int i = 0; i < 3; ++i)
        residual[static_cast<std::size_t>(kDofsPerNode * n + i)] -= h[i] * f.area / 3.0;
}

}  // namespace ecal
