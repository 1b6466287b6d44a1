// SPDX-License-Identifier: Apache-2.0

#include "ecal/assembly.hpp"

#include <algorithm>

#include "ecal/errors.hpp"

namespace ecal {

Discretization::Discretization(const Mesh& mesh)
    : mesh_(&mesh), constrained_(mesh.num_dofs(), 0) {
  contexts_.reserve(mesh.num_elements());
  for (std::size_t e = 0; e < mesh.num_elements(); ++e)
    contexts_.push_back(ElementContext::from_mesh(mesh, e));

  for (int n : mesh.face_set_nodes(kDirichlet))
    for (int c = 0; c < 3; ++c) constrained_[static_cast<std::size_t>(kDofsPerNode * n + c)] = 1;

  const auto ndof = static_cast<int>(mesh.num_dofs());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(mesh.num_elements() * kElemDofs * kElemDofs + mesh.num_dofs());
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const auto dofs = mesh.element_dofs(e);
    for (int i : dofs)
      for (int j : dofs) trip.emplace_back(i, j, 0.0);
  }
  for (int i = 0; i < ndof; ++i) trip.emplace_back(i, i, 0.0);
  pattern_.resize(ndof, ndof);
  pattern_.setFromTriplets(trip.begin(), trip.end());
  pattern_.makeCompressed();

  const int* outer = pattern_.outerIndexPtr();
  const int* inner = pattern_.innerIndexPtr();
  auto slot = [&](int row, int col) {
    const int* lo = inner + outer[col];
    const int* hi = inner + outer[col + 1];
    return static_cast<int>(std::lower_bound(lo, hi, row) - inner);
  };
  slots_.resize(mesh.num_elements());
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const auto dofs = mesh.element_dofs(e);
    for (int j = 0; j < kElemDofs; ++j)
      for (int i = 0; i < kElemDofs; ++i) {
        const bool skip = constrained_[static_cast<std::size_t>(dofs[i])] ||
                          constrained_[static_cast<std::size_t>(dofs[j])];
        slots_[e][static_cast<std::size_t>(kElemDofs * j + i)] = skip ? -1 : slot(dofs[i], dofs[j]);
      }
  }
}

void Discretization::add_element_matrix(SparseMatrix& K, std::size_t elem,
                                        const Eigen::MatrixXd& Ke) const {
  double* values = K.valuePtr();
  const auto& s = slots_[elem];
  for (int j = 0; j < kElemDofs; ++j)
    for (int i = 0; i < kElemDofs; ++i) {
      const int k = s[static_cast<std::size_t>(kElemDofs * j + i)];
      if (k >= 0) values[k] += Ke(i, j);
    }
}

void Discretization::finalize(SparseMatrix& K) const {
  for (std::size_t d = 0; d < constrained_.size(); ++d)
    if (constrained_[d]) K.coeffRef(static_cast<int>(d), static_cast<int>(d)) = 1.0;
}

void Discretization::zero_constrained(Eigen::Ref<Eigen::MatrixXd> x) const {
  for (std::size_t d = 0; d < constrained_.size(); ++d)
    if (constrained_[d]) x.row(static_cast<Eigen::Index>(d)).setZero();
}

void Discretization::zero_constrained(std::span<double> x) const {
  for (std::size_t d = 0; d < constrained_.size(); ++d)
    if (constrained_[d]) x[d] = 0.0;
}

void LinearSolver::factorize(const SparseMatrix& K) {
  if (!analyzed_) {
    lu_.analyzePattern(K);
    analyzed_ = true;
  }
  lu_.factorize(K);
  if (lu_.info() != Eigen::Success)
    throw SolverError("sparse LU factorization failed: " + lu_.lastErrorMessage());
}

Eigen::MatrixXd LinearSolver::solve(const Eigen::MatrixXd& rhs) const {
  Eigen::MatrixXd x = lu_.solve(rhs);
  if (!x.allFinite()) throw SolverError("sparse LU solve produced non-finite values");
  return x;
}

}  // namespace ecal
