// SPDX-License-Identifier: Apache-2.0
//
// Global sparse structure: element contexts, Dirichlet dofs, a fixed sparse
// pattern with precomputed element value slots, and the direct solver.

#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <memory>
#include <vector>

#include "ecal/element.hpp"
#include "ecal/mesh.hpp"

namespace ecal {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

/// Mesh-derived data shared by every solve on one mesh. Dirichlet conditions
/// fix the displacement components (not the pressure) of every node on the
/// dirichlet face set to zero.
class Discretization {
 public:
  explicit Discretization(const Mesh& mesh);

  const Mesh& mesh() const { return *mesh_; }
  std::size_t num_elements() const { return contexts_.size(); }
  std::size_t num_dofs() const { return constrained_.size(); }
  const ElementContext& context(std::size_t e) const { return contexts_[e]; }
  bool constrained(std::size_t dof) const { return constrained_[dof] != 0; }

  /// Zero-valued matrix with the full sparsity pattern.
  SparseMatrix zero_matrix() const { return pattern_; }

  /// Adds an element matrix, skipping rows and columns of constrained dofs.
  void add_element_matrix(SparseMatrix& K, std::size_t elem, const Eigen::MatrixXd& Ke) const;
  /// Puts a unit diagonal on constrained dofs.
  void finalize(SparseMatrix& K) const;
  /// Zeroes constrained entries of a vector (or each column of a matrix).
  void zero_constrained(Eigen::Ref<Eigen::MatrixXd> x) const;
  void zero_constrained(std::span<double> x) const;

 private:
  const Mesh* mesh_;
  std::vector<ElementContext> contexts_;
  std::vector<char> constrained_;
  SparseMatrix pattern_;
  // slots_[e][16 * j + i] indexes valuePtr() for entry (dof_i, dof_j); -1
  // when the row or column is constrained.
  std::vector<std::array<int, kElemDofs * kElemDofs>> slots_;
};

/// Sparse LU with the symbolic analysis done once per pattern.
class LinearSolver {
 public:
  void factorize(const SparseMatrix& K);
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;

 private:
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu_;
  bool analyzed_ = false;
};

}  // namespace ecal
