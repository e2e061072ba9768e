#pragma once

#include <Eigen/Sparse>
#include <array>

#include "nnrk/discretization.hpp"

namespace nnrk {

using SparseRow = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Smoothing operators P_alpha (cells x surface points): entry (L, e) is
/// A_e n_alpha / V_L for every segment e of cell L.
struct SmoothingOperator {
  std::array<SparseRow, 2> P;
  std::vector<Vec2> points;

  Eigen::Index num_cells() const { return P[0].rows(); }
  Eigen::Index num_points() const { return P[0].cols(); }
};

SmoothingOperator build_operators(const SmoothingCellMesh& mesh);

/// Per-cell smoothed gradient of a scalar field sampled at the surface points:
/// returns an N_IC x 2 matrix (d/dx1, d/dx2).
Eigen::MatrixX2d smooth(const SmoothingOperator& op, const Eigen::VectorXd& surface_values);

/// sum_L density_L V_L in cell order.
double integrate(const SmoothingCellMesh& mesh, const Eigen::VectorXd& density);

}  // namespace nnrk
