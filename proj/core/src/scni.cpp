#include "nnrk/scni.hpp"

#include "nnrk/errors.hpp"

namespace nnrk {

SmoothingOperator build_operators(const SmoothingCellMesh& mesh) {
  SmoothingOperator op;
  op.points = mesh.points;
  const auto nc = static_cast<Eigen::Index>(mesh.cells.size());
  const auto np = static_cast<Eigen::Index>(mesh.points.size());
  for (int a = 0; a < 2; ++a) {
    std::vector<Eigen::Triplet<double>> trip;
    for (Eigen::Index L = 0; L < nc; ++L) {
      const auto& cell = mesh.cells[L];
      for (const auto& s : cell.segments)
        trip.emplace_back(L, s.point, s.length * s.normal(a) / cell.volume);
    }
    op.P[a].resize(nc, np);
    op.P[a].setFromTriplets(trip.begin(), trip.end());
  }
  return op;
}

Eigen::MatrixX2d smooth(const SmoothingOperator& op, const Eigen::VectorXd& surface_values) {
  if (surface_values.size() != op.num_points())
    throw DimensionError("smooth: expected " + std::to_string(op.num_points()) +
                         " surface values, got " + std::to_string(surface_values.size()));
  Eigen::MatrixX2d g(op.num_cells(), 2);
  for (int a = 0; a < 2; ++a) g.col(a) = op.P[a] * surface_values;
  return g;
}

double integrate(const SmoothingCellMesh& mesh, const Eigen::VectorXd& density) {
  if (density.size() != static_cast<Eigen::Index>(mesh.cells.size()))
    throw DimensionError("integrate: one density value per cell expected");
  double s = 0.0;
  for (std::size_t L = 0; L < mesh.cells.size(); ++L) s += density(L) * mesh.cells[L].volume;
  return s;
}

}  // namespace nnrk
