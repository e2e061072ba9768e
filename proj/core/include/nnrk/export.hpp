#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "nnrk/config.hpp"
#include "nnrk/driver.hpp"
#include "nnrk/loss.hpp"

namespace nnrk {

/// Writes `content` to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Per-cell fields at the cell centroids.
struct CellFields {
  Eigen::Matrix2Xd x;
  Eigen::MatrixX2d u, u_rk, u_nn;
  Eigen::MatrixX3d eps;  // eps11, eps22, eps12
  Eigen::VectorXd eta, psi_pos;
  Eigen::MatrixX2d y;           // first block (zero without the network)
  Eigen::VectorXd grad_y_norm;  // largest |grad y| over blocks and components
};

CellFields cell_fields(const LossModel& model, const Eigen::VectorXd& p);

void write_cell_csv(const CellFields& f, std::ostream& os);
/// Legacy VTK ASCII unstructured grid of the cell polygons with the cell arrays.
void write_vtk(const SmoothingCellMesh& mesh, const CellFields& f, std::ostream& os);
/// Samples u, u_rk and u_nn along a straight line.
void write_transect(const LossModel& model, const Eigen::VectorXd& p, const Transect& t, std::ostream& os);

void write_step_csv(std::span<const StepRecord> records, std::ostream& os);
/// Load-displacement curve: step, driven displacement, reaction (N/mm).
void write_load_curve(std::span<const StepRecord> records, std::ostream& os);

}  // namespace nnrk
