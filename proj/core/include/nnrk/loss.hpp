#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "nnrk/discretization.hpp"
#include "nnrk/material.hpp"
#include "nnrk/nn_enrich.hpp"
#include "nnrk/parameters.hpp"
#include "nnrk/rk.hpp"
#include "nnrk/scni.hpp"

namespace nnrk {

/// Material sub-region: degraded modulus and/or initial damage. Cells are
/// split along the polygon so that each cell lies on one side.
struct Zone {
  Polygon polygon;  // convex, counter-clockwise
  double modulus_factor = 1.0;
  double eta = 0.0;
};

struct ProblemSetup {
  Domain2D domain;
  NodeSet nodes;
  RKConfig rk;
  std::vector<RefineRegion> refine;
  std::vector<Zone> zones;
  MaterialParams material;
  NNConfig nn;
  double kappa_bc = 1e4;
};

struct DirichletSegment {
  int boundary = -1;  // index into SmoothingCellMesh::boundary
  std::array<bool, 2> fixed{false, false};
  Vec2 g = Vec2::Zero();
  Vec2 multiplier = Vec2::Zero();
  bool driven = false;
};

struct TractionSegment {
  int boundary = -1;
  Vec2 t = Vec2::Zero();  // GPa
};

/// Discretized problem: geometry, shape tables and the boundary data of the
/// current load step.
struct Problem {
  ProblemSetup setup;
  RKApproximation rk;
  SmoothingCellMesh mesh;
  SmoothingOperator op;
  ShapeTable surface;   // at mesh.points
  ShapeTable centroid;  // at cell centroids
  Eigen::Matrix2Xd surface_points;
  Eigen::Matrix2Xd centroid_points;
  Eigen::VectorXd volume;
  Eigen::VectorXd modulus;  // per-cell modulus factor
  std::vector<Lame> lame;   // per cell
  ParameterLayout layout;
  double ell_nn = 1.0;

  std::vector<DirichletSegment> dirichlet;
  std::vector<TractionSegment> traction;
  Eigen::MatrixX2d body;  // per cell, GPa/mm; empty when there is no body force

  static Problem build(ProblemSetup setup);
  Eigen::Index num_cells() const { return volume.size(); }
  /// Initial material state including zone pre-damage.
  MaterialState initial_state() const;
  /// Largest prescribed displacement magnitude (at least `floor`).
  double reference_displacement(double floor) const;

 private:
  Problem(ProblemSetup s, RKApproximation r) : setup(std::move(s)), rk(std::move(r)) {}
};

struct LossBreakdown {
  double strain = 0.0;
  double external = 0.0;
  double reg = 0.0;
  double bc = 0.0;
  double total = 0.0;
};

/// Displacement and network outputs at arbitrary points.
struct PointFields {
  Eigen::MatrixX2d u;
  Eigen::MatrixX2d u_rk;
  Eigen::MatrixX2d u_nn;
  std::vector<Eigen::Matrix2Xd> y;  // per block
};

/// Everything computed by one forward pass.
struct ForwardPass {
  Eigen::MatrixX2d u;                 // at surface points
  std::optional<KernelEval> kernels;  // at surface points
  std::vector<Eigen::MatrixX2d> v;    // per kernel: sum_I Psi_I w_IK at surface points
  std::vector<Mat2> grad;             // smoothed displacement gradient per cell
  std::vector<LiveResponse> cell;
  std::vector<std::array<Eigen::MatrixX2d, 2>> ygrad;  // per block, per alpha: N_IC x 2
  Eigen::MatrixX2d u_centroid;        // only with a body force
  std::optional<KernelEval> centroid_kernels;
  std::vector<Eigen::MatrixX2d> v_centroid;
  LossBreakdown loss;
};

/// The discrete potential (strain energy + external work + regularization +
/// augmented-Lagrangian boundary penalty) and its gradient.
class LossModel {
 public:
  /// `network` switches the NN enrichment on; `live_damage` evaluates the
  /// damage from the current strain through the history floor, otherwise the
  /// committed damage is used.
  LossModel(const Problem& problem, const MaterialState& state, std::vector<char> enriched, bool network,
            bool live_damage);

  LossBreakdown evaluate(const Eigen::VectorXd& p, Eigen::VectorXd* grad = nullptr) const;
  ForwardPass forward(const Eigen::VectorXd& p) const;
  /// Branch signature (tension/compression, history branch, regularization
  /// activity) used to skip kinks in finite-difference checks.
  std::vector<std::uint8_t> active_set(const Eigen::VectorXd& p) const;
  /// Displacements at arbitrary points.
  PointFields sample(const Eigen::VectorXd& p, std::span<const Vec2> points) const;
  /// Pointwise displacement gradient (row: component, column: direction) by
  /// central differences of `sample` with step 1e-7 times the domain size.
  std::vector<Mat2> sample_gradient(const Eigen::VectorXd& p, std::span<const Vec2> points) const;
  /// Normalized kernels at the surface points (empty without the network).
  Eigen::MatrixXd surface_kernels(const Eigen::VectorXd& p) const;
  /// Boundary resultant sum (lambda + kappa E (u - g)) A_e over driven segments.
  Vec2 reaction(const ForwardPass& fw) const;

  const Problem& problem() const { return problem_; }
  const std::vector<char>& enriched() const { return enriched_; }
  bool network() const { return network_; }
  bool live_damage() const { return live_; }
  double penalty_modulus() const;
  /// Overrides the boundary penalty factor of the problem.
  void set_penalty(double kappa) { kappa_ = kappa; }

 private:
  void point_values(const ShapeTable& table, const Eigen::VectorXd& p, const KernelEval* ke,
                    Eigen::MatrixX2d& u, Eigen::MatrixX2d* u_rk, std::vector<Eigen::MatrixX2d>* v) const;
  void point_gradient(const ShapeTable& table, const KernelEval* ke, const std::vector<Eigen::MatrixX2d>& v,
                      const Eigen::MatrixX2d& ubar, Eigen::VectorXd& grad, Eigen::MatrixXd* d_phi_hat) const;

  const Problem& problem_;
  const MaterialState& state_;
  std::vector<char> enriched_;
  bool network_;
  bool live_;
  double kappa_;
};

}  // namespace nnrk
