#pragma once

#include <vector>

#include "nnrk/discretization.hpp"

namespace nnrk {

struct RKConfig {
  int order = 1;  // monomial completeness, 0..2
  double normalized_support = 2.0;
};

int basis_size(int order);

/// 1D cubic B-spline on s = |x - x_I| / a.
double kernel_1d(double s);
/// Tensor-product kernel with per-axis support a.
double kernel_value(const Vec2& x, const Vec2& xI, const Vec2& a);

/// Nonzero shape functions at one point.
struct ShapeEval {
  Vec2 x = Vec2::Zero();
  std::vector<int> index;
  std::vector<double> value;

  double sum() const;
};

/// Reproducing kernel shape functions over a node set. When a domain with
/// holes is given, a node does not contribute at points whose connecting
/// segment crosses a hole (visibility criterion).
class RKApproximation {
 public:
  RKApproximation(const NodeSet& nodes, RKConfig cfg, const Domain2D* domain = nullptr);

  /// Nodes whose (visible) kernel is nonzero at x.
  std::vector<int> covering_nodes(const Vec2& x) const;
  /// M(x) = sum_I H(x - x_I) H(x - x_I)^T Phi_a(x - x_I), unscaled monomials.
  Eigen::MatrixXd moment_matrix(const Vec2& x) const;
  /// Throws SingularMomentError when coverage is insufficient.
  ShapeEval shape_values(const Vec2& x) const;

  const NodeSet& nodes() const { return nodes_; }
  const RKConfig& config() const { return cfg_; }

  static constexpr double max_condition = 1e12;

 private:
  bool visible(const Vec2& x, int node) const;

  NodeSet nodes_;
  RKConfig cfg_;
  std::vector<Polygon> holes_;
  double hole_tol_ = 0.0;  // points this close to a hole edge count as outside it
  Vec2 origin_ = Vec2::Zero();
  double bucket_ = 1.0;
  int nbx_ = 1, nby_ = 1;
  std::vector<std::vector<int>> buckets_;
};

/// Shape functions at a list of points in compressed-row form.
struct ShapeTable {
  std::vector<int> offset{0};
  std::vector<int> node;
  std::vector<double> value;

  std::size_t num_points() const { return offset.size() - 1; }
  std::size_t nnz() const { return node.size(); }
};

ShapeTable build_shape_table(const RKApproximation& rk, std::span<const Vec2> points);

}  // namespace nnrk
