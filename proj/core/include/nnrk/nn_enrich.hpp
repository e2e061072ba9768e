#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "nnrk/discretization.hpp"
#include "nnrk/rk.hpp"

namespace nnrk {

struct NNConfig {
  int blocks = 1;
  int kernels = 4;
  int hidden_layers = 1;
  int neurons = 10;
  /// Lower bound on the kernel sharpness c; 0 selects the material length scale.
  double length_scale = 0.0;
  double beta_min = 10.0;
  double beta_max = 1000.0;
  double beta_init = 200.0;
  double rho_init = -6.0;
  double kappa_reg = 1e4;
  double enrich_kappa = 0.5;
  /// Absolute psi0+ threshold used when psi_c = 0.
  double enrich_threshold = 0.0;
  /// When set, every node inside this polygon is enriched at the first step.
  std::optional<Polygon> force_region;
  std::uint64_t seed = 1;

  int kernels_total() const { return blocks * kernels; }
  /// Throws Error on inconsistent settings.
  void validate() const;
};

/// Overflow-safe log(1 + e^t).
double softplus(double t);
double sigmoid(double t);
/// S(z; beta) = log(1 + e^{beta z}) / beta.
double parametric_softplus(double z, double beta);

/// Regularized step on one side of a kernel and its partial derivatives.
/// Side 1 is the upper edge (plateau below ybar), side 2 the lower edge.
struct StepValue {
  double value = 0.0;
  double d_y = 0.0;
  double d_ybar = 0.0;
  double d_c = 0.0;
  double d_beta = 0.0;
};
StepValue regularized_step(int side, double y, double ybar, double c, double beta);

/// Dense tanh network R^2 -> R^2 with an affine output layer.
class Mlp {
 public:
  Mlp() = default;
  Mlp(int hidden_layers, int neurons);

  int num_layers() const { return static_cast<int>(W.size()); }
  int num_params() const;
  void pack(double* out) const;
  void unpack(const double* in);

  Vec2 eval(const Vec2& x) const;

  /// Layer inputs kept for the backward pass; a[0] is the input batch.
  struct Cache {
    std::vector<Eigen::MatrixXd> a;
  };
  Eigen::Matrix2Xd forward(const Eigen::Matrix2Xd& X, Cache* cache = nullptr) const;
  /// Adds d loss / d params (packed layout) for output sensitivities dY.
  void backward(const Cache& cache, const Eigen::Matrix2Xd& dY, double* grad) const;

  std::vector<Eigen::MatrixXd> W;
  std::vector<Eigen::VectorXd> b;
};

/// Raw shape-control triple of one kernel side: centre, sharpness and
/// steepness in unconstrained form.
struct SideParams {
  double ybar = 0.0;
  double rho = 0.0;  // c = l (1 + softplus(rho))
  double r = 0.0;    // beta = beta_min + (beta_max - beta_min) sigmoid(r)
};

struct NNBlock {
  Mlp net;
  /// Indexed ((K * 2) + alpha) * 2 + (side - 1).
  std::vector<SideParams> sides;
};

inline int side_index(int kernel, int alpha, int side) { return (kernel * 2 + alpha) * 2 + (side - 1); }

double materialize_c(const SideParams& s, double ell);
double materialize_beta(const SideParams& s, const NNConfig& cfg);

/// Unnormalized plateau kernel phi_JK at a parametric point y.
double nn_kernel(const Vec2& y, const NNBlock& block, int kernel, const NNConfig& cfg, double ell);

inline constexpr double normalization_floor = 1e-12;

/// phi_hat = phi / (sum(phi) + floor): the plain ratio wherever the kernels
/// are not negligible, fading to zero where they all vanish.
Eigen::VectorXd normalize_kernels(const Eigen::VectorXd& phi);

/// Normalized kernels of every block at a batch of points, with the data needed
/// to back-propagate.
struct KernelEval {
  Eigen::MatrixXd phi_hat;  // points x kernels_total
  Eigen::MatrixXd phi;
  Eigen::VectorXd sum;
  std::vector<Eigen::Matrix2Xd> y;  // per block
  std::vector<Mlp::Cache> cache;
};

KernelEval evaluate_kernels(const std::vector<NNBlock>& blocks, const NNConfig& cfg, double ell,
                            const Eigen::Matrix2Xd& X, bool keep_cache);

/// Gradient of a scalar with respect to the block parameters, given its
/// sensitivity to phi_hat (points x kernels) and to y (per block, 2 x points).
struct BlockGradient {
  std::vector<Eigen::VectorXd> net;      // packed Mlp layout
  std::vector<Eigen::MatrixX3d> sides;  // rows follow NNBlock::sides, cols (ybar, rho, r)
};

BlockGradient backprop_kernels(const std::vector<NNBlock>& blocks, const NNConfig& cfg, double ell,
                               const KernelEval& eval, const Eigen::MatrixXd& d_phi_hat,
                               const std::vector<Eigen::Matrix2Xd>* d_y_extra);

/// Random hidden layers plus a least-squares identity output layer fitted on
/// `fit_points`; kernel centres tile the parametric image of the points.
std::vector<NNBlock> initialize_blocks(const NNConfig& cfg, double ell,
                                       const std::vector<Vec2>& fit_points, std::uint64_t seed);

/// Kernel grid for n kernels: (columns along y1, rows along y2).
std::pair<int, int> kernel_grid(int kernels);

/// Nodes whose support contains the centroid of a cell with psi0+ above the
/// threshold, unioned with `previous` (one flag per node).
std::vector<char> select_enriched_nodes(const Eigen::VectorXd& psi_pos, const SmoothingCellMesh& mesh,
                                        const NodeSet& nodes, double threshold,
                                        const std::vector<char>& previous);

/// u_NN at one point: sum_K phi_hat_K sum_I Psi_I w_IK. `weights` is indexed
/// [kernel](node, component); nodes outside `enriched` are ignored.
Vec2 enrichment_displacement(const ShapeEval& shape, const Eigen::VectorXd& phi_hat,
                             const std::vector<Eigen::MatrixX2d>& weights,
                             const std::vector<char>& enriched);

}  // namespace nnrk
