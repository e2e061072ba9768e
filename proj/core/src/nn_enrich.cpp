#include "nnrk/nn_enrich.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <random>

#include "nnrk/errors.hpp"
#include "parallel.hpp"

namespace nnrk {

void NNConfig::validate() const {
  if (blocks < 0) throw Error("nn.blocks must be >= 0");
  if (kernels < 1) throw Error("nn.kernels must be >= 1");
  if (hidden_layers < 1) throw Error("nn.hidden_layers must be >= 1");
  if (neurons < 1) throw Error("nn.neurons must be >= 1");
  if (length_scale < 0.0) throw Error("nn.length_scale must be >= 0");
  if (!(beta_min > 0.0 && beta_max > beta_min)) throw Error("nn: need 0 < beta_min < beta_max");
  if (!(beta_init > beta_min && beta_init < beta_max))
    throw Error("nn.beta_init must lie strictly between beta_min and beta_max");
  if (!(kappa_reg >= 0.0)) throw Error("nn.kappa_reg must be >= 0");
  if (!(enrich_kappa > 0.0)) throw Error("nn.enrich_kappa must be positive");
  if (!(enrich_threshold >= 0.0)) throw Error("nn.enrich_threshold must be >= 0");
}

double softplus(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))); }

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double parametric_softplus(double z, double beta) { return softplus(beta * z) / beta; }

namespace {

// t sigmoid(t) - softplus(t), evaluated without cancellation for large t.
double softplus_beta_term(double t) {
  if (t > 0.0) return -t * sigmoid(-t) - std::log1p(std::exp(-t));
  return t * sigmoid(t) - std::log1p(std::exp(t));
}

}  // namespace

StepValue regularized_step(int side, double y, double ybar, double c, double beta) {
  const double s = side == 1 ? -1.0 : 1.0;
  const double z = s * (y - ybar) / c;
  const double tp = beta * (z + 0.5);
  const double tm = beta * (z - 0.5);
  StepValue v;
  v.value = (softplus(tp) - softplus(tm)) / beta;
  const double dz = sigmoid(tp) - sigmoid(tm);
  v.d_y = dz * s / c;
  v.d_ybar = -dz * s / c;
  v.d_c = -dz * z / c;
  v.d_beta = (softplus_beta_term(tp) - softplus_beta_term(tm)) / (beta * beta);
  return v;
}

Mlp::Mlp(int hidden_layers, int neurons) {
  int in = 2;
  for (int l = 0; l < hidden_layers; ++l) {
    W.push_back(Eigen::MatrixXd::Zero(neurons, in));
    b.push_back(Eigen::VectorXd::Zero(neurons));
    in = neurons;
  }
  W.push_back(Eigen::MatrixXd::Zero(2, in));
  b.push_back(Eigen::VectorXd::Zero(2));
}

int Mlp::num_params() const {
  int n = 0;
  for (std::size_t l = 0; l < W.size(); ++l) n += static_cast<int>(W[l].size() + b[l].size());
  return n;
}

void Mlp::pack(double* out) const {
  for (std::size_t l = 0; l < W.size(); ++l) {
    out = std::copy(W[l].data(), W[l].data() + W[l].size(), out);
    out = std::copy(b[l].data(), b[l].data() + b[l].size(), out);
  }
}

void Mlp::unpack(const double* in) {
  for (std::size_t l = 0; l < W.size(); ++l) {
    std::copy(in, in + W[l].size(), W[l].data());
    in += W[l].size();
    std::copy(in, in + b[l].size(), b[l].data());
    in += b[l].size();
  }
}

Vec2 Mlp::eval(const Vec2& x) const {
  Eigen::VectorXd a = x;
  const int last = num_layers() - 1;
  for (int l = 0; l < last; ++l) a = (W[l] * a + b[l]).array().tanh().matrix();
  return W[last] * a + b[last];
}

Eigen::Matrix2Xd Mlp::forward(const Eigen::Matrix2Xd& X, Cache* cache) const {
  const int last = num_layers() - 1;
  Eigen::MatrixXd a = X;
  if (cache) cache->a.assign(1, a);
  for (int l = 0; l < last; ++l) {
    Eigen::MatrixXd z = W[l] * a;
    z.colwise() += b[l];
    a = z.array().tanh().matrix();
    if (cache) cache->a.push_back(a);
  }
  Eigen::Matrix2Xd y = W[last] * a;
  y.colwise() += b[last];
  return y;
}

void Mlp::backward(const Cache& cache, const Eigen::Matrix2Xd& dY, double* grad) const {
  std::vector<double*> wptr(W.size()), bptr(W.size());
  double* p = grad;
  for (std::size_t l = 0; l < W.size(); ++l) {
    wptr[l] = p;
    p += W[l].size();
    bptr[l] = p;
    p += b[l].size();
  }
  Eigen::MatrixXd delta = dY;
  for (int l = num_layers() - 1; l >= 0; --l) {
    Eigen::Map<Eigen::MatrixXd>(wptr[l], W[l].rows(), W[l].cols()).noalias() +=
        delta * cache.a[l].transpose();
    Eigen::Map<Eigen::VectorXd>(bptr[l], b[l].size()) += delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd back = W[l].transpose() * delta;
      delta = back.array() * (1.0 - cache.a[l].array().square());
    }
  }
}

double materialize_c(const SideParams& s, double ell) { return ell * (1.0 + softplus(s.rho)); }

double materialize_beta(const SideParams& s, const NNConfig& cfg) {
  return cfg.beta_min + (cfg.beta_max - cfg.beta_min) * sigmoid(s.r);
}

double nn_kernel(const Vec2& y, const NNBlock& block, int kernel, const NNConfig& cfg, double ell) {
  double phi = 1.0;
  for (int a = 0; a < 2; ++a)
    for (int side = 1; side <= 2; ++side) {
      const SideParams& s = block.sides[side_index(kernel, a, side)];
      phi *= regularized_step(side, y(a), s.ybar, materialize_c(s, ell), materialize_beta(s, cfg)).value;
    }
  return phi;
}

Eigen::VectorXd normalize_kernels(const Eigen::VectorXd& phi) {
  return phi / (phi.sum() + normalization_floor);
}

KernelEval evaluate_kernels(const std::vector<NNBlock>& blocks, const NNConfig& cfg, double ell,
                            const Eigen::Matrix2Xd& X, bool keep_cache) {
  const Eigen::Index n = X.cols();
  const int nk = cfg.kernels;
  const int nt = static_cast<int>(blocks.size()) * nk;
  KernelEval ev;
  ev.phi.resize(n, nt);
  ev.y.resize(blocks.size());
  if (keep_cache) ev.cache.resize(blocks.size());
  for (std::size_t J = 0; J < blocks.size(); ++J)
    ev.y[J] = blocks[J].net.forward(X, keep_cache ? &ev.cache[J] : nullptr);

  struct Side {
    double ybar, c, beta;
  };
  std::vector<Side> sides;
  for (const auto& blk : blocks)
    for (const auto& s : blk.sides) sides.push_back({s.ybar, materialize_c(s, ell), materialize_beta(s, cfg)});

  detail::parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    for (std::size_t J = 0; J < blocks.size(); ++J) {
      for (int K = 0; K < nk; ++K) {
        double phi = 1.0;
        for (int a = 0; a < 2; ++a)
          for (int side = 1; side <= 2; ++side) {
            const Side& s = sides[J * nk * 4 + side_index(K, a, side)];
            phi *= regularized_step(side, ev.y[J](a, i), s.ybar, s.c, s.beta).value;
          }
        ev.phi(i, J * nk + K) = phi;
      }
    }
  });
  ev.sum = ev.phi.rowwise().sum();
  ev.phi_hat.resize(n, nt);
  for (Eigen::Index i = 0; i < n; ++i) ev.phi_hat.row(i) = ev.phi.row(i) / (ev.sum(i) + normalization_floor);
  return ev;
}

BlockGradient backprop_kernels(const std::vector<NNBlock>& blocks, const NNConfig& cfg, double ell,
                               const KernelEval& ev, const Eigen::MatrixXd& d_phi_hat,
                               const std::vector<Eigen::Matrix2Xd>* d_y_extra) {
  const Eigen::Index n = ev.phi.rows();
  const int nk = cfg.kernels;
  BlockGradient g;
  std::vector<Eigen::Matrix2Xd> dY(blocks.size());
  for (std::size_t J = 0; J < blocks.size(); ++J) {
    g.net.push_back(Eigen::VectorXd::Zero(blocks[J].net.num_params()));
    g.sides.push_back(Eigen::MatrixX3d::Zero(static_cast<Eigen::Index>(blocks[J].sides.size()), 3));
    dY[J] = d_y_extra ? (*d_y_extra)[J] : Eigen::Matrix2Xd::Zero(2, n);
  }

  // Derivative factors of the side reparametrizations.
  std::vector<std::array<double, 5>> side_data;  // ybar, c, beta, dc/drho, dbeta/dr
  for (const auto& blk : blocks)
    for (const auto& s : blk.sides) {
      const double sr = sigmoid(s.r);
      side_data.push_back({s.ybar, materialize_c(s, ell), materialize_beta(s, cfg), ell * sigmoid(s.rho),
                           (cfg.beta_max - cfg.beta_min) * sr * (1.0 - sr)});
    }

  for (Eigen::Index i = 0; i < n; ++i) {
    const double dot = d_phi_hat.row(i).dot(ev.phi_hat.row(i));
    for (std::size_t J = 0; J < blocks.size(); ++J) {
      for (int K = 0; K < nk; ++K) {
        const Eigen::Index col = static_cast<Eigen::Index>(J) * nk + K;
        const double dphi = (d_phi_hat(i, col) - dot) / (ev.sum(i) + normalization_floor);
        if (dphi == 0.0) continue;
        StepValue f[4];
        int idx[4];
        for (int a = 0; a < 2; ++a)
          for (int side = 1; side <= 2; ++side) {
            const int m = a * 2 + side - 1;
            idx[m] = side_index(K, a, side);
            const auto& sd = side_data[J * nk * 4 + idx[m]];
            f[m] = regularized_step(side, ev.y[J](a, i), sd[0], sd[1], sd[2]);
          }
        for (int m = 0; m < 4; ++m) {
          double others = dphi;
          for (int q = 0; q < 4; ++q)
            if (q != m) others *= f[q].value;
          const auto& sd = side_data[J * nk * 4 + idx[m]];
          dY[J](m / 2, i) += others * f[m].d_y;
          g.sides[J](idx[m], 0) += others * f[m].d_ybar;
          g.sides[J](idx[m], 1) += others * f[m].d_c * sd[3];
          g.sides[J](idx[m], 2) += others * f[m].d_beta * sd[4];
        }
      }
    }
  }
  for (std::size_t J = 0; J < blocks.size(); ++J) blocks[J].net.backward(ev.cache[J], dY[J], g.net[J].data());
  return g;
}

std::pair<int, int> kernel_grid(int kernels) {
  int rows = static_cast<int>(std::floor(std::sqrt(static_cast<double>(kernels))));
  while (rows > 1 && kernels % rows != 0) --rows;
  return {kernels / rows, rows};
}

std::vector<NNBlock> initialize_blocks(const NNConfig& cfg, double ell, const std::vector<Vec2>& fit_points,
                                       std::uint64_t seed) {
  if (fit_points.empty()) throw Error("initialize_blocks: no points in the enrichment region");
  const auto [lo, hi] = bounding_box(fit_points);
  const Vec2 center = 0.5 * (lo + hi);
  const double half = std::max(0.5 * (hi - lo).maxCoeff(), 1e-12);
  const Eigen::Index n = static_cast<Eigen::Index>(fit_points.size());
  Eigen::Matrix2Xd X(2, n);
  for (Eigen::Index i = 0; i < n; ++i) X.col(i) = fit_points[i];

  std::vector<NNBlock> blocks;
  for (int J = 0; J < cfg.blocks; ++J) {
    std::mt19937_64 rng(seed * 1000003ULL + static_cast<std::uint64_t>(J));
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    NNBlock blk;
    blk.net = Mlp(cfg.hidden_layers, cfg.neurons);
    auto& net = blk.net;
    const int last = net.num_layers() - 1;
    for (int l = 0; l < last; ++l) {
      const double s = std::sqrt(3.0 / static_cast<double>(net.W[l].cols())) / (l == 0 ? half : 1.0);
      for (Eigen::Index k = 0; k < net.W[l].size(); ++k) net.W[l].data()[k] = s * uni(rng);
      if (l == 0) {
        for (Eigen::Index k = 0; k < net.b[l].size(); ++k) net.b[l](k) = 0.5 * uni(rng);
        net.b[l] -= net.W[l] * center;
      }
    }
    Mlp::Cache cache;
    net.forward(X, &cache);
    const Eigen::MatrixXd& Hl = cache.a.back();
    Eigen::MatrixXd A(n, Hl.rows() + 1);
    A.leftCols(Hl.rows()) = Hl.transpose();
    A.col(Hl.rows()).setOnes();
    const Eigen::MatrixXd sol = A.completeOrthogonalDecomposition().solve(Eigen::MatrixXd(X.transpose()));
    net.W[last] = sol.topRows(Hl.rows()).transpose();
    net.b[last] = sol.row(Hl.rows()).transpose();

    const Eigen::Matrix2Xd Y = net.forward(X);
    const Vec2 ylo = Y.rowwise().minCoeff();
    const Vec2 yhi = Y.rowwise().maxCoeff();
    const Vec2 ext = (yhi - ylo).cwiseMax(Vec2::Constant(2.0 * half * 1e-6));
    const auto [nx, ny] = kernel_grid(cfg.kernels);
    const int counts[2] = {nx, ny};
    auto edge = [&](int a, int k) {
      if (k == 0) return ylo(a) - ext(a);
      if (k == counts[a]) return yhi(a) + ext(a);
      return ylo(a) + k * (yhi(a) - ylo(a)) / counts[a];
    };
    const double r0 = std::log((cfg.beta_init - cfg.beta_min) / (cfg.beta_max - cfg.beta_init));
    blk.sides.resize(static_cast<std::size_t>(cfg.kernels) * 4);
    for (int K = 0; K < cfg.kernels; ++K) {
      const int kk[2] = {K % nx, K / nx};
      for (int a = 0; a < 2; ++a) {
        blk.sides[side_index(K, a, 1)] = {edge(a, kk[a] + 1), cfg.rho_init, r0};
        blk.sides[side_index(K, a, 2)] = {edge(a, kk[a]), cfg.rho_init, r0};
      }
    }
    (void)ell;
    blocks.push_back(std::move(blk));
  }
  return blocks;
}

std::vector<char> select_enriched_nodes(const Eigen::VectorXd& psi_pos, const SmoothingCellMesh& mesh,
                                        const NodeSet& nodes, double threshold,
                                        const std::vector<char>& previous) {
  if (psi_pos.size() != static_cast<Eigen::Index>(mesh.cells.size()))
    throw DimensionError("select_enriched_nodes: one psi0+ value per cell expected");
  std::vector<char> out = previous;
  out.resize(nodes.size(), 0);
  for (std::size_t L = 0; L < mesh.cells.size(); ++L) {
    if (!(psi_pos(L) > 0.0 && psi_pos(L) >= threshold)) continue;
    const Vec2& c = mesh.cells[L].centroid;
    for (std::size_t J = 0; J < nodes.size(); ++J)
      if (!out[J] && kernel_value(c, nodes.x[J], nodes.support[J]) > 0.0) out[J] = 1;
  }
  return out;
}

Vec2 enrichment_displacement(const ShapeEval& shape, const Eigen::VectorXd& phi_hat,
                             const std::vector<Eigen::MatrixX2d>& weights, const std::vector<char>& enriched) {
  Vec2 u = Vec2::Zero();
  for (std::size_t K = 0; K < weights.size(); ++K) {
    if (phi_hat(K) == 0.0) continue;
    Vec2 v = Vec2::Zero();
    for (std::size_t k = 0; k < shape.index.size(); ++k) {
      const int I = shape.index[k];
      if (enriched[I]) v += shape.value[k] * weights[K].row(I).transpose();
    }
    u += phi_hat(K) * v;
  }
  return u;
}

}  // namespace nnrk
