#include "nnrk/parameters.hpp"

#include "nnrk/errors.hpp"

namespace nnrk {

ParameterLayout ParameterLayout::make(int num_nodes, const NNConfig& nn) {
  ParameterLayout l;
  l.num_nodes = num_nodes;
  l.blocks = nn.blocks;
  l.kernels = nn.kernels;
  l.hidden_layers = nn.hidden_layers;
  l.neurons = nn.neurons;
  return l;
}

Eigen::Index ParameterLayout::wl_size() const {
  if (blocks == 0) return 0;
  return Mlp(hidden_layers, neurons).num_params();
}

ParamGroup ParameterLayout::group(Eigen::Index i) const {
  if (i < wc_offset()) return ParamGroup::D;
  if (i < wl_offset(0)) return ParamGroup::WC;
  if (i < ws_offset(0)) return ParamGroup::WL;
  return ParamGroup::WS;
}

namespace {

void check(const ParameterLayout& layout, const Eigen::VectorXd& p) {
  if (p.size() != layout.size())
    throw DimensionError("parameter vector has " + std::to_string(p.size()) + " entries, layout expects " +
                         std::to_string(layout.size()));
}

}  // namespace

std::vector<NNBlock> unpack_blocks(const ParameterLayout& layout, const Eigen::VectorXd& p) {
  check(layout, p);
  std::vector<NNBlock> blocks(layout.blocks);
  for (int J = 0; J < layout.blocks; ++J) {
    blocks[J].net = Mlp(layout.hidden_layers, layout.neurons);
    blocks[J].net.unpack(p.data() + layout.wl_offset(J));
    blocks[J].sides.resize(static_cast<std::size_t>(layout.kernels) * 4);
    const double* s = p.data() + layout.ws_offset(J);
    for (auto& side : blocks[J].sides) {
      side.ybar = *s++;
      side.rho = *s++;
      side.r = *s++;
    }
  }
  return blocks;
}

void pack_blocks(const ParameterLayout& layout, const std::vector<NNBlock>& blocks, Eigen::VectorXd& p) {
  check(layout, p);
  if (static_cast<int>(blocks.size()) != layout.blocks) throw DimensionError("pack_blocks: block count mismatch");
  for (int J = 0; J < layout.blocks; ++J) {
    if (blocks[J].net.num_params() != layout.wl_size()) throw DimensionError("pack_blocks: network size mismatch");
    blocks[J].net.pack(p.data() + layout.wl_offset(J));
    double* s = p.data() + layout.ws_offset(J);
    for (const auto& side : blocks[J].sides) {
      *s++ = side.ybar;
      *s++ = side.rho;
      *s++ = side.r;
    }
  }
}

void add_block_gradient(const ParameterLayout& layout, const BlockGradient& g, Eigen::VectorXd& grad) {
  for (int J = 0; J < layout.blocks; ++J) {
    grad.segment(layout.wl_offset(J), layout.wl_size()) += g.net[J];
    for (Eigen::Index k = 0; k < g.sides[J].rows(); ++k)
      for (int c = 0; c < 3; ++c) grad(layout.ws_offset(J) + 3 * k + c) += g.sides[J](k, c);
  }
}

ParameterSet unflatten(const ParameterLayout& layout, const Eigen::VectorXd& p) {
  check(layout, p);
  ParameterSet s;
  s.d.resize(layout.num_nodes, 2);
  for (int I = 0; I < layout.num_nodes; ++I)
    for (int c = 0; c < 2; ++c) s.d(I, c) = p(layout.d_index(I, c));
  for (int J = 0; J < layout.blocks; ++J)
    for (int K = 0; K < layout.kernels; ++K) {
      Eigen::MatrixX2d w(layout.num_nodes, 2);
      for (int I = 0; I < layout.num_nodes; ++I)
        for (int c = 0; c < 2; ++c) w(I, c) = p(layout.wc_index(J, K, I, c));
      s.wc.push_back(std::move(w));
    }
  s.blocks = unpack_blocks(layout, p);
  return s;
}

Eigen::VectorXd flatten(const ParameterLayout& layout, const ParameterSet& s) {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(layout.size());
  if (s.d.rows() != layout.num_nodes || static_cast<int>(s.wc.size()) != layout.blocks * layout.kernels)
    throw DimensionError("flatten: parameter set does not match the layout");
  for (int I = 0; I < layout.num_nodes; ++I)
    for (int c = 0; c < 2; ++c) p(layout.d_index(I, c)) = s.d(I, c);
  for (int J = 0; J < layout.blocks; ++J)
    for (int K = 0; K < layout.kernels; ++K)
      for (int I = 0; I < layout.num_nodes; ++I)
        for (int c = 0; c < 2; ++c) p(layout.wc_index(J, K, I, c)) = s.wc[J * layout.kernels + K](I, c);
  pack_blocks(layout, s.blocks, p);
  return p;
}

std::vector<Eigen::Index> active_indices(const ParameterLayout& layout, const std::vector<char>& enriched,
                                         bool network) {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < layout.d_size(); ++i) idx.push_back(i);
  for (int J = 0; J < layout.blocks; ++J)
    for (int K = 0; K < layout.kernels; ++K)
      for (int I = 0; I < layout.num_nodes; ++I)
        if (I < static_cast<int>(enriched.size()) && enriched[I])
          for (int c = 0; c < 2; ++c) idx.push_back(layout.wc_index(J, K, I, c));
  if (network)
    for (Eigen::Index i = layout.wl_offset(0); i < layout.size(); ++i) idx.push_back(i);
  return idx;
}

Eigen::VectorXd parameter_scales(const ParameterLayout& layout, double u_ref, double half_extent) {
  Eigen::VectorXd s = Eigen::VectorXd::Ones(layout.size());
  s.head(layout.wc_offset() + layout.wc_size()).setConstant(u_ref);
  if (layout.blocks == 0) return s;
  const Mlp shape(layout.hidden_layers, layout.neurons);
  for (int J = 0; J < layout.blocks; ++J) {
    Eigen::Index o = layout.wl_offset(J);
    for (int l = 0; l < shape.num_layers(); ++l) {
      const Eigen::Index nw = shape.W[l].size(), nb = shape.b[l].size();
      const bool first = l == 0, last = l == shape.num_layers() - 1;
      const double ws = last ? half_extent : (first ? 1.0 / half_extent : 1.0);
      const double bs = last ? half_extent : 1.0;
      s.segment(o, nw).setConstant(ws);
      s.segment(o + nw, nb).setConstant(bs);
      o += nw + nb;
    }
    for (int k = 0; k < layout.kernels * 4; ++k) s(layout.ws_offset(J) + 3 * k) = half_extent;
  }
  return s;
}

}  // namespace nnrk
