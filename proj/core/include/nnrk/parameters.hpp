#pragma once

#include <Eigen/Dense>
#include <vector>

#include "nnrk/nn_enrich.hpp"

namespace nnrk {

enum class ParamGroup { D, WC, WL, WS };

/// Flat layout of all unknowns:
/// [ d (node, component) | W^C (block, kernel, node, component) | per block W^L | per block W^S ].
struct ParameterLayout {
  int num_nodes = 0;
  int blocks = 0;
  int kernels = 0;
  int hidden_layers = 1;
  int neurons = 1;

  static ParameterLayout make(int num_nodes, const NNConfig& nn);

  Eigen::Index d_size() const { return 2 * Eigen::Index(num_nodes); }
  Eigen::Index wc_offset() const { return d_size(); }
  Eigen::Index wc_size() const { return Eigen::Index(blocks) * kernels * num_nodes * 2; }
  Eigen::Index wl_size() const;
  Eigen::Index wl_offset(int block) const { return wc_offset() + wc_size() + Eigen::Index(block) * wl_size(); }
  Eigen::Index ws_size() const { return Eigen::Index(kernels) * 12; }
  Eigen::Index ws_offset(int block) const {
    return wc_offset() + wc_size() + Eigen::Index(blocks) * wl_size() + Eigen::Index(block) * ws_size();
  }
  Eigen::Index size() const { return ws_offset(blocks); }

  Eigen::Index d_index(int node, int comp) const { return 2 * Eigen::Index(node) + comp; }
  Eigen::Index wc_index(int block, int kernel, int node, int comp) const {
    return wc_offset() + ((Eigen::Index(block) * kernels + kernel) * num_nodes + node) * 2 + comp;
  }
  ParamGroup group(Eigen::Index i) const;
};

/// Structured view of a parameter vector.
struct ParameterSet {
  Eigen::MatrixX2d d;                             // node x component
  std::vector<Eigen::MatrixX2d> wc;               // [block * kernels + kernel](node, component)
  std::vector<NNBlock> blocks;
};

ParameterSet unflatten(const ParameterLayout& layout, const Eigen::VectorXd& p);
Eigen::VectorXd flatten(const ParameterLayout& layout, const ParameterSet& s);

std::vector<NNBlock> unpack_blocks(const ParameterLayout& layout, const Eigen::VectorXd& p);
void pack_blocks(const ParameterLayout& layout, const std::vector<NNBlock>& blocks, Eigen::VectorXd& p);
/// Adds a block gradient into the flat gradient vector.
void add_block_gradient(const ParameterLayout& layout, const BlockGradient& g, Eigen::VectorXd& grad);

/// Indices of the free parameters: all d, W^C of enriched nodes, and W^L, W^S
/// when `network` is set.
std::vector<Eigen::Index> active_indices(const ParameterLayout& layout, const std::vector<char>& enriched,
                                         bool network);

/// Per-entry variable scaling used by the optimisers: displacement-like
/// entries by u_ref, first-layer weights by 1/half_extent, output layer and
/// kernel centres by half_extent.
Eigen::VectorXd parameter_scales(const ParameterLayout& layout, double u_ref, double half_extent);

}  // namespace nnrk
