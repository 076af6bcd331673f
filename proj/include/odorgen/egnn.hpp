// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <random>
#include <string>
#include <vector>

#include "odorgen/autodiff.hpp"
#include "odorgen/params.hpp"
#include "odorgen/tensor.hpp"

namespace odorgen::egnn {

using num::ParamStore;
using num::Tape;
using num::Tensor;
using num::Var;

/// Hidden node features [n x d] and positions [n x 3].
struct NodeState {
  Tensor features;
  Tensor coords;
};

/// Directed edges; message k flows from src[k] into dst[k].
struct EdgeList {
  std::vector<int> dst;
  std::vector<int> src;

  std::size_t size() const { return dst.size(); }
};

/// Every ordered pair (i, j), i != j.
EdgeList fully_connected(std::size_t n);

/// Parameter names of one layer inside a ParamStore.
struct EgnnLayerParams {
  std::string node_mlp;   // 2d+1 -> d -> d
  std::string coord_mlp;  // 1 -> d -> 1
};

/// Registers a layer under `prefix` and returns its names.
EgnnLayerParams init_layer(ParamStore& params, const std::string& prefix, std::size_t d,
                           std::mt19937_64& rng);
/// Names for an existing layer registered under `prefix`.
EgnnLayerParams layer_names(const std::string& prefix);

struct VarState {
  Var features;
  Var coords;
};

// Recorded variants used by training and gradient checks.
Var compute_messages(Tape& tape, const ParamStore& params, const EgnnLayerParams& layer,
                     const VarState& state, const EdgeList& edges);
Var update_coordinates(Tape& tape, const ParamStore& params, const EgnnLayerParams& layer,
                       const VarState& state, const EdgeList& edges);
VarState egnn_layer(Tape& tape, const ParamStore& params, const EgnnLayerParams& layer,
                    const VarState& state, const EdgeList& edges);
VarState egnn_forward(Tape& tape, const ParamStore& params,
                      const std::vector<EgnnLayerParams>& layers, const VarState& state,
                      const EdgeList& edges);

/// m_ij = MLP_node([h_i, h_j, |r_i - r_j|]) per directed edge, [|E| x d].
/// Throws IndexOutOfRange for edges outside the node set.
Tensor compute_messages(const NodeState& state, const ParamStore& params,
                        const EgnnLayerParams& layer, const EdgeList& edges);
/// r_i + sum_j MLP_coord(|r_i - r_j|) (r_i - r_j) / deg(i). On a fully
/// connected graph deg(i) = n - 1.
Tensor update_coordinates(const NodeState& state, const ParamStore& params,
                          const EgnnLayerParams& layer, const EdgeList& edges);
NodeState egnn_forward(const NodeState& state, const ParamStore& params,
                       const std::vector<EgnnLayerParams>& layers, const EdgeList& edges);

}  // namespace odorgen::egnn
