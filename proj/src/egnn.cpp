// SPDX-License-Identifier: Apache-2.0

#include "odorgen/egnn.hpp"

#include <algorithm>

#include "odorgen/errors.hpp"

namespace odorgen::egnn {

EdgeList fully_connected(std::size_t n) {
  EdgeList e;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      e.dst.push_back(static_cast<int>(i));
      e.src.push_back(static_cast<int>(j));
    }
  }
  return e;
}

EgnnLayerParams layer_names(const std::string& prefix) {
  return {prefix + ".node", prefix + ".coord"};
}

EgnnLayerParams init_layer(ParamStore& params, const std::string& prefix, std::size_t d,
                           std::mt19937_64& rng) {
  EgnnLayerParams names = layer_names(prefix);
  num::init_mlp(params, names.node_mlp, 2 * d + 1, d, d, rng);
  num::init_mlp(params, names.coord_mlp, 1, d, 1, rng);
  return names;
}

namespace {

void check_edges(const EdgeList& edges, std::size_t n) {
  if (edges.dst.size() != edges.src.size()) {
    throw IndexOutOfRange("edge list endpoints differ in length");
  }
  for (std::size_t k = 0; k < edges.size(); ++k) {
    for (int v : {edges.dst[k], edges.src[k]}) {
      if (v < 0 || static_cast<std::size_t>(v) >= n) {
        throw IndexOutOfRange("edge endpoint " + std::to_string(v) + " outside " +
                              std::to_string(n) + " nodes");
      }
    }
  }
}

void check_state(const Tensor& features, const Tensor& coords) {
  if (features.rows() != coords.rows() || coords.cols() != 3) {
    throw num::ShapeMismatch("node state features " + features.shape_string() +
                             " vs coords " + coords.shape_string());
  }
}

Var relative_positions(const VarState& s, const EdgeList& edges) {
  return num::sub(num::gather_rows(s.coords, edges.dst), num::gather_rows(s.coords, edges.src));
}

}  // namespace

Var compute_messages(Tape& tape, const ParamStore& params, const EgnnLayerParams& layer,
                     const VarState& state, const EdgeList& edges) {
  check_state(state.features.value(), state.coords.value());
  check_edges(edges, state.features.value().rows());
  Var dist = num::row_norm(relative_positions(state, edges));
  Var in = num::concat_cols({num::gather_rows(state.features, edges.dst),
                             num::gather_rows(state.features, edges.src), dist});
  return num::mlp(tape, params, layer.node_mlp, in);
}

Var update_coordinates(Tape& tape, const ParamStore& params, const EgnnLayerParams& layer,
                       const VarState& state, const EdgeList& edges) {
  check_state(state.features.value(), state.coords.value());
  const std::size_t n = state.coords.value().rows();
  check_edges(edges, n);
  if (edges.size() == 0) return state.coords;
  Var rel = relative_positions(state, edges);
  Var weight = num::mlp(tape, params, layer.coord_mlp, num::row_norm(rel));
  Var delta = num::scatter_add_rows(num::scale_rows(rel, weight), edges.dst, n);
  Tensor inv_degree = Tensor::matrix(n, 1);
  for (int i : edges.dst) inv_degree[static_cast<std::size_t>(i)] += 1.0;
  for (double& v : inv_degree.data()) v = 1.0 / std::max(1.0, v);
  return num::add(state.coords, num::scale_rows(delta, tape.constant(std::move(inv_degree))));
}

VarState egnn_layer(Tape& tape, const ParamStore& params, const EgnnLayerParams& layer,
                    const VarState& state, const EdgeList& edges) {
  if (edges.size() == 0) {
    check_state(state.features.value(), state.coords.value());
    return state;
  }
  const std::size_t n = state.features.value().rows();
  Var messages = compute_messages(tape, params, layer, state, edges);
  Var features = num::add(state.features, num::scatter_add_rows(messages, edges.dst, n));
  Var coords = update_coordinates(tape, params, layer, state, edges);
  return {features, coords};
}

VarState egnn_forward(Tape& tape, const ParamStore& params,
                      const std::vector<EgnnLayerParams>& layers, const VarState& state,
                      const EdgeList& edges) {
  VarState s = state;
  for (const auto& layer : layers) s = egnn_layer(tape, params, layer, s, edges);
  return s;
}

Tensor compute_messages(const NodeState& state, const ParamStore& params,
                        const EgnnLayerParams& layer, const EdgeList& edges) {
  Tape tape(false);
  VarState s{tape.constant(state.features), tape.constant(state.coords)};
  return compute_messages(tape, params, layer, s, edges).value();
}

Tensor update_coordinates(const NodeState& state, const ParamStore& params,
                          const EgnnLayerParams& layer, const EdgeList& edges) {
  Tape tape(false);
  VarState s{tape.constant(state.features), tape.constant(state.coords)};
  return update_coordinates(tape, params, layer, s, edges).value();
}

NodeState egnn_forward(const NodeState& state, const ParamStore& params,
                       const std::vector<EgnnLayerParams>& layers, const EdgeList& edges) {
  Tape tape(false);
  VarState s{tape.constant(state.features), tape.constant(state.coords)};
  VarState out = egnn_forward(tape, params, layers, s, edges);
  return {out.features.value(), out.coords.value()};
}

}  // namespace odorgen::egnn
