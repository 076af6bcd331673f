// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "odorgen/params.hpp"
#include "odorgen/tensor.hpp"

namespace odorgen::num {

ODORGEN_DEFINE_ERROR(NotScalarLoss);

class Tape;

/// Handle to a value recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Tensor& value() const;
};

/// Reverse-mode tape over matrix-valued nodes. Nodes are appended in
/// evaluation order; backward() walks them in reverse. A tape built with
/// recording disabled only evaluates values (inference mode).
class Tape {
 public:
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }

  Var constant(Tensor value);
  /// Leaf whose gradient is tracked (for checks against inputs).
  Var variable(Tensor value);
  /// Leaf bound to a named parameter; its gradient can be flushed into a
  /// ParamStore after backward().
  Var param(const ParamStore& store, const std::string& name);

  const Tensor& value(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].value; }
  /// Zero tensor when no gradient reached the node.
  const Tensor& grad(Var v) const;

  /// Seeds d(loss)/d(loss) = 1 and propagates. Throws NotScalarLoss.
  void backward(Var loss);
  /// backward() followed by accumulating parameter gradients into `store`.
  void backward(Var loss, ParamStore& store);

  std::size_t size() const { return nodes_.size(); }

  // Used by the op implementations.
  using Backprop = std::function<void(Tape&, int self)>;
  Var push(Tensor value, std::vector<int> parents, Backprop backprop);
  Tensor& grad_ref(int id);
  const Tensor& value_of(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  bool requires_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    Backprop backprop;
    std::string param_name;
  };
  std::vector<Node> nodes_;
  bool record_;
};

// Matrix ops. Shapes follow Tensor's matrix view; mismatches throw
// ShapeMismatch.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
/// a [r x c] + bias [1 x c] broadcast over rows.
Var add_row(Var a, Var bias);
/// Each row of a [r x c] scaled by s [r x 1].
Var scale_rows(Var a, Var s);
/// Row vector [1 x c] repeated n times.
Var repeat_rows(Var row, std::size_t n);
Var silu(Var a);
Var square(Var a);
Var sum(Var a);
Var mean(Var a);
Var gather_rows(Var a, const std::vector<int>& index);
/// out[index[k]] += a[k]; out has n rows.
Var scatter_add_rows(Var a, const std::vector<int>& index, std::size_t n);
Var concat_cols(const std::vector<Var>& parts);
/// Euclidean norm of each row, [r x 1]. The gradient at a zero row is zero.
Var row_norm(Var a);
Var log_softmax_rows(Var a);
/// out[r] = a[r, cols[r]], [r x 1].
Var pick_cols(Var a, const std::vector<int>& cols);
/// Non-finite entries replaced by zero; gradient blocked at those entries.
Var nan_to_num(Var a);

/// Affine layer using "name.w" [in x out] and "name.b" [1 x out].
Var linear(Tape& tape, const ParamStore& params, const std::string& name, Var x);
/// linear -> SiLU -> linear with "name.l1" and "name.l2".
Var mlp(Tape& tape, const ParamStore& params, const std::string& name, Var x);

/// Inference-only MLP. A 1-D input [k] yields a 1-D output [out].
/// Throws UnknownParam or ShapeMismatch.
Tensor mlp_forward(const ParamStore& params, const std::string& name, const Tensor& x);

}  // namespace odorgen::num
