// SPDX-License-Identifier: Apache-2.0

#include "odorgen/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace odorgen::num {

const Tensor& Var::value() const { return tape->value(*this); }

Var Tape::push(Tensor value, std::vector<int> parents, Backprop backprop) {
  Node n;
  n.value = std::move(value);
  if (record_) {
    n.requires_grad = std::any_of(parents.begin(), parents.end(),
                                  [this](int p) { return requires_grad(p); });
    if (n.requires_grad) n.backprop = std::move(backprop);
  }
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::constant(Tensor value) { return push(std::move(value), {}, nullptr); }

Var Tape::variable(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = record_;
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::param(const ParamStore& store, const std::string& name) {
  Var v = variable(store.value(name));
  nodes_.back().param_name = name;
  return v;
}

Tensor& Tape::grad_ref(int id) {
  auto& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.size() != n.value.size()) n.grad = Tensor(n.value.shape(), 0.0);
  return n.grad;
}

const Tensor& Tape::grad(Var v) const {
  const auto& n = nodes_[static_cast<std::size_t>(v.id)];
  if (n.grad.size() != n.value.size()) {
    auto& mut = const_cast<Node&>(n);
    mut.grad = Tensor(n.value.shape(), 0.0);
  }
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw NotScalarLoss("loss does not belong to this tape");
  if (value(loss).size() != 1) {
    throw NotScalarLoss("loss has shape " + value(loss).shape_string());
  }
  for (auto& n : nodes_) {
    if (n.grad.size()) std::fill(n.grad.data().begin(), n.grad.data().end(), 0.0);
  }
  grad_ref(loss.id)[0] = 1.0;
  for (int id = loss.id; id >= 0; --id) {
    auto& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.requires_grad || !n.backprop || n.grad.size() == 0) continue;
    // The closure may grow other nodes' grads but never reallocates nodes_.
    Backprop fn = n.backprop;
    fn(*this, id);
  }
}

void Tape::backward(Var loss, ParamStore& store) {
  backward(loss);
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    const auto& n = nodes_[id];
    if (n.param_name.empty()) continue;
    if (n.grad.size() == n.value.size()) {
      store.accumulate_grad(n.param_name, n.grad);
    } else {
      store.accumulate_grad(n.param_name, Tensor(n.value.shape(), 0.0));
    }
  }
}

// ---------------------------------------------------------------------------

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeMismatch(what);
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = *a.tape;
  Tensor out = num::matmul(a.value(), b.value());
  return t.push(std::move(out), {a.id, b.id}, [a = a.id, b = b.id](Tape& tp, int self) {
    const Tensor& g = tp.grad_ref(self);
    if (tp.requires_grad(a)) {
      Tensor ga = num::matmul(g, transpose(tp.value_of(b)));
      Tensor& dst = tp.grad_ref(a);
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += ga[k];
    }
    if (tp.requires_grad(b)) {
      Tensor gb = num::matmul(transpose(tp.value_of(a)), g);
      Tensor& dst = tp.grad_ref(b);
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += gb[k];
    }
  });
}

Var add(Var a, Var b) {
  require(a.value().same_shape(b.value()), "add shape mismatch");
  Tensor out = a.value();
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += b.value()[k];
  return a.tape->push(std::move(out), {a.id, b.id}, [a = a.id, b = b.id](Tape& tp, int self) {
    const Tensor g = tp.grad_ref(self);
    for (int p : {a, b}) {
      if (!tp.requires_grad(p)) continue;
      Tensor& dst = tp.grad_ref(p);
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += g[k];
    }
  });
}

Var sub(Var a, Var b) {
  require(a.value().same_shape(b.value()), "sub shape mismatch");
  Tensor out = a.value();
  for (std::size_t k = 0; k < out.size(); ++k) out[k] -= b.value()[k];
  return a.tape->push(std::move(out), {a.id, b.id}, [a = a.id, b = b.id](Tape& tp, int self) {
    const Tensor g = tp.grad_ref(self);
    if (tp.requires_grad(a)) {
      Tensor& dst = tp.grad_ref(a);
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += g[k];
    }
    if (tp.requires_grad(b)) {
      Tensor& dst = tp.grad_ref(b);
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] -= g[k];
    }
  });
}

Var mul(Var a, Var b) {
  require(a.value().same_shape(b.value()), "mul shape mismatch");
  Tensor out = a.value();
  for (std::size_t k = 0; k < out.size(); ++k) out[k] *= b.value()[k];
  return a.tape->push(std::move(out), {a.id, b.id}, [a = a.id, b = b.id](Tape& tp, int self) {
    const Tensor g = tp.grad_ref(self);
    if (tp.requires_grad(a)) {
      const Tensor& vb = tp.value_of(b);
      Tensor& dst = tp.grad_ref(a);
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += g[k] * vb[k];
    }
    if (tp.requires_grad(b)) {
      const Tensor& va = tp.value_of(a);
      Tensor& dst = tp.grad_ref(b);
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += g[k] * va[k];
    }
  });
}

Var scale(Var a, double s) {
  Tensor out = a.value();
  for (double& v : out.data()) v *= s;
  return a.tape->push(std::move(out), {a.id}, [a = a.id, s](Tape& tp, int self) {
    const Tensor g = tp.grad_ref(self);
    Tensor& dst = tp.grad_ref(a);
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += s * g[k];
  });
}

Var add_row(Var a, Var bias) {
  const Tensor& va = a.value();
  const Tensor& vb = bias.value();
  require(vb.rows() == 1 && vb.cols() == va.cols(), "add_row bias shape mismatch");
  Tensor out = Tensor::matrix(va.rows(), va.cols());
  for (std::size_t r = 0; r < va.rows(); ++r) {
    for (std::size_t c = 0; c < va.cols(); ++c) out(r, c) = va(r, c) + vb[c];
  }
  return a.tape->push(std::move(out), {a.id, bias.id},
                      [a = a.id, b = bias.id](Tape& tp, int self) {
                        const Tensor g = tp.grad_ref(self);
                        if (tp.requires_grad(a)) {
                          Tensor& dst = tp.grad_ref(a);
                          for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += g[k];
                        }
                        if (tp.requires_grad(b)) {
                          Tensor& dst = tp.grad_ref(b);
                          const std::size_t cols = dst.size();
                          for (std::size_t k = 0; k < g.size(); ++k) dst[k % cols] += g[k];
                        }
                      });
}

Var scale_rows(Var a, Var s) {
  const Tensor& va = a.value();
  const Tensor& vs = s.value();
  require(vs.rows() == va.rows() && vs.cols() == 1, "scale_rows shape mismatch");
  Tensor out = Tensor::matrix(va.rows(), va.cols());
  for (std::size_t r = 0; r < va.rows(); ++r) {
    for (std::size_t c = 0; c < va.cols(); ++c) out(r, c) = va(r, c) * vs[r];
  }
  return a.tape->push(std::move(out), {a.id, s.id}, [a = a.id, s = s.id](Tape& tp, int self) {
    const Tensor g = tp.grad_ref(self);
    const Tensor& va = tp.value_of(a);
    const Tensor& vs = tp.value_of(s);
    const std::size_t cols = va.cols();
    if (tp.requires_grad(a)) {
      Tensor& dst = tp.grad_ref(a);
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += g[k] * vs[k / cols];
    }
    if (tp.requires_grad(s)) {
      Tensor& dst = tp.grad_ref(s);
      for (std::size_t k = 0; k < g.size(); ++k) dst[k / cols] += g[k] * va[k];
    }
  });
}

Var repeat_rows(Var row, std::size_t n) {
  const Tensor& v = row.value();
  require(v.rows() == 1, "repeat_rows expects a single row");
  Tensor out = Tensor::matrix(n, v.cols());
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < v.cols(); ++c) out(r, c) = v[c];
  }
  return row.tape->push(std::move(out), {row.id}, [a = row.id](Tape& tp, int self) {
    const Tensor g = tp.grad_ref(self);
    Tensor& dst = tp.grad_ref(a);
    const std::size_t cols = dst.size();
    for (std::size_t k = 0; k < g.size(); ++k) dst[k % cols] += g[k];
  });
}

namespace {
double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}
}  // namespace

Var silu(Var a) {
  Tensor out = a.value();
  for (double& v : out.data()) v = v * sigmoid(v);
  return a.tape->push(std::move(out), {a.id}, [a = a.id](Tape& tp, int self) {
    const Tensor g = tp.grad_ref(self);
    const Tensor& x = tp.value_of(a);
    Tensor& dst = tp.grad_ref(a);
    for (std::size_t k = 0; k < dst.size(); ++k) {
      const double s = sigmoid(x[k]);
      dst[k] += g[k] * (s * (1.0 + x[k] * (1.0 - s)));
    }
  });
}

Var square(Var a) {
  Tensor out = a.value();
  for (double& v : out.data()) v = v * v;
  return a.tape->push(std::move(out), {a.id}, [a = a.id](Tape& tp, int self) {
    const Tensor g = tp.grad_ref(self);
    const Tensor& x = tp.value_of(a);
    Tensor& dst = tp.grad_ref(a);
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += 2.0 * x[k] * g[k];
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return a.tape->push(Tensor::scalar(s), {a.id}, [a = a.id](Tape& tp, int self) {
    const double g = tp.grad_ref(self)[0];
    Tensor& dst = tp.grad_ref(a);
    for (double& v : dst.data()) v += g;
  });
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  require(n > 0, "mean of empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var gather_rows(Var a, const std::vector<int>& index) {
  const Tensor& v = a.value();
  const std::size_t cols = v.cols();
  Tensor out = Tensor::matrix(index.size(), cols);
  for (std::size_t r = 0; r < index.size(); ++r) {
    const auto src = static_cast<std::size_t>(index[r]);
    require(index[r] >= 0 && src < v.rows(), "gather_rows index out of range");
    for (std::size_t c = 0; c < cols; ++c) out(r, c) = v(src, c);
  }
  return a.tape->push(std::move(out), {a.id}, [a = a.id, index](Tape& tp, int self) {
    const Tensor g = tp.grad_ref(self);
    Tensor& dst = tp.grad_ref(a);
    const std::size_t cols = g.cols();
    for (std::size_t r = 0; r < index.size(); ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        dst[static_cast<std::size_t>(index[r]) * cols + c] += g[r * cols + c];
      }
    }
  });
}

Var scatter_add_rows(Var a, const std::vector<int>& index, std::size_t n) {
  const Tensor& v = a.value();
  require(index.size() == v.rows(), "scatter_add_rows index length mismatch");
  const std::size_t cols = v.cols();
  Tensor out = Tensor::matrix(n, cols);
  for (std::size_t r = 0; r < index.size(); ++r) {
    const auto dst = static_cast<std::size_t>(index[r]);
    require(index[r] >= 0 && dst < n, "scatter_add_rows index out of range");
    for (std::size_t c = 0; c < cols; ++c) out(dst, c) += v(r, c);
  }
  return a.tape->push(std::move(out), {a.id}, [a = a.id, index](Tape& tp, int self) {
    const Tensor g = tp.grad_ref(self);
    Tensor& dst = tp.grad_ref(a);
    const std::size_t cols = g.cols();
    for (std::size_t r = 0; r < index.size(); ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        dst[r * cols + c] += g[static_cast<std::size_t>(index[r]) * cols + c];
      }
    }
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_cols of nothing");
  const std::size_t rows = parts.front().value().rows();
  std::size_t cols = 0;
  std::vector<int> ids;
  std::vector<std::size_t> widths;
  for (const auto& p : parts) {
    require(p.value().rows() == rows, "concat_cols row mismatch");
    cols += p.value().cols();
    ids.push_back(p.id);
    widths.push_back(p.value().cols());
  }
  Tensor out = Tensor::matrix(rows, cols);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const Tensor& v = p.value();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < v.cols(); ++c) out(r, offset + c) = v(r, c);
    }
    offset += v.cols();
  }
  return parts.front().tape->push(std::move(out), ids, [ids, widths](Tape& tp, int self) {
    const Tensor g = tp.grad_ref(self);
    const std::size_t rows = g.rows(), cols = g.cols();
    std::size_t offset = 0;
    for (std::size_t p = 0; p < ids.size(); ++p) {
      if (tp.requires_grad(ids[p])) {
        Tensor& dst = tp.grad_ref(ids[p]);
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t c = 0; c < widths[p]; ++c) {
            dst[r * widths[p] + c] += g[r * cols + offset + c];
          }
        }
      }
      offset += widths[p];
    }
  });
}

Var row_norm(Var a) {
  const Tensor& v = a.value();
  Tensor out = Tensor::matrix(v.rows(), 1);
  for (std::size_t r = 0; r < v.rows(); ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < v.cols(); ++c) s += v(r, c) * v(r, c);
    out[r] = std::sqrt(s);
  }
  return a.tape->push(std::move(out), {a.id}, [a = a.id](Tape& tp, int self) {
    const Tensor g = tp.grad_ref(self);
    const Tensor& x = tp.value_of(a);
    const Tensor& norms = tp.value_of(self);
    Tensor& dst = tp.grad_ref(a);
    const std::size_t cols = x.cols();
    for (std::size_t r = 0; r < x.rows(); ++r) {
      if (norms[r] == 0.0) continue;
      for (std::size_t c = 0; c < cols; ++c) {
        dst[r * cols + c] += g[r] * x[r * cols + c] / norms[r];
      }
    }
  });
}

Var log_softmax_rows(Var a) {
  const Tensor& v = a.value();
  Tensor out = Tensor::matrix(v.rows(), v.cols());
  for (std::size_t r = 0; r < v.rows(); ++r) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < v.cols(); ++c) m = std::max(m, v(r, c));
    double s = 0.0;
    for (std::size_t c = 0; c < v.cols(); ++c) s += std::exp(v(r, c) - m);
    const double lse = m + std::log(s);
    for (std::size_t c = 0; c < v.cols(); ++c) out(r, c) = v(r, c) - lse;
  }
  return a.tape->push(std::move(out), {a.id}, [a = a.id](Tape& tp, int self) {
    const Tensor g = tp.grad_ref(self);
    const Tensor& y = tp.value_of(self);
    Tensor& dst = tp.grad_ref(a);
    const std::size_t cols = y.cols();
    for (std::size_t r = 0; r < y.rows(); ++r) {
      double gs = 0.0;
      for (std::size_t c = 0; c < cols; ++c) gs += g[r * cols + c];
      for (std::size_t c = 0; c < cols; ++c) {
        dst[r * cols + c] += g[r * cols + c] - std::exp(y[r * cols + c]) * gs;
      }
    }
  });
}

Var pick_cols(Var a, const std::vector<int>& cols) {
  const Tensor& v = a.value();
  require(cols.size() == v.rows(), "pick_cols length mismatch");
  Tensor out = Tensor::matrix(v.rows(), 1);
  for (std::size_t r = 0; r < v.rows(); ++r) {
    require(cols[r] >= 0 && static_cast<std::size_t>(cols[r]) < v.cols(),
            "pick_cols column out of range");
    out[r] = v(r, static_cast<std::size_t>(cols[r]));
  }
  return a.tape->push(std::move(out), {a.id}, [a = a.id, cols](Tape& tp, int self) {
    const Tensor g = tp.grad_ref(self);
    Tensor& dst = tp.grad_ref(a);
    const std::size_t width = dst.cols();
    for (std::size_t r = 0; r < cols.size(); ++r) {
      dst[r * width + static_cast<std::size_t>(cols[r])] += g[r];
    }
  });
}

Var nan_to_num(Var a) {
  Tensor out = num::nan_to_num(a.value());
  return a.tape->push(std::move(out), {a.id}, [a = a.id](Tape& tp, int self) {
    const Tensor g = tp.grad_ref(self);
    const Tensor& x = tp.value_of(a);
    Tensor& dst = tp.grad_ref(a);
    for (std::size_t k = 0; k < dst.size(); ++k) {
      if (std::isfinite(x[k])) dst[k] += g[k];
    }
  });
}

Var linear(Tape& tape, const ParamStore& params, const std::string& name, Var x) {
  Var w = tape.param(params, name + ".w");
  Var b = tape.param(params, name + ".b");
  return add_row(matmul(x, w), b);
}

Var mlp(Tape& tape, const ParamStore& params, const std::string& name, Var x) {
  return linear(tape, params, name + ".l2", silu(linear(tape, params, name + ".l1", x)));
}

Tensor mlp_forward(const ParamStore& params, const std::string& name, const Tensor& x) {
  Tape tape(false);
  const bool vector_input = x.shape().size() == 1;
  Tensor in = vector_input ? Tensor::matrix(1, x.size()) : x;
  if (vector_input) {
    for (std::size_t k = 0; k < x.size(); ++k) in[k] = x[k];
  }
  Tensor out = mlp(tape, params, name, tape.constant(std::move(in))).value();
  if (vector_input) return Tensor({out.size()}, out.values());
  return out;
}

}  // namespace odorgen::num
