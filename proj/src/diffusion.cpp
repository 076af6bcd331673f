// SPDX-License-Identifier: Apache-2.0

#include "odorgen/diffusion.hpp"

#include <cmath>
#include <string>

namespace odorgen::diffusion {

double beta_at(const NoiseSchedule& schedule, int t) {
  if (schedule.T < 1 || t < 1 || t > schedule.T) {
    throw StepOutOfRange("step " + std::to_string(t) + " outside [1, " +
                         std::to_string(schedule.T) + "]");
  }
  return schedule.beta_max * static_cast<double>(t) / static_cast<double>(schedule.T);
}

NoisedFeatures forward_noise(const Tensor& x0, int t, const NoiseSchedule& schedule,
                             const Tensor& eps) {
  if (x0.size() != eps.size()) {
    throw num::ShapeMismatch("noise " + eps.shape_string() + " vs features " +
                             x0.shape_string());
  }
  const double s = std::sqrt(beta_at(schedule, t));
  Tensor xt = x0;
  for (std::size_t k = 0; k < xt.size(); ++k) xt[k] += s * eps[k];
  return {std::move(xt), eps};
}

NoisedFeatures forward_noise(const Tensor& x0, int t, const NoiseSchedule& schedule,
                             std::mt19937_64& rng) {
  beta_at(schedule, t);
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor eps(x0.shape(), 0.0);
  for (double& v : eps.data()) v = normal(rng);
  return forward_noise(x0, t, schedule, eps);
}

ParamStore init_model(const ModelConfig& c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ParamStore p;
  num::init_linear(p, "time", 1, c.time_dim, rng);
  num::init_linear(p, "cond", c.vocab_size, c.cond_dim, rng);
  num::init_linear(p, "in_proj", 1 + c.time_dim + c.cond_dim, c.hidden, rng);
  for (std::size_t k = 0; k < c.layers; ++k) {
    egnn::init_layer(p, "egnn" + std::to_string(k), c.hidden, rng);
  }
  num::init_linear(p, "head", c.hidden, 1, rng);
  num::init_mlp(p, "bond", 2 * c.hidden, c.hidden, kNumBondClasses, rng);
  return p;
}

ModelConfig model_config_of(const ParamStore& params) {
  ModelConfig c;
  c.time_dim = params.value("time.w").cols();
  const Tensor& cond = params.value("cond.w");
  c.vocab_size = cond.rows();
  c.cond_dim = cond.cols();
  c.hidden = params.value("in_proj.w").cols();
  c.layers = 0;
  while (params.contains("egnn" + std::to_string(c.layers) + ".node.l1.w")) ++c.layers;
  return c;
}

namespace {

std::vector<egnn::EgnnLayerParams> layers_of(const ParamStore& params) {
  std::vector<egnn::EgnnLayerParams> out;
  for (std::size_t k = 0;; ++k) {
    const std::string prefix = "egnn" + std::to_string(k);
    if (!params.contains(prefix + ".node.l1.w")) break;
    out.push_back(egnn::layer_names(prefix));
  }
  return out;
}

Tensor row_of(std::span<const double> v) {
  return Tensor({1, v.size()}, std::vector<double>(v.begin(), v.end()));
}

Tensor flatten(const Tensor& row) { return Tensor({row.size()}, row.values()); }

Var condition_var(Tape& tape, const ParamStore& params, std::span<const double> y) {
  const std::size_t L = params.value("cond.w").rows();
  if (y.size() != L) {
    throw LengthMismatch("descriptor vector has length " + std::to_string(y.size()) +
                         ", vocabulary has " + std::to_string(L));
  }
  return num::linear(tape, params, "cond", tape.constant(row_of(y)));
}

Var time_var(Tape& tape, const ParamStore& params, const NoiseSchedule& s, int t) {
  beta_at(s, t);
  const double frac = static_cast<double>(t) / static_cast<double>(s.T);
  return num::linear(tape, params, "time", tape.constant(Tensor::scalar(frac)));
}

void check_temperature(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw NonPositiveTemperature("temperature must be positive, got " + std::to_string(tau));
  }
}

}  // namespace

Tensor condition_embed(std::span<const double> y, const ParamStore& params) {
  Tape tape(false);
  return flatten(condition_var(tape, params, y).value());
}

Tensor time_embed(int t, const NoiseSchedule& schedule, const ParamStore& params) {
  Tape tape(false);
  return flatten(time_var(tape, params, schedule, t).value());
}

Tensor bond_probabilities(const Tensor& logits, double tau) {
  check_temperature(tau);
  Tensor out = Tensor::matrix(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    double m = -INFINITY;
    for (std::size_t c = 0; c < logits.cols(); ++c) m = std::max(m, logits(r, c) / tau);
    double s = 0.0;
    for (std::size_t c = 0; c < logits.cols(); ++c) {
      out(r, c) = std::exp(logits(r, c) / tau - m);
      s += out(r, c);
    }
    for (std::size_t c = 0; c < logits.cols(); ++c) out(r, c) /= s;
  }
  return out;
}

Var classify_bonds(Tape& tape, const ParamStore& params, Var embeddings,
                   const std::vector<std::pair<int, int>>& pairs) {
  std::vector<int> a, b;
  a.reserve(pairs.size());
  b.reserve(pairs.size());
  const auto n = static_cast<int>(embeddings.value().rows());
  for (const auto& [i, j] : pairs) {
    if (i < 0 || j < 0 || i >= n || j >= n) {
      throw IndexOutOfRange("bond pair (" + std::to_string(i) + ", " + std::to_string(j) +
                            ") outside " + std::to_string(n) + " nodes");
    }
    a.push_back(i);
    b.push_back(j);
  }
  Var in = num::concat_cols({num::gather_rows(embeddings, a), num::gather_rows(embeddings, b)});
  return num::nan_to_num(num::mlp(tape, params, "bond", in));
}

Tensor classify_bonds(const ParamStore& params, const Tensor& embeddings,
                      const std::vector<std::pair<int, int>>& pairs) {
  if (pairs.empty()) return Tensor::matrix(0, kNumBondClasses);
  Tape tape(false);
  return classify_bonds(tape, params, tape.constant(embeddings), pairs).value();
}

DenoiserVars denoiser_forward(Tape& tape, const ParamStore& params,
                              const NoiseSchedule& schedule, const DenoiserInput& in) {
  const std::size_t n = in.x_t.rows();
  if (in.x_t.size() == 0) throw EmptyGraph("denoiser needs at least one node");
  if (in.x_t.cols() != 1 || in.coords.rows() != n || in.coords.cols() != 3) {
    throw num::ShapeMismatch("denoiser input features " + in.x_t.shape_string() +
                             " with coords " + in.coords.shape_string());
  }
  Var e_t = time_var(tape, params, schedule, in.t);
  Var c = condition_var(tape, params, in.y);
  Var node_in = num::concat_cols(
      {tape.constant(in.x_t), num::repeat_rows(e_t, n), num::repeat_rows(c, n)});
  Var h = num::linear(tape, params, "in_proj", node_in);

  const egnn::EdgeList edges = in.edges.size() > 0 ? in.edges : egnn::fully_connected(n);
  egnn::VarState state = egnn::egnn_forward(tape, params, layers_of(params),
                                            {h, tape.constant(in.coords)}, edges);

  DenoiserVars out;
  out.embeddings = state.features;
  out.coords = num::nan_to_num(state.coords);
  out.eps_hat = num::nan_to_num(num::linear(tape, params, "head", state.features));
  if (!in.bond_pairs.empty()) {
    out.bond_logits = classify_bonds(tape, params, state.features, in.bond_pairs);
  }
  return out;
}

DenoiserOutput denoiser_forward(const ParamStore& params, const NoiseSchedule& schedule,
                                const DenoiserInput& input) {
  Tape tape(false);
  DenoiserVars v = denoiser_forward(tape, params, schedule, input);
  DenoiserOutput out;
  out.eps_hat = v.eps_hat.value();
  out.coords = v.coords.value();
  out.embeddings = num::nan_to_num(v.embeddings.value());
  out.bond_logits = v.bond_logits.id >= 0 ? v.bond_logits.value()
                                          : Tensor::matrix(0, kNumBondClasses);
  return out;
}

LossVars loss_terms(Tape& tape, Var eps_hat, const Tensor& eps, Var bond_logits,
                    const std::vector<int>& bond_labels, double tau) {
  check_temperature(tau);
  if (!eps_hat.value().same_shape(eps)) {
    throw num::ShapeMismatch("eps_hat " + eps_hat.value().shape_string() + " vs eps " +
                             eps.shape_string());
  }
  LossVars out;
  out.mse = num::mean(num::square(num::sub(eps_hat, tape.constant(eps))));
  if (bond_labels.empty()) {
    out.ce = tape.constant(Tensor::scalar(0.0));
  } else {
    if (bond_logits.id < 0 || bond_logits.value().rows() != bond_labels.size() ||
        bond_logits.value().cols() != kNumBondClasses) {
      throw num::ShapeMismatch("bond logits do not match " +
                               std::to_string(bond_labels.size()) + " labels");
    }
    for (int label : bond_labels) {
      if (label < 0 || label >= kNumBondClasses) {
        throw IndexOutOfRange("bond label " + std::to_string(label));
      }
    }
    Var logp = num::log_softmax_rows(num::scale(bond_logits, 1.0 / tau));
    out.ce = num::scale(num::mean(num::pick_cols(logp, bond_labels)), -1.0);
  }
  out.total = num::add(out.mse, out.ce);
  return out;
}

double loss_total(const Tensor& eps_hat, const Tensor& eps, const Tensor& bond_logits,
                  const std::vector<int>& bond_labels, double tau) {
  Tape tape(false);
  Var logits = bond_labels.empty() ? Var{} : tape.constant(bond_logits);
  return loss_terms(tape, tape.constant(eps_hat), eps, logits, bond_labels, tau)
      .total.value()[0];
}

}  // namespace odorgen::diffusion
