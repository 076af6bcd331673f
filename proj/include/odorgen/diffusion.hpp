// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "odorgen/autodiff.hpp"
#include "odorgen/egnn.hpp"
#include "odorgen/molgraph.hpp"
#include "odorgen/params.hpp"
#include "odorgen/tensor.hpp"

namespace odorgen::diffusion {

using num::ParamStore;
using num::Tape;
using num::Tensor;
using num::Var;

ODORGEN_DEFINE_ERROR(StepOutOfRange);
ODORGEN_DEFINE_ERROR(LengthMismatch);
ODORGEN_DEFINE_ERROR(NonPositiveTemperature);
ODORGEN_DEFINE_ERROR(EmptyGraph);
ODORGEN_DEFINE_ERROR(DivergedLoss);

inline constexpr int kNumBondClasses = 4;

/// Linear schedule beta_t = beta_max * t / T.
struct NoiseSchedule {
  int T = 1000;
  double beta_max = 1.0;
};

/// Throws StepOutOfRange unless 1 <= t <= T.
double beta_at(const NoiseSchedule& schedule, int t);

struct NoisedFeatures {
  Tensor x_t;
  Tensor eps;
};

/// x_t = x0 + sqrt(beta_t) * eps with eps ~ N(0, I).
NoisedFeatures forward_noise(const Tensor& x0, int t, const NoiseSchedule& schedule,
                             std::mt19937_64& rng);
/// Same with a caller-supplied eps (must match x0's shape).
NoisedFeatures forward_noise(const Tensor& x0, int t, const NoiseSchedule& schedule,
                             const Tensor& eps);

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t hidden = 8;
  std::size_t time_dim = 8;
  std::size_t cond_dim = 8;
  std::size_t layers = 2;
};

/// Parameter layout:
///   time.{w,b}       1 -> d_t
///   cond.{w,b}       L -> d_c
///   in_proj.{w,b}    1 + d_t + d_c -> d
///   egnn<k>.node / egnn<k>.coord
///   head.{w,b}       d -> 1
///   bond.l1 / bond.l2  2d -> d -> 4
ParamStore init_model(const ModelConfig& config, std::uint64_t seed);
/// Recovers the layout from an existing store. Throws UnknownParam.
ModelConfig model_config_of(const ParamStore& params);

/// c = W y + b, length d_c. Throws LengthMismatch when |y| != L.
Tensor condition_embed(std::span<const double> y, const ParamStore& params);
/// e_t = W (t / T) + b, length d_t.
Tensor time_embed(int t, const NoiseSchedule& schedule, const ParamStore& params);

/// Softmax of logits / tau per row. Throws NonPositiveTemperature.
Tensor bond_probabilities(const Tensor& logits, double tau);

struct DenoiserInput {
  Tensor x_t;     // [n x 1]
  Tensor coords;  // [n x 3]
  int t = 1;
  std::vector<double> y;
  /// Node pairs that receive bond logits, in the given orientation.
  std::vector<std::pair<int, int>> bond_pairs;
  /// Message graph; fully connected when empty and n > 1.
  egnn::EdgeList edges;
};

struct DenoiserOutput {
  Tensor eps_hat;      // [n x 1]
  Tensor bond_logits;  // [|pairs| x 4]
  Tensor coords;       // [n x 3]
  Tensor embeddings;   // [n x d]
};

struct DenoiserVars {
  Var eps_hat;
  Var bond_logits;  // unset (id -1) without pairs
  Var coords;
  Var embeddings;
};

/// Throws EmptyGraph, StepOutOfRange, LengthMismatch, ShapeMismatch.
DenoiserVars denoiser_forward(Tape& tape, const ParamStore& params,
                              const NoiseSchedule& schedule, const DenoiserInput& input);
DenoiserOutput denoiser_forward(const ParamStore& params, const NoiseSchedule& schedule,
                                const DenoiserInput& input);

/// Bond classifier on [h_i || h_j] for each pair.
Var classify_bonds(Tape& tape, const ParamStore& params, Var embeddings,
                   const std::vector<std::pair<int, int>>& pairs);
Tensor classify_bonds(const ParamStore& params, const Tensor& embeddings,
                      const std::vector<std::pair<int, int>>& pairs);

struct LossVars {
  Var mse;
  Var ce;
  Var total;
};

/// mean((eps_hat - eps)^2) + mean_k(-log softmax(logits_k / tau)[label_k]).
/// The CE term is zero when there are no labelled edges.
LossVars loss_terms(Tape& tape, Var eps_hat, const Tensor& eps, Var bond_logits,
                    const std::vector<int>& bond_labels, double tau);
/// Throws ShapeMismatch, NonPositiveTemperature, IndexOutOfRange.
double loss_total(const Tensor& eps_hat, const Tensor& eps, const Tensor& bond_logits,
                  const std::vector<int>& bond_labels, double tau);

// ---------------------------------------------------------------------------
// Training

/// One training molecule: atomic numbers are the clean features, positions
/// the embedded coordinates, bonds the supervision for the classifier.
struct TrainingExample {
  MoleculeGraph graph;
  std::vector<double> y;
};

struct TrainConfig {
  int T = 1000;
  int epochs = 1000;
  std::size_t batch_size = 32;
  double tau = 1.0;
  double lr = 1e-3;
  bool constrained = false;
  std::vector<int> allowlist;  // atomic numbers; used when constrained
  std::uint64_t seed = 0;
};

struct EpochMetrics {
  int epoch = 0;
  double mse_loss = 0.0;
  double ce_loss = 0.0;
  double total_loss = 0.0;
};

struct TrainResult {
  ParamStore params;
  std::vector<EpochMetrics> metrics;
  std::size_t examples_used = 0;
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

/// Mini-batch Adam on the denoising objective. Throws EmptyDataset when no
/// example survives filtering and DivergedLoss when a batch loss is
/// non-finite or exceeds 1e3 times the first batch loss.
TrainResult train(const std::vector<TrainingExample>& data, std::size_t vocab_size,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});
/// Continues from `initial` (shapes must match the vocabulary).
TrainResult train(const std::vector<TrainingExample>& data, ParamStore initial,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Per-example loss terms at a fixed (t, eps); used by gradient checks.
LossVars example_loss(Tape& tape, const ParamStore& params, const NoiseSchedule& schedule,
                      const TrainingExample& example, int t, const Tensor& eps, double tau);

/// CSV with header "epoch,mse_loss,ce_loss,total_loss".
void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<EpochMetrics>& metrics);
/// Throws FileNotFound or FormatError (missing column, bad number).
std::vector<EpochMetrics> read_metrics_csv(const std::filesystem::path& path);

}  // namespace odorgen::diffusion
