// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "odorgen/diffusion.hpp"

namespace odorgen::diffusion {

namespace {

Tensor clean_features(const MoleculeGraph& g) {
  Tensor x = Tensor::matrix(g.num_atoms(), 1);
  for (std::size_t i = 0; i < g.num_atoms(); ++i) {
    x[i] = static_cast<double>(g.atoms()[i].atomic_number);
  }
  return x;
}

Tensor positions(const MoleculeGraph& g) {
  Tensor r = Tensor::matrix(g.num_atoms(), 3);
  for (std::size_t i = 0; i < g.num_atoms(); ++i) {
    for (std::size_t k = 0; k < 3; ++k) r(i, k) = g.atoms()[i].position[k];
  }
  return r;
}

bool allowed(const MoleculeGraph& g, const TrainConfig& config) {
  if (!config.constrained) return true;
  return std::all_of(g.atoms().begin(), g.atoms().end(), [&](const Atom& a) {
    return std::find(config.allowlist.begin(), config.allowlist.end(), a.atomic_number) !=
           config.allowlist.end();
  });
}

}  // namespace

LossVars example_loss(Tape& tape, const ParamStore& params, const NoiseSchedule& schedule,
                      const TrainingExample& ex, int t, const Tensor& eps, double tau) {
  const MoleculeGraph& g = ex.graph;
  NoisedFeatures noised = forward_noise(clean_features(g), t, schedule, eps);
  DenoiserInput in;
  in.x_t = std::move(noised.x_t);
  in.coords = positions(g);
  in.t = t;
  in.y = ex.y;
  std::vector<int> labels;
  for (const Bond& b : g.bonds()) {
    in.bond_pairs.emplace_back(b.i, b.j);
    labels.push_back(bond_class(b.type));
  }
  DenoiserVars out = denoiser_forward(tape, params, schedule, in);
  return loss_terms(tape, out.eps_hat, eps, out.bond_logits, labels, tau);
}

TrainResult train(const std::vector<TrainingExample>& data, std::size_t vocab_size,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  ModelConfig mc;
  mc.vocab_size = vocab_size;
  return train(data, init_model(mc, config.seed), config, on_epoch);
}

TrainResult train(const std::vector<TrainingExample>& data, ParamStore initial,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  std::vector<const TrainingExample*> pool;
  for (const auto& ex : data) {
    if (!ex.graph.empty() && allowed(ex.graph, config)) pool.push_back(&ex);
  }
  if (pool.empty()) throw EmptyDataset("no training molecules after filtering");
  if (config.batch_size == 0) throw EmptyDataset("batch size must be positive");

  const NoiseSchedule schedule{config.T, 1.0};
  beta_at(schedule, config.T);
  TrainResult result;
  result.params = std::move(initial);
  result.examples_used = pool.size();
  ParamStore& params = result.params;

  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_int_distribution<int> step(1, config.T);
  std::normal_distribution<double> normal(0.0, 1.0);
  const num::AdamConfig adam{config.lr, 0.9, 0.999, 1e-8};
  double first_batch_loss = -1.0;

  std::vector<std::size_t> order(pool.size());
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    double mse_sum = 0.0, ce_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const double weight = 1.0 / static_cast<double>(stop - start);
      params.zero_grad();
      double batch_loss = 0.0;
      for (std::size_t k = start; k < stop; ++k) {
        const TrainingExample& ex = *pool[order[k]];
        const int t = step(rng);
        Tensor eps = Tensor::matrix(ex.graph.num_atoms(), 1);
        for (double& v : eps.data()) v = normal(rng);
        Tape tape;
        LossVars loss = example_loss(tape, params, schedule, ex, t, eps, config.tau);
        const double mse = loss.mse.value()[0];
        const double ce = loss.ce.value()[0];
        mse_sum += mse;
        ce_sum += ce;
        batch_loss += weight * (mse + ce);
        tape.backward(num::scale(loss.total, weight), params);
      }
      if (first_batch_loss < 0.0) first_batch_loss = batch_loss;
      if (!std::isfinite(batch_loss) || batch_loss > 1e3 * first_batch_loss) {
        std::ostringstream msg;
        msg << "training diverged at epoch " << epoch << ": batch loss " << batch_loss
            << " against initial " << first_batch_loss;
        throw DivergedLoss(msg.str());
      }
      num::adam_step(params, adam);
    }
    const double count = static_cast<double>(pool.size());
    EpochMetrics m{epoch, mse_sum / count, ce_sum / count, (mse_sum + ce_sum) / count};
    result.metrics.push_back(m);
    if (on_epoch) on_epoch(m);
  }
  return result;
}

void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<EpochMetrics>& metrics) {
  std::ofstream out(path);
  if (!out) throw FileNotFound("cannot write " + path.string());
  out << "epoch,mse_loss,ce_loss,total_loss\n";
  out.precision(17);
  for (const auto& m : metrics) {
    out << m.epoch << ',' << m.mse_loss << ',' << m.ce_loss << ',' << m.total_loss << '\n';
  }
}

std::vector<EpochMetrics> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFound("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError("metrics file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  const std::vector<std::string> wanted = {"epoch", "mse_loss", "ce_loss", "total_loss"};
  std::vector<std::size_t> column;
  for (const auto& w : wanted) {
    auto it = std::find(header.begin(), header.end(), w);
    if (it == header.end()) throw FormatError("metrics file lacks column '" + w + "'");
    column.push_back(static_cast<std::size_t>(it - header.begin()));
  }

  std::vector<EpochMetrics> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    std::array<double, 4> v{};
    for (std::size_t k = 0; k < 4; ++k) {
      if (column[k] >= cells.size()) {
        throw FormatError("line " + std::to_string(line_no) + " is missing fields");
      }
      try {
        std::size_t used = 0;
        v[k] = std::stod(cells[column[k]], &used);
        if (used != cells[column[k]].size()) throw std::invalid_argument("trailing");
      } catch (const std::logic_error&) {
        throw FormatError("line " + std::to_string(line_no) + ": bad number '" +
                          cells[column[k]] + "'");
      }
    }
    rows.push_back({static_cast<int>(v[0]), v[1], v[2], v[3]});
  }
  return rows;
}

}  // namespace odorgen::diffusion
