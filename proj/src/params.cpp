// SPDX-License-Identifier: Apache-2.0

#include "odorgen/params.hpp"

#include <cmath>
#include <fstream>

namespace odorgen::num {

void ParamStore::add(const std::string& name, Tensor init) {
  if (contains(name)) throw FormatError("parameter '" + name + "' already registered");
  Entry e;
  e.grad = Tensor(init.shape(), 0.0);
  e.m = Tensor(init.shape(), 0.0);
  e.v = Tensor(init.shape(), 0.0);
  e.value = std::move(init);
  entries_.emplace(name, std::move(e));
}

ParamStore::Entry& ParamStore::entry(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw UnknownParam("unknown parameter '" + name + "'");
  return it->second;
}

const ParamStore::Entry& ParamStore::entry(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw UnknownParam("unknown parameter '" + name + "'");
  return it->second;
}

const Tensor& ParamStore::value(const std::string& name) const { return entry(name).value; }
Tensor& ParamStore::mutable_value(const std::string& name) { return entry(name).value; }
const Tensor& ParamStore::grad(const std::string& name) const { return entry(name).grad; }

void ParamStore::accumulate_grad(const std::string& name, const Tensor& g) {
  auto& e = entry(name);
  if (g.size() != e.grad.size()) {
    throw ShapeMismatch("gradient for '" + name + "' has shape " + g.shape_string());
  }
  for (std::size_t k = 0; k < g.size(); ++k) e.grad[k] += g[k];
  grads_populated_ = true;
}

void ParamStore::zero_grad() {
  for (auto& [name, e] : entries_) {
    (void)name;
    for (double& v : e.grad.data()) v = 0.0;
  }
  grads_populated_ = false;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, e] : entries_) {
    (void)e;
    out.push_back(name);
  }
  return out;
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, e] : entries_) {
    (void)name;
    n += e.value.size();
  }
  return n;
}

void ParamStore::fill_zero() {
  for (auto& [name, e] : entries_) {
    (void)name;
    for (double& v : e.value.data()) v = 0.0;
  }
}

void adam_step(ParamStore& params, double lr, double beta1, double beta2, double eps) {
  if (!params.grads_populated_) throw MissingGradients("adam_step called without gradients");
  params.adam_steps_ += 1;
  const double t = static_cast<double>(params.adam_steps_);
  const double bc1 = 1.0 - std::pow(beta1, t);
  const double bc2 = 1.0 - std::pow(beta2, t);
  for (auto& [name, e] : params.entries_) {
    (void)name;
    for (std::size_t k = 0; k < e.value.size(); ++k) {
      const double g = e.grad[k];
      e.m[k] = beta1 * e.m[k] + (1.0 - beta1) * g;
      e.v[k] = beta2 * e.v[k] + (1.0 - beta2) * g * g;
      const double mhat = e.m[k] / bc1;
      const double vhat = e.v[k] / bc2;
      e.value[k] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

void init_linear(ParamStore& params, const std::string& name, std::size_t in,
                 std::size_t out, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(in)));
  Tensor w = Tensor::matrix(in, out);
  for (double& v : w.data()) v = normal(rng);
  params.add(name + ".w", std::move(w));
  params.add(name + ".b", Tensor::matrix(1, out));
}

void init_mlp(ParamStore& params, const std::string& name, std::size_t in,
              std::size_t hidden, std::size_t out, std::mt19937_64& rng) {
  init_linear(params, name + ".l1", in, hidden, rng);
  init_linear(params, name + ".l2", hidden, out, rng);
}

nlohmann::json checkpoint_json(const ParamStore& params) {
  nlohmann::json jp = nlohmann::json::object();
  nlohmann::json jm = nlohmann::json::object();
  nlohmann::json jv = nlohmann::json::object();
  for (const auto& [name, e] : params.entries_) {
    jp[name] = {{"shape", e.value.shape()}, {"data", e.value.values()}};
    jm[name] = e.m.values();
    jv[name] = e.v.values();
  }
  return {{"format_version", kCheckpointFormatVersion},
          {"params", std::move(jp)},
          {"adam", {{"steps", params.adam_steps_}, {"m", std::move(jm)}, {"v", std::move(jv)}}}};
}

ParamStore params_from_checkpoint(const nlohmann::json& j) {
  try {
    if (j.at("format_version").get<int>() != kCheckpointFormatVersion) {
      throw FormatError("unsupported checkpoint format version");
    }
    ParamStore store;
    for (const auto& [name, jt] : j.at("params").items()) {
      store.add(name, Tensor(jt.at("shape").get<std::vector<std::size_t>>(),
                             jt.at("data").get<std::vector<double>>()));
    }
    if (j.contains("adam")) {
      const auto& ja = j.at("adam");
      store.adam_steps_ = ja.at("steps").get<long>();
      for (auto& [name, e] : store.entries_) {
        auto m = ja.at("m").at(name).get<std::vector<double>>();
        auto v = ja.at("v").at(name).get<std::vector<double>>();
        e.m = Tensor(e.value.shape(), std::move(m));
        e.v = Tensor(e.value.shape(), std::move(v));
      }
    }
    return store;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed checkpoint: ") + e.what());
  } catch (const ShapeMismatch& e) {
    throw FormatError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const ParamStore& params,
                     const nlohmann::json& metadata) {
  auto j = checkpoint_json(params);
  j["metadata"] = metadata;
  std::ofstream out(path);
  if (!out) throw FileNotFound("cannot write checkpoint " + path.string());
  out << j.dump() << '\n';
}

ParamStore load_checkpoint(const std::filesystem::path& path, nlohmann::json* metadata) {
  std::ifstream in(path);
  if (!in) throw FileNotFound("cannot open checkpoint " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed checkpoint: ") + e.what());
  }
  auto store = params_from_checkpoint(j);
  if (metadata) *metadata = j.value("metadata", nlohmann::json::object());
  return store;
}

}  // namespace odorgen::num
