// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "odorgen/tensor.hpp"

namespace odorgen::num {

ODORGEN_DEFINE_ERROR(UnknownParam);
ODORGEN_DEFINE_ERROR(MissingGradients);

/// Named learnable tensors with parallel gradients and Adam moments.
class ParamStore {
 public:
  /// Throws FormatError if the name is already registered.
  void add(const std::string& name, Tensor init);
  bool contains(const std::string& name) const { return entries_.count(name) > 0; }
  bool empty() const { return entries_.empty(); }

  /// Throw UnknownParam.
  const Tensor& value(const std::string& name) const;
  Tensor& mutable_value(const std::string& name);
  const Tensor& grad(const std::string& name) const;

  /// Adds `g` into the gradient of `name` and marks gradients as populated.
  void accumulate_grad(const std::string& name, const Tensor& g);
  void zero_grad();
  bool gradients_populated() const { return grads_populated_; }

  std::vector<std::string> names() const;
  std::size_t parameter_count() const;

  /// Every parameter set to zero (useful for baseline models).
  void fill_zero();

  long adam_steps() const { return adam_steps_; }

  friend void adam_step(ParamStore&, double, double, double, double);
  friend nlohmann::json checkpoint_json(const ParamStore&);
  friend ParamStore params_from_checkpoint(const nlohmann::json&);

 private:
  struct Entry {
    Tensor value;
    Tensor grad;
    Tensor m;
    Tensor v;
  };
  Entry& entry(const std::string& name);
  const Entry& entry(const std::string& name) const;

  std::map<std::string, Entry> entries_;
  bool grads_populated_ = false;
  long adam_steps_ = 0;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update. Throws MissingGradients when no gradient
/// has been accumulated since the last zero_grad().
void adam_step(ParamStore& params, double lr, double beta1, double beta2, double eps);
inline void adam_step(ParamStore& params, const AdamConfig& c) {
  adam_step(params, c.lr, c.beta1, c.beta2, c.eps);
}

/// Gaussian init with standard deviation 1/sqrt(fan_in); biases start at 0.
void init_linear(ParamStore& params, const std::string& name, std::size_t in,
                 std::size_t out, std::mt19937_64& rng);
/// Two-layer MLP "name.l1" (in -> hidden) and "name.l2" (hidden -> out).
void init_mlp(ParamStore& params, const std::string& name, std::size_t in,
              std::size_t hidden, std::size_t out, std::mt19937_64& rng);

/// Checkpoint layout (format_version 1):
///   {"format_version":1,
///    "params":{name:{"shape":[..],"data":[..]}},
///    "adam":{"steps":k,"m":{name:[..]},"v":{name:[..]}},
///    "metadata":{...}}
inline constexpr int kCheckpointFormatVersion = 1;

nlohmann::json checkpoint_json(const ParamStore& params);
ParamStore params_from_checkpoint(const nlohmann::json& j);

void save_checkpoint(const std::filesystem::path& path, const ParamStore& params,
                     const nlohmann::json& metadata);
/// Throws FileNotFound or FormatError.
ParamStore load_checkpoint(const std::filesystem::path& path, nlohmann::json* metadata);

}  // namespace odorgen::num
