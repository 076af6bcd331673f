// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "odorgen/chemrules.hpp"
#include "odorgen/diffusion.hpp"
#include "odorgen/molgraph.hpp"

namespace odorgen::gen {

using num::ParamStore;
using num::Tensor;

ODORGEN_DEFINE_ERROR(UntrainedParams);
ODORGEN_DEFINE_ERROR(EmptyInput);
ODORGEN_DEFINE_ERROR(InvalidConfig);

enum class Mode { Constrained, Unconstrained };
enum class BondSource { Classifier, Heuristic };

/// C, N, O, F, P, S, Cl.
std::vector<int> default_allowlist();

std::string_view to_string(Mode m);

struct GenerationConfig {
  Mode mode = Mode::Constrained;
  std::vector<int> allowlist = default_allowlist();
  /// Fixed atom count; 0 draws uniformly from atom_count_pool.
  int n_atoms = 0;
  std::vector<int> atom_count_pool;
  int T = 1000;
  double tau = 0.5;
  std::uint64_t seed = 0;
  BondSource bond_source = BondSource::Classifier;
  double edge_cutoff = 1.8;
};

/// Throws InvalidConfig.
void validate_config(const GenerationConfig& config);

struct TypedEdge {
  int i = 0;
  int j = 0;
  BondType type = BondType::Single;
};

/// Canonical SMILES of known molecules.
class Corpus {
 public:
  Corpus() = default;
  /// Entries that fail to parse are ignored.
  static Corpus from_smiles(const std::vector<std::string>& smiles);
  bool contains(const std::string& canonical) const { return entries_.count(canonical) > 0; }
  std::size_t size() const { return entries_.size(); }
  std::vector<std::string> entries() const { return {entries_.begin(), entries_.end()}; }
  void insert_canonical(std::string canonical) { entries_.insert(std::move(canonical)); }

 private:
  std::set<std::string> entries_;
};

struct GenerationReport {
  std::uint64_t seed = 0;
  int n_atoms = 0;
  int steps_run = 0;
  std::vector<double> raw_features;
  std::vector<int> decoded_atoms;
  std::vector<std::pair<int, int>> proposed_edges;  // indices into decoded_atoms
  std::vector<TypedEdge> bonds;
  std::vector<std::string> skipped_bonds;
  chem::ValidationReport validation;
  std::optional<std::string> smiles;
  bool corpus_match = false;
};

nlohmann::json to_json(const GenerationReport& r);

/// Reverse diffusion from Gaussian noise, then decode, assemble and validate.
/// Deterministic in (y, config, params). Throws UntrainedParams when the
/// store lacks the denoiser, InvalidConfig, LengthMismatch.
GenerationReport sample(const std::vector<double>& y, const GenerationConfig& config,
                        const ParamStore& params, const Corpus* corpus = nullptr);

/// Indices of nodes whose rounded value survives the range filter and, in
/// constrained mode, the allowlist.
std::vector<int> decode_nodes(std::span<const double> x, const GenerationConfig& config);
/// Atomic numbers of decode_nodes(x).
std::vector<int> decode_atoms(std::span<const double> x, const GenerationConfig& config);

/// Unordered pairs (i < j) closer than `cutoff`.
std::vector<std::pair<int, int>> propose_edges(const std::vector<Vec3>& coords,
                                               double cutoff = 1.8);

/// Bond type per edge: classifier argmax at temperature tau, or the
/// atomic-number heuristic. `embeddings` rows align with `atoms`.
std::vector<TypedEdge> assign_bond_types(const std::vector<std::pair<int, int>>& edges,
                                         const Tensor& embeddings,
                                         const std::vector<int>& atoms,
                                         const ParamStore& params, double tau,
                                         BondSource source);

/// Adds typed edges to a graph; failing additions are skipped with a reason.
MoleculeGraph assemble(const std::vector<int>& atoms, const std::vector<Vec3>& coords,
                       const std::vector<TypedEdge>& bonds, std::vector<std::string>* skipped);

struct Finalized {
  chem::ValidationReport validation;
  std::optional<std::string> smiles;
  bool corpus_match = false;
};

/// sanitize -> canonical SMILES -> corpus lookup.
Finalized finalize(const MoleculeGraph& g, const Corpus* corpus = nullptr);

/// Fraction of reports with a passing verdict. Throws EmptyInput.
double validity_rate(const std::vector<GenerationReport>& reports);

/// {"samples", "valid", "validity_rate", "failures_by_stage", "mode", "seed", "T"}.
nlohmann::json summary_json(const std::vector<GenerationReport>& reports,
                            const GenerationConfig& config);

struct Table1Row {
  std::string model;
  double validity_rate = 0.0;
  std::size_t samples = 0;
};

/// Markdown table "| Model | Valid molecules (%) | Samples |".
std::string format_table1(const std::vector<Table1Row>& rows);

/// Seed of the k-th sample in a run seeded with `seed`.
std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t k);

}  // namespace odorgen::gen
