// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "odorgen/diffusion.hpp"
#include "odorgen/errors.hpp"
#include "odorgen/molgraph.hpp"

namespace odorgen::data {

ODORGEN_DEFINE_ERROR(TooFewSamples);
ODORGEN_DEFINE_ERROR(EmbeddingFailed);

/// Sorted, lowercase, duplicate-free descriptor terms.
class OdourVocabulary {
 public:
  OdourVocabulary() = default;
  /// Normalizes (trim + lowercase), drops empties and duplicates, sorts.
  static OdourVocabulary from_terms(const std::vector<std::string>& terms);

  std::size_t size() const { return terms_.size(); }
  const std::vector<std::string>& terms() const { return terms_; }
  std::optional<std::size_t> index_of(const std::string& term) const;

  friend bool operator==(const OdourVocabulary&, const OdourVocabulary&) = default;

 private:
  std::vector<std::string> terms_;
  std::map<std::string, std::size_t> index_;
};

/// Trimmed, ASCII-lowercased descriptor.
std::string normalize_term(const std::string& term);

struct LabeledMolecule {
  std::string smiles;
  std::vector<std::string> descriptors;  // normalized, sorted, unique
  MoleculeGraph graph;                   // sanitized, with embedded coordinates
};

struct Dataset {
  OdourVocabulary vocab;
  std::vector<LabeledMolecule> molecules;
  std::size_t skipped = 0;
  std::vector<std::string> skip_reasons;  // one per skipped row
};

/// Reads `smiles,desc1;desc2;...` rows after a header line. Rows whose SMILES
/// fails to parse or sanitize are skipped and counted. Coordinates are
/// embedded with a per-row seed derived from `seed`.
/// Throws FileNotFound; EmptyDataset when no row survives.
Dataset load_csv(const std::filesystem::path& path, std::uint64_t seed = 0);

struct MultiHot {
  std::vector<double> y;
  std::size_t unknown = 0;
};

/// 1 at each known descriptor; unknown terms are counted, not errors.
MultiHot multi_hot(const std::vector<std::string>& descriptors, const OdourVocabulary& vocab);

struct DataSplit {
  std::vector<LabeledMolecule> train;
  std::vector<LabeledMolecule> test;
  std::uint64_t seed = 0;
};

/// Seeded shuffle, then the first round(0.8 n) go to train.
/// Throws TooFewSamples below 5 molecules.
DataSplit split_80_20(std::vector<LabeledMolecule> molecules, std::uint64_t seed);

struct EmbedOptions {
  double bond_length = 1.5;
  double clearance = 2.4;       // non-bonded pairs pushed out to this distance
  double min_separation = 0.5;
  int max_iterations = 10000;
};

/// Force-directed 3D layout, centred on the origin. Deterministic in `seed`.
/// Throws EmbeddingFailed when atoms remain closer than min_separation.
MoleculeGraph embed_coordinates(const MoleculeGraph& g, std::uint64_t seed,
                                const EmbedOptions& options = {});

/// Training view of labelled molecules.
std::vector<diffusion::TrainingExample> training_examples(
    const std::vector<LabeledMolecule>& molecules, const OdourVocabulary& vocab);

/// Atom counts of the given molecules, in order.
std::vector<int> atom_counts(const std::vector<LabeledMolecule>& molecules);

}  // namespace odorgen::data
