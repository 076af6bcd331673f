// SPDX-License-Identifier: Apache-2.0

#include "odorgen/dataio.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "odorgen/chemrules.hpp"
#include "odorgen/smiles.hpp"

namespace odorgen::data {

std::string normalize_term(const std::string& term) {
  std::size_t a = 0, b = term.size();
  while (a < b && std::isspace(static_cast<unsigned char>(term[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(term[b - 1]))) --b;
  std::string out = term.substr(a, b - a);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

OdourVocabulary OdourVocabulary::from_terms(const std::vector<std::string>& terms) {
  std::set<std::string> unique;
  for (const auto& t : terms) {
    std::string n = normalize_term(t);
    if (!n.empty()) unique.insert(std::move(n));
  }
  OdourVocabulary v;
  v.terms_.assign(unique.begin(), unique.end());
  for (std::size_t k = 0; k < v.terms_.size(); ++k) v.index_[v.terms_[k]] = k;
  return v;
}

std::optional<std::size_t> OdourVocabulary::index_of(const std::string& term) const {
  auto it = index_.find(normalize_term(term));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

namespace {

std::vector<std::string> split_descriptors(const std::string& field) {
  std::set<std::string> out;
  std::size_t start = 0;
  while (start <= field.size()) {
    std::size_t end = field.find(';', start);
    if (end == std::string::npos) end = field.size();
    std::string t = normalize_term(field.substr(start, end - start));
    if (!t.empty()) out.insert(std::move(t));
    start = end + 1;
  }
  return {out.begin(), out.end()};
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw FileNotFound("cannot open dataset " + path.string());

  Dataset ds;
  std::vector<std::string> all_terms;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    auto skip = [&](const std::string& why) {
      ++ds.skipped;
      ds.skip_reasons.push_back("line " + std::to_string(line_no) + ": " + why);
    };
    const std::size_t comma = line.find(',');
    const std::string smiles_text = trim(line.substr(0, comma));
    const std::string desc_field = comma == std::string::npos ? "" : line.substr(comma + 1);
    if (smiles_text.empty()) {
      skip("empty SMILES");
      continue;
    }
    MoleculeGraph graph;
    try {
      graph = smiles::parse(smiles_text);
    } catch (const Error& e) {
      skip(e.what());
      continue;
    }
    chem::SanitizeResult sr = chem::sanitize(graph);
    if (!sr.report.final_verdict) {
      skip("fails validation at " + sr.report.failed_stage());
      continue;
    }
    const std::uint64_t row_seed = seed * 1000003ULL + ds.molecules.size();
    try {
      graph = embed_coordinates(sr.graph, row_seed);
    } catch (const EmbeddingFailed& e) {
      skip(e.what());
      continue;
    }
    LabeledMolecule m{smiles_text, split_descriptors(desc_field), std::move(graph)};
    all_terms.insert(all_terms.end(), m.descriptors.begin(), m.descriptors.end());
    ds.molecules.push_back(std::move(m));
  }
  if (ds.molecules.empty()) {
    throw EmptyDataset("no valid rows in " + path.string() + " (" +
                       std::to_string(ds.skipped) + " skipped)");
  }
  ds.vocab = OdourVocabulary::from_terms(all_terms);
  return ds;
}

MultiHot multi_hot(const std::vector<std::string>& descriptors, const OdourVocabulary& vocab) {
  MultiHot out;
  out.y.assign(vocab.size(), 0.0);
  for (const auto& d : descriptors) {
    if (auto k = vocab.index_of(d)) {
      out.y[*k] = 1.0;
    } else {
      ++out.unknown;
    }
  }
  return out;
}

DataSplit split_80_20(std::vector<LabeledMolecule> molecules, std::uint64_t seed) {
  if (molecules.size() < 5) {
    throw TooFewSamples("need at least 5 molecules to split, have " +
                        std::to_string(molecules.size()));
  }
  std::vector<std::size_t> order(molecules.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  for (std::size_t i = order.size() - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
    std::swap(order[i], order[j]);
  }
  const auto n_train =
      static_cast<std::size_t>(std::llround(0.8 * static_cast<double>(molecules.size())));
  DataSplit split;
  split.seed = seed;
  for (std::size_t k = 0; k < order.size(); ++k) {
    auto& dst = k < n_train ? split.train : split.test;
    dst.push_back(std::move(molecules[order[k]]));
  }
  return split;
}

std::vector<diffusion::TrainingExample> training_examples(
    const std::vector<LabeledMolecule>& molecules, const OdourVocabulary& vocab) {
  std::vector<diffusion::TrainingExample> out;
  out.reserve(molecules.size());
  for (const auto& m : molecules) out.push_back({m.graph, multi_hot(m.descriptors, vocab).y});
  return out;
}

std::vector<int> atom_counts(const std::vector<LabeledMolecule>& molecules) {
  std::vector<int> out;
  out.reserve(molecules.size());
  for (const auto& m : molecules) out.push_back(static_cast<int>(m.graph.num_atoms()));
  return out;
}

}  // namespace odorgen::data
