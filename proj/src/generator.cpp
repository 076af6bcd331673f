// SPDX-License-Identifier: Apache-2.0

#include "odorgen/generator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <sstream>

#include "odorgen/elements.hpp"
#include "odorgen/smiles.hpp"

namespace odorgen::gen {

std::vector<int> default_allowlist() { return {6, 7, 8, 9, 15, 16, 17}; }

std::string_view to_string(Mode m) {
  return m == Mode::Constrained ? "constrained" : "unconstrained";
}

void validate_config(const GenerationConfig& c) {
  if (c.T < 1) throw InvalidConfig("T must be at least 1");
  if (!(c.tau > 0.0)) throw InvalidConfig("tau must be positive");
  if (c.n_atoms < 0) throw InvalidConfig("n_atoms must be nonnegative");
  if (c.n_atoms == 0) {
    if (c.atom_count_pool.empty()) {
      throw InvalidConfig("no atom count given and no training atom counts available");
    }
    for (int n : c.atom_count_pool) {
      if (n < 1) throw InvalidConfig("atom count pool entries must be positive");
    }
  }
  if (c.mode == Mode::Constrained) {
    if (c.allowlist.empty()) throw InvalidConfig("constrained mode needs a nonempty allowlist");
    for (int z : c.allowlist) {
      if (z < 1 || z > kMaxAtomicNumber) {
        throw InvalidConfig("allowlist entry " + std::to_string(z) + " outside [1,118]");
      }
    }
  }
}

Corpus Corpus::from_smiles(const std::vector<std::string>& smiles) {
  Corpus c;
  for (const auto& s : smiles) {
    try {
      c.entries_.insert(smiles::canonicalize(smiles::parse(s)));
    } catch (const Error&) {
    }
  }
  return c;
}

std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t k) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (k + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<int> decode_nodes(std::span<const double> x, const GenerationConfig& config) {
  std::vector<int> kept;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = std::isfinite(x[i]) ? std::round(x[i]) : 0.0;
    if (v < 1.0 || v > static_cast<double>(kMaxAtomicNumber)) continue;
    const int z = static_cast<int>(v);
    if (config.mode == Mode::Constrained &&
        std::find(config.allowlist.begin(), config.allowlist.end(), z) ==
            config.allowlist.end()) {
      continue;
    }
    kept.push_back(static_cast<int>(i));
  }
  return kept;
}

std::vector<int> decode_atoms(std::span<const double> x, const GenerationConfig& config) {
  std::vector<int> out;
  for (int i : decode_nodes(x, config)) {
    out.push_back(static_cast<int>(std::round(x[static_cast<std::size_t>(i)])));
  }
  return out;
}

std::vector<std::pair<int, int>> propose_edges(const std::vector<Vec3>& coords,
                                               double cutoff) {
  std::vector<std::pair<int, int>> out;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    for (std::size_t j = i + 1; j < coords.size(); ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += (coords[i][k] - coords[j][k]) * (coords[i][k] - coords[j][k]);
      if (std::sqrt(s) < cutoff) out.emplace_back(static_cast<int>(i), static_cast<int>(j));
    }
  }
  return out;
}

std::vector<TypedEdge> assign_bond_types(const std::vector<std::pair<int, int>>& edges,
                                         const Tensor& embeddings,
                                         const std::vector<int>& atoms,
                                         const ParamStore& params, double tau,
                                         BondSource source) {
  std::vector<TypedEdge> out;
  out.reserve(edges.size());
  if (source == BondSource::Heuristic) {
    for (const auto& [i, j] : edges) {
      out.push_back({i, j,
                     chem::heuristic_bond_type(atoms.at(static_cast<std::size_t>(i)),
                                               atoms.at(static_cast<std::size_t>(j)))});
    }
    return out;
  }
  if (edges.empty()) return out;
  const Tensor probs =
      diffusion::bond_probabilities(diffusion::classify_bonds(params, embeddings, edges), tau);
  for (std::size_t k = 0; k < edges.size(); ++k) {
    int best = 0;
    for (int c = 1; c < diffusion::kNumBondClasses; ++c) {
      if (probs(k, static_cast<std::size_t>(c)) > probs(k, static_cast<std::size_t>(best))) {
        best = c;
      }
    }
    out.push_back({edges[k].first, edges[k].second, bond_type_from_class(best)});
  }
  return out;
}

MoleculeGraph assemble(const std::vector<int>& atoms, const std::vector<Vec3>& coords,
                       const std::vector<TypedEdge>& bonds, std::vector<std::string>* skipped) {
  std::vector<Atom> list;
  for (std::size_t k = 0; k < atoms.size(); ++k) {
    Vec3 p = k < coords.size() ? coords[k] : Vec3{0.0, 0.0, 0.0};
    for (double& c : p) {
      if (!std::isfinite(c)) c = 0.0;
    }
    list.push_back({atoms[k], p});
  }
  MoleculeGraph g(std::move(list));
  for (const auto& b : bonds) {
    try {
      g.add_bond(b.i, b.j, b.type);
    } catch (const Error& e) {
      if (skipped) {
        skipped->push_back("bond (" + std::to_string(b.i) + "," + std::to_string(b.j) +
                           ") skipped: " + e.what());
      }
    }
  }
  return g;
}

Finalized finalize(const MoleculeGraph& g, const Corpus* corpus) {
  Finalized out;
  chem::SanitizeResult sr = chem::sanitize(g);
  out.validation = sr.report;
  if (!out.validation.final_verdict) return out;
  out.smiles = smiles::canonicalize(sr.graph);
  out.corpus_match = corpus != nullptr && corpus->contains(*out.smiles);
  return out;
}

GenerationReport sample(const std::vector<double>& y, const GenerationConfig& config,
                        const ParamStore& params, const Corpus* corpus) {
  if (params.empty() || !params.contains("head.w") || !params.contains("bond.l2.w")) {
    throw UntrainedParams("parameter store does not hold a denoiser");
  }
  validate_config(config);

  std::mt19937_64 rng(config.seed);
  GenerationReport report;
  report.seed = config.seed;
  int n = config.n_atoms;
  if (n == 0) {
    std::uniform_int_distribution<std::size_t> pick(0, config.atom_count_pool.size() - 1);
    n = config.atom_count_pool[pick(rng)];
  }
  report.n_atoms = n;
  const auto un = static_cast<std::size_t>(n);

  std::normal_distribution<double> normal(0.0, 1.0);
  diffusion::DenoiserInput in;
  in.x_t = Tensor::matrix(un, 1);
  in.coords = Tensor::matrix(un, 3);
  for (double& v : in.x_t.data()) v = normal(rng);
  for (double& v : in.coords.data()) v = normal(rng);
  in.y = y;
  in.edges = egnn::fully_connected(un);

  const diffusion::NoiseSchedule schedule{config.T, 1.0};
  Tensor embeddings;
  for (int t = config.T; t >= 1; --t) {
    in.t = t;
    diffusion::DenoiserOutput out = diffusion::denoiser_forward(params, schedule, in);
    const double step = std::sqrt(diffusion::beta_at(schedule, t)) -
                        (t > 1 ? std::sqrt(diffusion::beta_at(schedule, t - 1)) : 0.0);
    for (std::size_t i = 0; i < un; ++i) in.x_t[i] -= step * out.eps_hat[i];
    in.coords = std::move(out.coords);
    embeddings = std::move(out.embeddings);
    ++report.steps_run;
  }
  report.raw_features = in.x_t.values();

  const std::vector<int> kept = decode_nodes(report.raw_features, config);
  std::vector<Vec3> coords;
  Tensor kept_embeddings = Tensor::matrix(kept.size(), embeddings.cols());
  for (std::size_t k = 0; k < kept.size(); ++k) {
    const auto src = static_cast<std::size_t>(kept[k]);
    report.decoded_atoms.push_back(static_cast<int>(std::round(report.raw_features[src])));
    coords.push_back({in.coords(src, 0), in.coords(src, 1), in.coords(src, 2)});
    for (std::size_t c = 0; c < embeddings.cols(); ++c) {
      kept_embeddings(k, c) = embeddings(src, c);
    }
  }
  for (auto& p : coords) {
    for (double& c : p) {
      if (!std::isfinite(c)) c = 0.0;
    }
  }
  report.proposed_edges = propose_edges(coords, config.edge_cutoff);
  report.bonds = assign_bond_types(report.proposed_edges, kept_embeddings,
                                   report.decoded_atoms, params, config.tau,
                                   config.bond_source);
  MoleculeGraph g = assemble(report.decoded_atoms, coords, report.bonds, &report.skipped_bonds);
  Finalized f = finalize(g, corpus);
  report.validation = std::move(f.validation);
  report.smiles = std::move(f.smiles);
  report.corpus_match = f.corpus_match;
  return report;
}

nlohmann::json to_json(const GenerationReport& r) {
  nlohmann::json bonds = nlohmann::json::array();
  for (const auto& b : r.bonds) bonds.push_back({b.i, b.j, std::string(to_string(b.type))});
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [i, j] : r.proposed_edges) edges.push_back({i, j});
  nlohmann::json raw = nlohmann::json::array();
  for (double v : r.raw_features) {
    if (std::isfinite(v)) {
      raw.push_back(v);
    } else {
      raw.push_back(nullptr);
    }
  }
  nlohmann::json j = {
      {"seed", r.seed},
      {"n_atoms", r.n_atoms},
      {"steps_run", r.steps_run},
      {"raw_features", raw},
      {"decoded_atoms", r.decoded_atoms},
      {"proposed_edges", edges},
      {"bonds", bonds},
      {"skipped_bonds", r.skipped_bonds},
      {"validation", chem::to_json(r.validation)},
      {"valid", r.validation.final_verdict},
      {"corpus_match", r.corpus_match},
  };
  j["smiles"] = r.smiles ? nlohmann::json(*r.smiles) : nlohmann::json(nullptr);
  return j;
}

double validity_rate(const std::vector<GenerationReport>& reports) {
  if (reports.empty()) throw EmptyInput("validity rate of zero reports is undefined");
  const auto valid = std::count_if(reports.begin(), reports.end(), [](const auto& r) {
    return r.validation.final_verdict;
  });
  return static_cast<double>(valid) / static_cast<double>(reports.size());
}

nlohmann::json summary_json(const std::vector<GenerationReport>& reports,
                            const GenerationConfig& config) {
  std::map<std::string, int> failures;
  for (const char* stage : chem::kCascadeStages) failures[stage] = 0;
  std::size_t valid = 0;
  std::size_t novel = 0;
  for (const auto& r : reports) {
    if (r.validation.final_verdict) {
      ++valid;
      if (!r.corpus_match) ++novel;
    } else {
      ++failures[r.validation.failed_stage()];
    }
  }
  nlohmann::json j = {
      {"samples", reports.size()},
      {"valid", valid},
      {"novel_valid", novel},
      {"failures_by_stage", failures},
      {"mode", std::string(to_string(config.mode))},
      {"seed", config.seed},
      {"T", config.T},
      {"tau", config.tau},
  };
  j["validity_rate"] = reports.empty() ? nlohmann::json(nullptr)
                                       : nlohmann::json(validity_rate(reports));
  return j;
}

std::string format_table1(const std::vector<Table1Row>& rows) {
  std::ostringstream out;
  out << "| Model | Valid molecules (%) | Samples |\n";
  out << "|---|---|---|\n";
  for (const auto& r : rows) {
    char pct[32];
    std::snprintf(pct, sizeof pct, "%.2f", 100.0 * r.validity_rate);
    out << "| " << r.model << " | " << pct << " | " << r.samples << " |\n";
  }
  return out.str();
}

}  // namespace odorgen::gen
