// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include <gtest/gtest.h>

#include "odorgen/generator.hpp"
#include "odorgen/smiles.hpp"

namespace odorgen::gen {
namespace {

constexpr std::size_t kVocab = 4;

GenerationConfig quick_config(std::uint64_t seed) {
  GenerationConfig c;
  c.T = 40;
  c.n_atoms = 6;
  c.seed = seed;
  return c;
}

Corpus bundled_corpus() {
  std::ifstream in(std::string(ODORGEN_DATA_DIR) + "/mini_scents.csv");
  std::vector<std::string> smiles;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) smiles.push_back(line.substr(0, line.find(',')));
  return Corpus::from_smiles(smiles);
}

TEST(Config, Validation) {
  GenerationConfig c = quick_config(0);
  EXPECT_NO_THROW(validate_config(c));
  c.allowlist.clear();
  EXPECT_THROW(validate_config(c), InvalidConfig);
  c.mode = Mode::Unconstrained;
  EXPECT_NO_THROW(validate_config(c));
  c.n_atoms = 0;
  EXPECT_THROW(validate_config(c), InvalidConfig);
  c.atom_count_pool = {3, 5};
  EXPECT_NO_THROW(validate_config(c));
  c.tau = 0.0;
  EXPECT_THROW(validate_config(c), InvalidConfig);
  GenerationConfig d = quick_config(0);
  d.allowlist = {6, 200};
  EXPECT_THROW(validate_config(d), InvalidConfig);
  EXPECT_EQ(default_allowlist(), (std::vector<int>{6, 7, 8, 9, 15, 16, 17}));
}

TEST(Decode, RoundsConstrained) {
  GenerationConfig c;
  c.allowlist = {6};
  const std::vector<double> x{5.8, 6.4};
  EXPECT_EQ(decode_atoms(x, c), (std::vector<int>{6, 6}));
}

TEST(Decode, NanDropped) {
  GenerationConfig c;
  c.mode = Mode::Unconstrained;
  const std::vector<double> x{std::numeric_limits<double>::quiet_NaN()};
  EXPECT_TRUE(decode_atoms(x, c).empty());
}

TEST(Decode, AllowlistFilters) {
  GenerationConfig c;
  c.allowlist = {6, 7, 8};
  const std::vector<double> x{9.2};
  EXPECT_TRUE(decode_atoms(x, c).empty());
  c.mode = Mode::Unconstrained;
  EXPECT_EQ(decode_atoms(x, c), (std::vector<int>{9}));
}

TEST(Decode, NodesKeepIndices) {
  GenerationConfig c;
  c.allowlist = {6, 8};
  const std::vector<double> x{-2.0, 6.1, 7.0, 7.9, 300.0};
  EXPECT_EQ(decode_nodes(x, c), (std::vector<int>{1, 3}));
}

TEST(Edges, ThresholdRule) {
  EXPECT_EQ(propose_edges({Vec3{0, 0, 0}, Vec3{1.2, 0, 0}}), (std::vector<std::pair<int, int>>{{0, 1}}));
  EXPECT_TRUE(propose_edges({Vec3{0, 0, 0}, Vec3{5, 0, 0}}).empty());
  EXPECT_EQ(propose_edges({Vec3{0, 0, 0}, Vec3{1, 0, 0}, Vec3{2, 0, 0}}),
            (std::vector<std::pair<int, int>>{{0, 1}, {1, 2}}));
  EXPECT_TRUE(propose_edges({Vec3{0, 0, 0}, Vec3{1.8, 0, 0}}).empty());
}

TEST(BondTypes, ClassifierArgmax) {
  ParamStore p = diffusion::init_model({kVocab}, 1);
  p.fill_zero();
  p.mutable_value("bond.l2.b")[0] = 5.0;
  const std::vector<std::pair<int, int>> edges{{0, 1}, {1, 2}};
  const auto typed = assign_bond_types(edges, Tensor::matrix(3, 8, 0.2), {6, 6, 8}, p, 0.5,
                                       BondSource::Classifier);
  ASSERT_EQ(typed.size(), 2u);
  for (const auto& e : typed) EXPECT_EQ(e.type, BondType::Single);
  p.mutable_value("bond.l2.b")[2] = 9.0;
  const auto triple = assign_bond_types(edges, Tensor::matrix(3, 8, 0.2), {6, 6, 8}, p, 0.5,
                                        BondSource::Classifier);
  for (const auto& e : triple) EXPECT_EQ(e.type, BondType::Triple);
}

TEST(BondTypes, HeuristicFallback) {
  const ParamStore p = diffusion::init_model({kVocab}, 2);
  const auto typed = assign_bond_types({{0, 1}}, Tensor::matrix(2, 8), {6, 8}, p, 0.5,
                                       BondSource::Heuristic);
  ASSERT_EQ(typed.size(), 1u);
  EXPECT_EQ(typed[0].type, chem::heuristic_bond_type(6, 8));
}

TEST(Assemble, DuplicateBondSkipped) {
  std::vector<std::string> skipped;
  const MoleculeGraph g = assemble({6, 6}, {Vec3{0, 0, 0}, Vec3{1.4, 0, 0}},
                                   {{0, 1, BondType::Single}, {1, 0, BondType::Double}}, &skipped);
  EXPECT_EQ(g.num_bonds(), 1u);
  ASSERT_EQ(skipped.size(), 1u);
  EXPECT_NE(skipped[0].find("(1,0)"), std::string::npos);
}

TEST(Finalize, EthanolMatchesCorpus) {
  const Corpus corpus = bundled_corpus();
  MoleculeGraph g({Atom{8, {}}, Atom{6, {}}, Atom{6, {}}});
  g.add_bond(0, 1, BondType::Single);
  g.add_bond(1, 2, BondType::Single);
  const Finalized f = finalize(g, &corpus);
  EXPECT_TRUE(f.validation.final_verdict);
  ASSERT_TRUE(f.smiles.has_value());
  EXPECT_EQ(*f.smiles, smiles::canonicalize(smiles::parse("CCO")));
  EXPECT_TRUE(f.corpus_match);
}

TEST(Finalize, PentavalentCarbonFails) {
  MoleculeGraph g(std::vector<Atom>(6, Atom{6, {}}));
  for (int k = 1; k < 6; ++k) g.add_bond(0, k, BondType::Single);
  const Finalized f = finalize(g);
  EXPECT_FALSE(f.validation.final_verdict);
  EXPECT_EQ(f.validation.failed_stage(), "valence");
  EXPECT_FALSE(f.smiles.has_value());
}

TEST(Finalize, NovelMoleculeStillEmitted) {
  const Corpus corpus = bundled_corpus();
  const Finalized f = finalize(smiles::parse("FC(F)(Cl)CCCCCCCCCCS"), &corpus);
  EXPECT_TRUE(f.validation.final_verdict);
  EXPECT_TRUE(f.smiles.has_value());
  EXPECT_FALSE(f.corpus_match);
}

TEST(Finalize, EmptyGraphFailsAtRange) {
  const Finalized f = finalize(assemble({}, {}, {}, nullptr));
  EXPECT_EQ(f.validation.failed_stage(), "atomic_range");
}

TEST(Sample, DeterministicAndRunsAllSteps) {
  const ParamStore p = diffusion::init_model({kVocab}, 3);
  const std::vector<double> y{1, 0, 1, 0};
  const GenerationReport a = sample(y, quick_config(5), p);
  const GenerationReport b = sample(y, quick_config(5), p);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  EXPECT_EQ(a.steps_run, 40);
  EXPECT_EQ(a.raw_features.size(), 6u);
  EXPECT_EQ(a.smiles.has_value(), a.validation.final_verdict);
}

TEST(Sample, ConstrainedClosure) {
  const ParamStore p = diffusion::init_model({kVocab}, 4);
  const auto allow = default_allowlist();
  for (std::uint64_t s = 0; s < 30; ++s) {
    GenerationConfig c = quick_config(sample_seed(11, s));
    c.T = 10;
    const GenerationReport r = sample({0, 1, 0, 0}, c, p);
    for (int z : r.decoded_atoms) {
      EXPECT_TRUE(std::find(allow.begin(), allow.end(), z) != allow.end()) << z;
    }
  }
}

TEST(Sample, ZeroParametersDoNotCrash) {
  ParamStore p = diffusion::init_model({kVocab}, 5);
  p.fill_zero();
  GenerationConfig c = quick_config(1);
  c.mode = Mode::Unconstrained;
  const GenerationReport r = sample({0, 0, 0, 0}, c, p);
  EXPECT_EQ(r.steps_run, c.T);
  EXPECT_EQ(r.smiles.has_value(), r.validation.final_verdict);
}

TEST(Sample, NonFiniteParametersGiveFailReport) {
  ParamStore p = diffusion::init_model({kVocab}, 6);
  for (const auto& n : p.names()) {
    for (double& v : p.mutable_value(n).data()) v = std::numeric_limits<double>::quiet_NaN();
  }
  GenerationConfig c = quick_config(2);
  c.mode = Mode::Unconstrained;
  const GenerationReport r = sample({0, 0, 0, 0}, c, p);
  EXPECT_EQ(r.validation.stages.size(), chem::kCascadeStages.size());
  EXPECT_EQ(r.smiles.has_value(), r.validation.final_verdict);
}

TEST(Sample, AtomCountDrawnFromPool) {
  const ParamStore p = diffusion::init_model({kVocab}, 7);
  GenerationConfig c = quick_config(0);
  c.n_atoms = 0;
  c.atom_count_pool = {3, 9};
  c.T = 5;
  std::set<int> seen;
  for (std::uint64_t s = 0; s < 20; ++s) {
    c.seed = sample_seed(0, s);
    seen.insert(sample({0, 0, 0, 0}, c, p).n_atoms);
  }
  EXPECT_EQ(seen, (std::set<int>{3, 9}));
}

TEST(Sample, Errors) {
  EXPECT_THROW(sample({0, 0, 0, 0}, quick_config(0), ParamStore{}), UntrainedParams);
  const ParamStore p = diffusion::init_model({kVocab}, 8);
  EXPECT_THROW(sample({0, 0}, quick_config(0), p), diffusion::LengthMismatch);
}

TEST(Sample, EmittedSmilesRevalidate) {
  const ParamStore p = diffusion::init_model({kVocab}, 9);
  GenerationConfig c = quick_config(0);
  c.mode = Mode::Unconstrained;
  c.bond_source = BondSource::Heuristic;
  c.n_atoms = 2;
  for (std::uint64_t s = 0; s < 40; ++s) {
    c.seed = sample_seed(3, s);
    const GenerationReport r = sample({1, 1, 0, 0}, c, p);
    if (!r.smiles) continue;
    EXPECT_TRUE(chem::sanitize(smiles::parse(*r.smiles)).report.final_verdict) << *r.smiles;
  }
}

GenerationReport with_verdict(bool pass) {
  GenerationReport r;
  r.validation.final_verdict = pass;
  if (!pass) r.validation.stages.push_back({"valence", false, ""});
  return r;
}

TEST(Validity, Rates) {
  EXPECT_DOUBLE_EQ(validity_rate(std::vector<GenerationReport>(4, with_verdict(true))), 1.0);
  EXPECT_DOUBLE_EQ(validity_rate({with_verdict(true), with_verdict(false), with_verdict(false),
                                  with_verdict(false)}),
                   0.25);
  EXPECT_THROW(validity_rate({}), EmptyInput);
}

TEST(Validity, SummaryCountsStages) {
  const auto j = summary_json({with_verdict(true), with_verdict(false)}, quick_config(3));
  EXPECT_EQ(j["samples"], 2);
  EXPECT_EQ(j["valid"], 1);
  EXPECT_EQ(j["failures_by_stage"]["valence"], 1);
  EXPECT_EQ(j["failures_by_stage"]["atomic_range"], 0);
  EXPECT_DOUBLE_EQ(j["validity_rate"].get<double>(), 0.5);
  EXPECT_EQ(j["mode"], "constrained");
}

TEST(Validity, SummaryTableFormat) {
  const std::string t = format_table1({{"odorgen (constrained)", 0.2771, 1000}});
  EXPECT_EQ(t,
            "| Model | Valid molecules (%) | Samples |\n|---|---|---|\n"
            "| odorgen (constrained) | 27.71 | 1000 |\n");
}

TEST(Seeds, DistinctPerSample) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t k = 0; k < 1000; ++k) seen.insert(sample_seed(42, k));
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_EQ(sample_seed(1, 2), sample_seed(1, 2));
  EXPECT_NE(sample_seed(1, 2), sample_seed(2, 2));
}

TEST(Corpus, IgnoresUnparseable) {
  const Corpus c = Corpus::from_smiles({"CCO", "C(C", "OCC"});
  EXPECT_EQ(c.size(), 1u);
  EXPECT_TRUE(c.contains(smiles::canonicalize(smiles::parse("CCO"))));
}

}  // namespace
}  // namespace odorgen::gen
