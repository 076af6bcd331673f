// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "odorgen/molgraph.hpp"

namespace odorgen::chem {

/// Allowed total bond orders (including implicit hydrogens) per element.
class ValenceTable {
 public:
  /// H, B, C, N, O, F, Si, P, S, Cl, Se, Br, I.
  static ValenceTable default_table();

  /// JSON object keyed by element symbol: {"C":[4],"N":[3,5],...}.
  static ValenceTable from_json(const nlohmann::json& j);
  static ValenceTable load(const std::filesystem::path& path);

  void set(int atomic_number, std::vector<int> orders);
  bool contains(int atomic_number) const;
  /// Sorted ascending. Throws UnknownElement.
  const std::vector<int>& allowed(int atomic_number) const;
  int max_valence(int atomic_number) const { return allowed(atomic_number).back(); }

 private:
  std::array<std::vector<int>, 119> orders_{};
};

/// Edge as proposed by a decoder; may be duplicated, reversed or a self-loop.
struct Edge {
  int i = 0;
  int j = 0;
  BondType type = BondType::Single;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Atoms and an unchecked edge list, i.e. a molecule before deduplication.
struct RawMolecule {
  std::vector<Atom> atoms;
  std::vector<Edge> edges;
};

/// Rounds every scalar to the nearest integer and drops values outside
/// [1, 118]. Non-finite inputs are treated as 0 and therefore dropped.
std::vector<int> check_atomic_range(std::span<const double> values);

/// Keeps the first edge per unordered pair and removes self-loops.
std::vector<Edge> dedup_edges(std::span<const Edge> edges);

/// Bond order 1 + (|z_i - z_j| mod 3), mapped to Single/Double/Triple.
BondType heuristic_bond_type(int z_i, int z_j);

struct AtomValence {
  int atom = 0;
  int atomic_number = 0;
  int total_valence = 0;  // explicit bond orders, aromatic-adjusted
  int implicit_hydrogens = 0;
  bool ok = true;
};

struct ValenceResult {
  bool passed = true;
  std::vector<AtomValence> atoms;

  std::string detail() const;
};

/// Integer bond-order total per atom. Non-aromatic bonds add their order.
/// An atom with k aromatic bonds adds k, plus 1 for its pi bond unless it
/// is a chalcogen (O, S, Se), which donates a lone pair instead.
std::vector<int> valence_totals(const MoleculeGraph& g);

/// Pass iff every atom's total does not exceed its maximum allowed valence;
/// implicit hydrogens raise the total to the next allowed value.
/// Throws UnknownElement if an atom is absent from the table.
ValenceResult valence_check(const MoleculeGraph& g, const ValenceTable& table);

/// Alternating single/double assignment for the aromatic bonds of a graph.
struct KekuleForm {
  /// Same order as g.bonds(); aromatic entries replaced by Single/Double.
  std::vector<BondType> bond_types;
  /// Atom contributes a lone pair to its ring (pyrrole N, furan O, ...).
  std::vector<char> lone_pair_donor;
  /// Atom carries an exocyclic double bond and contributes no pi electron.
  std::vector<char> exocyclic_pi;
};

/// nullopt when no valid alternating assignment exists.
std::optional<KekuleForm> kekulize(const MoleculeGraph& g);

/// Graph with aromatic bonds rewritten in Kekule form; nullopt if impossible.
std::optional<MoleculeGraph> kekulized_graph(const MoleculeGraph& g);

struct AromaticityResult {
  bool passed = true;
  std::string detail;
  std::vector<int> formal_charges;
};

/// Every aromatic bond must lie on a simple cycle of aromatic bonds made of
/// C/N/O/S atoms whose pi-electron count is 4n+2; every atom must have zero
/// formal charge.
AromaticityResult aromaticity_and_charge_check(
    const MoleculeGraph& g,
    const ValenceTable& table = ValenceTable::default_table());

struct StageResult {
  std::string stage;
  bool passed = false;
  std::string detail;
};

inline constexpr std::array<const char*, 5> kCascadeStages = {
    "atomic_range", "dedup", "valence", "aromaticity_charge", "kekulization"};

struct ValidationReport {
  /// Always one entry per cascade stage, in cascade order. Stages after the
  /// first failure are recorded as not passed with detail "skipped".
  std::vector<StageResult> stages;
  bool final_verdict = false;
  /// Number of connected components; > 1 means the molecule is fragmented.
  int fragments = 0;

  /// Name of the first failing stage, or empty when all passed.
  std::string failed_stage() const;
};

nlohmann::json to_json(const ValidationReport& r);

struct SanitizeResult {
  MoleculeGraph graph;
  ValidationReport report;
};

/// Runs atomic range -> dedup -> valence -> aromaticity/charge ->
/// kekulization. Never throws; failures are recorded in the report.
SanitizeResult sanitize(const RawMolecule& raw,
                        const ValenceTable& table = ValenceTable::default_table());
SanitizeResult sanitize(const MoleculeGraph& g,
                        const ValenceTable& table = ValenceTable::default_table());

}  // namespace odorgen::chem
