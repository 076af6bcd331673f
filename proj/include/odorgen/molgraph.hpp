// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "odorgen/errors.hpp"

namespace odorgen {

ODORGEN_DEFINE_ERROR(NonFinitePosition);
ODORGEN_DEFINE_ERROR(DuplicateBond);
ODORGEN_DEFINE_ERROR(SelfLoop);

using Vec3 = std::array<double, 3>;

struct Atom {
  int atomic_number = 0;
  Vec3 position{0.0, 0.0, 0.0};

  friend bool operator==(const Atom&, const Atom&) = default;
};

enum class BondType { Single, Double, Triple, Aromatic };

inline constexpr std::array<BondType, 4> kAllBondTypes = {
    BondType::Single, BondType::Double, BondType::Triple, BondType::Aromatic};

/// Class index used by the bond classifier (0..3, declaration order).
constexpr int bond_class(BondType t) { return static_cast<int>(t); }
BondType bond_type_from_class(int cls);

std::string_view to_string(BondType t);
std::optional<BondType> bond_type_from_string(std::string_view s);

/// Undirected bond; always stored with i < j.
struct Bond {
  int i = 0;
  int j = 0;
  BondType type = BondType::Single;

  friend bool operator==(const Bond&, const Bond&) = default;
};

/// Heavy-atom molecular graph with 3D positions. Hydrogens are implicit.
///
/// Bonds are keyed by their sorted index pair, so at most one bond can exist
/// per unordered pair and self-loops are unrepresentable. Bond order in
/// bonds() is insertion order.
class MoleculeGraph {
 public:
  MoleculeGraph() = default;

  /// Throws NonFinitePosition if any coordinate is NaN or infinite.
  explicit MoleculeGraph(std::vector<Atom> atoms);

  /// Throws DuplicateBond, SelfLoop or IndexOutOfRange.
  void add_bond(int i, int j, BondType type);

  const std::vector<Atom>& atoms() const { return atoms_; }
  const std::vector<Bond>& bonds() const { return bonds_; }
  std::size_t num_atoms() const { return atoms_.size(); }
  std::size_t num_bonds() const { return bonds_.size(); }
  bool empty() const { return atoms_.empty(); }

  const Atom& atom(int i) const;
  std::optional<BondType> bond_between(int i, int j) const;

  /// Neighbour lists, one per atom, in bond insertion order.
  std::vector<std::vector<int>> adjacency() const;

  /// Euclidean distance between atom positions. Throws IndexOutOfRange.
  double pairwise_distance(int i, int j) const;

  /// Copy with positions replaced; sizes must agree.
  MoleculeGraph with_positions(const std::vector<Vec3>& positions) const;

  friend bool operator==(const MoleculeGraph&, const MoleculeGraph&) = default;

 private:
  void check_index(int i) const;

  std::vector<Atom> atoms_;
  std::vector<Bond> bonds_;
};

/// Free-function form kept for symmetry with the rest of the API.
inline double pairwise_distance(const MoleculeGraph& g, int i, int j) {
  return g.pairwise_distance(i, j);
}

/// Connected components as sorted atom-index lists, ordered by their
/// smallest member.
std::vector<std::vector<int>> connected_components(const MoleculeGraph& g);

/// Sub-graph induced by `atom_indices` (kept in the given order).
MoleculeGraph induced_subgraph(const MoleculeGraph& g,
                               const std::vector<int>& atom_indices);

/// Relabels atoms: atom k of the result is atom order[k] of g.
MoleculeGraph permute_atoms(const MoleculeGraph& g,
                            const std::vector<int>& order);

/// Exact graph isomorphism on element labels and typed bonds (positions
/// ignored). Backtracking search; intended for molecules of modest size.
bool isomorphic(const MoleculeGraph& a, const MoleculeGraph& b);

/// JSON graph format:
///   {"atoms":[{"z":6,"xyz":[0,0,0]},...],"bonds":[[0,1,"single"],...]}
nlohmann::json to_json(const MoleculeGraph& g);
MoleculeGraph graph_from_json(const nlohmann::json& j);

}  // namespace odorgen
