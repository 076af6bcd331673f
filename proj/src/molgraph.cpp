// SPDX-License-Identifier: Apache-2.0

#include "odorgen/molgraph.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <utility>

namespace odorgen {

BondType bond_type_from_class(int cls) {
  if (cls < 0 || cls > 3) throw IndexOutOfRange("bond class out of range");
  return kAllBondTypes[static_cast<std::size_t>(cls)];
}

std::string_view to_string(BondType t) {
  switch (t) {
    case BondType::Single: return "single";
    case BondType::Double: return "double";
    case BondType::Triple: return "triple";
    case BondType::Aromatic: return "aromatic";
  }
  return "single";
}

std::optional<BondType> bond_type_from_string(std::string_view s) {
  for (auto t : kAllBondTypes) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

MoleculeGraph::MoleculeGraph(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
  for (std::size_t k = 0; k < atoms_.size(); ++k) {
    for (double c : atoms_[k].position) {
      if (!std::isfinite(c)) {
        throw NonFinitePosition("atom " + std::to_string(k) +
                                " has a non-finite coordinate");
      }
    }
  }
}

void MoleculeGraph::check_index(int i) const {
  if (i < 0 || static_cast<std::size_t>(i) >= atoms_.size()) {
    throw IndexOutOfRange("atom index " + std::to_string(i) + " out of range (" +
                          std::to_string(atoms_.size()) + " atoms)");
  }
}

void MoleculeGraph::add_bond(int i, int j, BondType type) {
  check_index(i);
  check_index(j);
  if (i == j) throw SelfLoop("self-loop on atom " + std::to_string(i));
  if (i > j) std::swap(i, j);
  if (bond_between(i, j)) {
    throw DuplicateBond("atoms " + std::to_string(i) + " and " +
                        std::to_string(j) + " are already bonded");
  }
  bonds_.push_back(Bond{i, j, type});
}

const Atom& MoleculeGraph::atom(int i) const {
  check_index(i);
  return atoms_[static_cast<std::size_t>(i)];
}

std::optional<BondType> MoleculeGraph::bond_between(int i, int j) const {
  if (i > j) std::swap(i, j);
  for (const auto& b : bonds_) {
    if (b.i == i && b.j == j) return b.type;
  }
  return std::nullopt;
}

std::vector<std::vector<int>> MoleculeGraph::adjacency() const {
  std::vector<std::vector<int>> adj(atoms_.size());
  for (const auto& b : bonds_) {
    adj[static_cast<std::size_t>(b.i)].push_back(b.j);
    adj[static_cast<std::size_t>(b.j)].push_back(b.i);
  }
  return adj;
}

double MoleculeGraph::pairwise_distance(int i, int j) const {
  const auto& a = atom(i).position;
  const auto& b = atom(j).position;
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double dz = a[2] - b[2];
  // Summation order is fixed so that d(i,j) == d(j,i) bit-for-bit.
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

MoleculeGraph MoleculeGraph::with_positions(const std::vector<Vec3>& positions) const {
  if (positions.size() != atoms_.size()) {
    throw IndexOutOfRange("position count does not match atom count");
  }
  auto atoms = atoms_;
  for (std::size_t k = 0; k < atoms.size(); ++k) atoms[k].position = positions[k];
  MoleculeGraph g(std::move(atoms));
  g.bonds_ = bonds_;
  return g;
}

std::vector<std::vector<int>> connected_components(const MoleculeGraph& g) {
  const auto adj = g.adjacency();
  std::vector<int> comp(g.num_atoms(), -1);
  std::vector<std::vector<int>> out;
  for (std::size_t s = 0; s < g.num_atoms(); ++s) {
    if (comp[s] >= 0) continue;
    std::vector<int> members;
    std::vector<int> stack{static_cast<int>(s)};
    comp[s] = static_cast<int>(out.size());
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      members.push_back(v);
      for (int w : adj[static_cast<std::size_t>(v)]) {
        if (comp[static_cast<std::size_t>(w)] < 0) {
          comp[static_cast<std::size_t>(w)] = comp[s];
          stack.push_back(w);
        }
      }
    }
    std::sort(members.begin(), members.end());
    out.push_back(std::move(members));
  }
  return out;
}

MoleculeGraph induced_subgraph(const MoleculeGraph& g,
                               const std::vector<int>& atom_indices) {
  std::vector<int> remap(g.num_atoms(), -1);
  std::vector<Atom> atoms;
  atoms.reserve(atom_indices.size());
  for (std::size_t k = 0; k < atom_indices.size(); ++k) {
    atoms.push_back(g.atom(atom_indices[k]));
    remap[static_cast<std::size_t>(atom_indices[k])] = static_cast<int>(k);
  }
  MoleculeGraph sub(std::move(atoms));
  for (const auto& b : g.bonds()) {
    int a = remap[static_cast<std::size_t>(b.i)];
    int c = remap[static_cast<std::size_t>(b.j)];
    if (a >= 0 && c >= 0) sub.add_bond(a, c, b.type);
  }
  return sub;
}

MoleculeGraph permute_atoms(const MoleculeGraph& g, const std::vector<int>& order) {
  if (order.size() != g.num_atoms()) {
    throw IndexOutOfRange("permutation length does not match atom count");
  }
  return induced_subgraph(g, order);
}

namespace {

struct IsoState {
  const MoleculeGraph* a;
  const MoleculeGraph* b;
  std::vector<std::vector<std::pair<int, BondType>>> adj_a, adj_b;
  std::vector<int> map_ab, map_ba;
  std::vector<int> order;
};

std::vector<std::vector<std::pair<int, BondType>>> typed_adjacency(
    const MoleculeGraph& g) {
  std::vector<std::vector<std::pair<int, BondType>>> adj(g.num_atoms());
  for (const auto& bd : g.bonds()) {
    adj[static_cast<std::size_t>(bd.i)].emplace_back(bd.j, bd.type);
    adj[static_cast<std::size_t>(bd.j)].emplace_back(bd.i, bd.type);
  }
  return adj;
}

bool extend(IsoState& s, std::size_t depth) {
  if (depth == s.order.size()) return true;
  const int va = s.order[depth];
  const auto& na = s.adj_a[static_cast<std::size_t>(va)];
  for (std::size_t vb = 0; vb < s.b->num_atoms(); ++vb) {
    if (s.map_ba[vb] >= 0) continue;
    if (s.a->atoms()[static_cast<std::size_t>(va)].atomic_number !=
        s.b->atoms()[vb].atomic_number) {
      continue;
    }
    if (na.size() != s.adj_b[vb].size()) continue;
    bool ok = true;
    for (const auto& [wa, ta] : na) {
      int wb = s.map_ab[static_cast<std::size_t>(wa)];
      if (wb < 0) continue;
      auto tb = s.b->bond_between(static_cast<int>(vb), wb);
      if (!tb || *tb != ta) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    s.map_ab[static_cast<std::size_t>(va)] = static_cast<int>(vb);
    s.map_ba[vb] = va;
    if (extend(s, depth + 1)) return true;
    s.map_ab[static_cast<std::size_t>(va)] = -1;
    s.map_ba[vb] = -1;
  }
  return false;
}

}  // namespace

bool isomorphic(const MoleculeGraph& a, const MoleculeGraph& b) {
  if (a.num_atoms() != b.num_atoms() || a.num_bonds() != b.num_bonds()) return false;
  auto signature = [](const MoleculeGraph& g) {
    std::vector<std::pair<int, int>> sig;
    for (const auto& at : g.atoms()) sig.emplace_back(at.atomic_number, 0);
    for (const auto& bd : g.bonds()) {
      sig[static_cast<std::size_t>(bd.i)].second += 1 + 4 * bond_class(bd.type);
      sig[static_cast<std::size_t>(bd.j)].second += 1 + 4 * bond_class(bd.type);
    }
    std::sort(sig.begin(), sig.end());
    return sig;
  };
  if (signature(a) != signature(b)) return false;

  IsoState s{&a, &b, typed_adjacency(a), typed_adjacency(b),
             std::vector<int>(a.num_atoms(), -1),
             std::vector<int>(b.num_atoms(), -1), {}};
  // BFS order keeps each newly placed atom adjacent to placed ones, which
  // lets bond constraints prune early.
  std::vector<char> seen(a.num_atoms(), 0);
  for (std::size_t root = 0; root < a.num_atoms(); ++root) {
    if (seen[root]) continue;
    std::vector<int> queue{static_cast<int>(root)};
    seen[root] = 1;
    for (std::size_t q = 0; q < queue.size(); ++q) {
      s.order.push_back(queue[q]);
      for (const auto& [w, t] : s.adj_a[static_cast<std::size_t>(queue[q])]) {
        (void)t;
        if (!seen[static_cast<std::size_t>(w)]) {
          seen[static_cast<std::size_t>(w)] = 1;
          queue.push_back(w);
        }
      }
    }
  }
  return extend(s, 0);
}

nlohmann::json to_json(const MoleculeGraph& g) {
  nlohmann::json atoms = nlohmann::json::array();
  for (const auto& a : g.atoms()) {
    atoms.push_back({{"z", a.atomic_number},
                     {"xyz", {a.position[0], a.position[1], a.position[2]}}});
  }
  nlohmann::json bonds = nlohmann::json::array();
  for (const auto& b : g.bonds()) {
    bonds.push_back({b.i, b.j, std::string(to_string(b.type))});
  }
  return {{"atoms", std::move(atoms)}, {"bonds", std::move(bonds)}};
}

MoleculeGraph graph_from_json(const nlohmann::json& j) {
  try {
    std::vector<Atom> atoms;
    for (const auto& ja : j.at("atoms")) {
      Atom a;
      a.atomic_number = ja.at("z").get<int>();
      const auto& xyz = ja.at("xyz");
      if (!xyz.is_array() || xyz.size() != 3) throw FormatError("xyz must have 3 entries");
      for (std::size_t k = 0; k < 3; ++k) a.position[k] = xyz[k].get<double>();
      atoms.push_back(a);
    }
    MoleculeGraph g(std::move(atoms));
    for (const auto& jb : j.at("bonds")) {
      if (!jb.is_array() || jb.size() != 3) throw FormatError("bond must be [i,j,type]");
      auto type = bond_type_from_string(jb[2].get<std::string>());
      if (!type) throw FormatError("unknown bond type " + jb[2].get<std::string>());
      g.add_bond(jb[0].get<int>(), jb[1].get<int>(), *type);
    }
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed graph JSON: ") + e.what());
  }
}

}  // namespace odorgen
