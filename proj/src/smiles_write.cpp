// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cctype>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <vector>

#include "odorgen/chemrules.hpp"
#include "odorgen/elements.hpp"
#include "odorgen/smiles.hpp"

namespace odorgen::smiles {
namespace {

bool organic_subset(int z) {
  switch (z) {
    case 5: case 6: case 7: case 8: case 9: case 15: case 16: case 17: case 35: case 53:
      return true;
    default:
      return false;
  }
}

// Writes one connected graph whose atom indices already encode the
// traversal priority (index 0 is the root, lower index visited first).
class Writer {
 public:
  explicit Writer(const MoleculeGraph& g) : g_(g), n_(g.num_atoms()) {
    for (const auto& a : g.atoms()) {
      if (element_symbol(a.atomic_number).empty()) {
        throw UnwritableGraph("atomic number " + std::to_string(a.atomic_number) +
                              " has no element symbol");
      }
    }
    bool aromatic = std::any_of(g.bonds().begin(), g.bonds().end(), [](const Bond& b) {
      return b.type == BondType::Aromatic;
    });
    types_.reserve(g.num_bonds());
    for (const auto& b : g.bonds()) types_.push_back(b.type);
    lowercase_.assign(n_, 0);
    nh_.assign(n_, 0);
    if (aromatic) {
      auto kek = chem::kekulize(g);
      if (!kek) throw UnwritableGraph("aromatic system cannot be kekulized");
      if (chem::aromaticity_and_charge_check(g).passed) {
        for (const auto& b : g.bonds()) {
          if (b.type != BondType::Aromatic) continue;
          lowercase_[static_cast<std::size_t>(b.i)] = 1;
          lowercase_[static_cast<std::size_t>(b.j)] = 1;
        }
        std::vector<int> degree(n_, 0);
        for (const auto& b : g.bonds()) {
          ++degree[static_cast<std::size_t>(b.i)];
          ++degree[static_cast<std::size_t>(b.j)];
        }
        for (std::size_t a = 0; a < n_; ++a) {
          nh_[a] = lowercase_[a] && g.atoms()[a].atomic_number == 7 &&
                   kek->lone_pair_donor[a] && degree[a] == 2;
        }
      } else {
        types_ = kek->bond_types;
      }
    }
    adj_.resize(n_);
    for (std::size_t b = 0; b < g.num_bonds(); ++b) {
      const auto& bd = g.bonds()[b];
      adj_[static_cast<std::size_t>(bd.i)].push_back({bd.j, static_cast<int>(b)});
      adj_[static_cast<std::size_t>(bd.j)].push_back({bd.i, static_cast<int>(b)});
    }
    for (auto& nb : adj_) std::sort(nb.begin(), nb.end());
  }

  std::string run() {
    if (n_ == 0) return {};
    visited_.assign(n_, 0);
    parent_.assign(n_, -1);
    children_.assign(n_, {});
    closures_at_.assign(n_, {});
    find_structure(0);
    std::string out;
    emit(0, out);
    return out;
  }

 private:
  struct Nbr {
    int atom;
    int bond;
    friend bool operator<(const Nbr& a, const Nbr& b) { return a.atom < b.atom; }
  };
  struct Closure {
    int bond;
    bool opening;
  };

  void find_structure(int v) {
    visited_[static_cast<std::size_t>(v)] = 1;
    for (const auto& [w, b] : adj_[static_cast<std::size_t>(v)]) {
      if (w == parent_[static_cast<std::size_t>(v)] && b == parent_bond(v)) continue;
      if (visited_[static_cast<std::size_t>(w)]) {
        // Back edge seen from the descendant first; the ancestor opens it.
        if (!closure_seen_.insert(b).second) continue;
        closures_at_[static_cast<std::size_t>(w)].push_back({b, true});
        closures_at_[static_cast<std::size_t>(v)].push_back({b, false});
        continue;
      }
      parent_[static_cast<std::size_t>(w)] = v;
      parent_bond_[w] = b;
      children_[static_cast<std::size_t>(v)].push_back({w, b});
      find_structure(w);
    }
  }

  int parent_bond(int v) const {
    auto it = parent_bond_.find(v);
    return it == parent_bond_.end() ? -1 : it->second;
  }

  std::string atom_text(int v) const {
    const int z = g_.atoms()[static_cast<std::size_t>(v)].atomic_number;
    std::string sym(element_symbol(z));
    if (lowercase_[static_cast<std::size_t>(v)]) {
      for (auto& ch : sym) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
      if (nh_[static_cast<std::size_t>(v)]) return "[" + sym + "H]";
      if (organic_subset(z)) return sym;
      return "[" + sym + "]";
    }
    if (organic_subset(z)) return sym;
    return "[" + sym + "]";
  }

  std::string bond_text(int b) const {
    const auto& bd = g_.bonds()[static_cast<std::size_t>(b)];
    switch (types_[static_cast<std::size_t>(b)]) {
      case BondType::Double: return "=";
      case BondType::Triple: return "#";
      case BondType::Aromatic: return "";
      case BondType::Single:
        return lowercase_[static_cast<std::size_t>(bd.i)] &&
                       lowercase_[static_cast<std::size_t>(bd.j)]
                   ? "-"
                   : "";
    }
    return "";
  }

  static std::string digit_text(int d) {
    return d < 10 ? std::string(1, static_cast<char>('0' + d)) : "%" + std::to_string(d);
  }

  void emit(int v, std::string& out) {
    out += atom_text(v);
    // Closings first, then openings, each ordered by partner index.
    auto closures = closures_at_[static_cast<std::size_t>(v)];
    auto partner = [this, v](int b) {
      const auto& bd = g_.bonds()[static_cast<std::size_t>(b)];
      return bd.i == v ? bd.j : bd.i;
    };
    std::stable_sort(closures.begin(), closures.end(), [&](const Closure& a, const Closure& c) {
      if (a.opening != c.opening) return !a.opening;
      return partner(a.bond) < partner(c.bond);
    });
    for (const auto& cl : closures) {
      if (cl.opening) {
        int d = 1;
        while (used_digits_.count(d)) ++d;
        used_digits_.insert(d);
        digit_of_bond_[cl.bond] = d;
        out += bond_text(cl.bond) + digit_text(d);
      } else {
        const int d = digit_of_bond_.at(cl.bond);
        used_digits_.erase(d);
        out += digit_text(d);
      }
    }
    const auto& kids = children_[static_cast<std::size_t>(v)];
    for (std::size_t k = 0; k < kids.size(); ++k) {
      const bool last = k + 1 == kids.size();
      if (!last) out += '(';
      out += bond_text(kids[k].bond);
      emit(kids[k].atom, out);
      if (!last) out += ')';
    }
  }

  const MoleculeGraph& g_;
  std::size_t n_;
  std::vector<BondType> types_;
  std::vector<char> lowercase_;
  std::vector<char> nh_;
  std::vector<std::vector<Nbr>> adj_;
  std::vector<char> visited_;
  std::vector<int> parent_;
  std::map<int, int> parent_bond_;
  std::vector<std::vector<Nbr>> children_;
  std::vector<std::vector<Closure>> closures_at_;
  std::set<int> closure_seen_;
  std::set<int> used_digits_;
  std::map<int, int> digit_of_bond_;
};

std::string write_component(const MoleculeGraph& g) { return Writer(g).run(); }

// --- canonical ranking -----------------------------------------------------

// Dense ranks from arbitrary comparable keys.
template <typename Key>
std::vector<int> dense_ranks(const std::vector<Key>& keys) {
  std::vector<int> idx(keys.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    return keys[static_cast<std::size_t>(a)] < keys[static_cast<std::size_t>(b)];
  });
  std::vector<int> rank(keys.size(), 0);
  int r = 0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (k > 0 && keys[static_cast<std::size_t>(idx[k])] != keys[static_cast<std::size_t>(idx[k - 1])]) {
      ++r;
    }
    rank[static_cast<std::size_t>(idx[k])] = r;
  }
  return rank;
}

int class_count(const std::vector<int>& ranks) {
  return ranks.empty() ? 0 : *std::max_element(ranks.begin(), ranks.end()) + 1;
}

class Canonicalizer {
 public:
  explicit Canonicalizer(const MoleculeGraph& g) : g_(g), n_(g.num_atoms()) {
    adj_.resize(n_);
    for (const auto& b : g.bonds()) {
      adj_[static_cast<std::size_t>(b.i)].emplace_back(b.j, bond_class(b.type));
      adj_[static_cast<std::size_t>(b.j)].emplace_back(b.i, bond_class(b.type));
    }
  }

  std::string run() {
    // Initial invariant: element, degree, sorted incident bond classes.
    std::vector<std::vector<int>> keys(n_);
    for (std::size_t a = 0; a < n_; ++a) {
      std::vector<int> bt;
      for (const auto& [w, t] : adj_[a]) {
        (void)w;
        bt.push_back(t);
      }
      std::sort(bt.begin(), bt.end());
      keys[a] = {g_.atoms()[a].atomic_number, static_cast<int>(adj_[a].size())};
      keys[a].insert(keys[a].end(), bt.begin(), bt.end());
    }
    search(refine(dense_ranks(keys)));
    return best_ ? *best_ : std::string();
  }

 private:
  // Morgan-style refinement: a rank is split by the sorted multiset of
  // (neighbour rank, bond class) until the partition is stable.
  std::vector<int> refine(std::vector<int> ranks) const {
    int classes = class_count(ranks);
    while (true) {
      std::vector<std::pair<int, std::vector<std::pair<int, int>>>> keys(n_);
      for (std::size_t a = 0; a < n_; ++a) {
        std::vector<std::pair<int, int>> nb;
        for (const auto& [w, t] : adj_[a]) nb.emplace_back(ranks[static_cast<std::size_t>(w)], t);
        std::sort(nb.begin(), nb.end());
        keys[a] = {ranks[a], std::move(nb)};
      }
      auto next = dense_ranks(keys);
      const int next_classes = class_count(next);
      if (next_classes == classes) return next;
      classes = next_classes;
      ranks = std::move(next);
    }
  }

  void search(const std::vector<int>& ranks) {
    if (leaves_ >= kMaxLeaves) return;
    if (class_count(ranks) == static_cast<int>(n_)) {
      ++leaves_;
      std::vector<int> order(n_);
      for (std::size_t a = 0; a < n_; ++a) order[static_cast<std::size_t>(ranks[a])] = static_cast<int>(a);
      auto s = write_component(permute_atoms(g_, order));
      if (!best_ || s < *best_) best_ = std::move(s);
      return;
    }
    // Branch on the lowest tied rank.
    std::vector<int> count(n_, 0);
    for (int r : ranks) ++count[static_cast<std::size_t>(r)];
    int tied = 0;
    while (count[static_cast<std::size_t>(tied)] < 2) ++tied;
    for (std::size_t v = 0; v < n_; ++v) {
      if (ranks[v] != tied) continue;
      std::vector<std::pair<int, int>> keys(n_);
      for (std::size_t a = 0; a < n_; ++a) {
        keys[a] = {ranks[a], (ranks[a] == tied && a != v) ? 1 : 0};
      }
      search(refine(dense_ranks(keys)));
    }
  }

  // Bounds the tie-breaking search on highly symmetric graphs.
  static constexpr long kMaxLeaves = 20000;

  const MoleculeGraph& g_;
  std::size_t n_;
  std::vector<std::vector<std::pair<int, int>>> adj_;
  std::optional<std::string> best_;
  long leaves_ = 0;
};

}  // namespace

std::string write(const MoleculeGraph& g) {
  std::string out;
  for (const auto& comp : connected_components(g)) {
    if (!out.empty()) out += '.';
    out += write_component(induced_subgraph(g, comp));
  }
  return out;
}

std::string canonicalize(const MoleculeGraph& g) {
  for (const auto& a : g.atoms()) {
    if (element_symbol(a.atomic_number).empty()) {
      throw UnwritableGraph("atomic number " + std::to_string(a.atomic_number) +
                            " has no element symbol");
    }
  }
  std::vector<std::string> parts;
  for (const auto& comp : connected_components(g)) {
    parts.push_back(Canonicalizer(induced_subgraph(g, comp)).run());
  }
  std::sort(parts.begin(), parts.end());
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += '.';
    out += p;
  }
  return out;
}

}  // namespace odorgen::smiles
