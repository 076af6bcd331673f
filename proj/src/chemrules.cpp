// SPDX-License-Identifier: Apache-2.0

#include "odorgen/chemrules.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <utility>

#include "odorgen/elements.hpp"

namespace odorgen::chem {

// ---------------------------------------------------------------------------
// ValenceTable

ValenceTable ValenceTable::default_table() {
  ValenceTable t;
  t.set(1, {1});
  t.set(5, {3});
  t.set(6, {4});
  t.set(7, {3, 5});
  t.set(8, {2});
  t.set(9, {1});
  t.set(14, {4});
  t.set(15, {3, 5});
  t.set(16, {2, 4, 6});
  t.set(17, {1});
  t.set(34, {2, 4, 6});
  t.set(35, {1});
  t.set(53, {1});
  return t;
}

ValenceTable ValenceTable::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("valence table must be a JSON object");
  ValenceTable t;
  for (const auto& [symbol, orders] : j.items()) {
    auto z = atomic_number_of(symbol);
    if (!z) throw UnknownElement("unknown element symbol '" + symbol + "'");
    try {
      t.set(*z, orders.get<std::vector<int>>());
    } catch (const nlohmann::json::exception&) {
      throw FormatError("valence orders for " + symbol + " must be an integer list");
    }
  }
  return t;
}

ValenceTable ValenceTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFound("cannot open valence table " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed valence table: ") + e.what());
  }
  return from_json(j);
}

void ValenceTable::set(int z, std::vector<int> orders) {
  if (z < 1 || z > kMaxAtomicNumber) throw UnknownElement("atomic number out of range");
  if (orders.empty()) throw FormatError("valence list must be nonempty");
  for (int o : orders) {
    if (o <= 0) throw FormatError("valence orders must be positive");
  }
  std::sort(orders.begin(), orders.end());
  orders.erase(std::unique(orders.begin(), orders.end()), orders.end());
  orders_[static_cast<std::size_t>(z)] = std::move(orders);
}

bool ValenceTable::contains(int z) const {
  return z >= 1 && z <= kMaxAtomicNumber && !orders_[static_cast<std::size_t>(z)].empty();
}

const std::vector<int>& ValenceTable::allowed(int z) const {
  if (!contains(z)) {
    throw UnknownElement("element " + std::to_string(z) + " is not in the valence table");
  }
  return orders_[static_cast<std::size_t>(z)];
}

// ---------------------------------------------------------------------------
// Filters

std::vector<int> check_atomic_range(std::span<const double> values) {
  std::vector<int> out;
  out.reserve(values.size());
  for (double v : values) {
    if (!std::isfinite(v)) v = 0.0;
    const double r = std::round(v);
    if (r >= 1.0 && r <= kMaxAtomicNumber) out.push_back(static_cast<int>(r));
  }
  return out;
}

std::vector<Edge> dedup_edges(std::span<const Edge> edges) {
  std::set<std::pair<int, int>> seen;
  std::vector<Edge> out;
  for (const auto& e : edges) {
    if (e.i == e.j) continue;
    if (seen.insert(std::minmax(e.i, e.j)).second) out.push_back(e);
  }
  return out;
}

BondType heuristic_bond_type(int z_i, int z_j) {
  const int delta = std::abs(z_i - z_j);
  switch (delta % 3) {
    case 0: return BondType::Single;
    case 1: return BondType::Double;
    default: return BondType::Triple;
  }
}

// ---------------------------------------------------------------------------
// Valence

namespace {

int bond_order(BondType t) {
  switch (t) {
    case BondType::Single: return 1;
    case BondType::Double: return 2;
    case BondType::Triple: return 3;
    case BondType::Aromatic: return 1;
  }
  return 1;
}

bool is_chalcogen(int z) { return z == 8 || z == 16 || z == 34; }

bool aromatic_capable(int z) { return z == 6 || z == 7 || z == 8 || z == 16; }

struct AtomBondSummary {
  int nonaromatic_sum = 0;
  int aromatic_count = 0;
  bool exocyclic_double = false;
};

std::vector<AtomBondSummary> summarize(const MoleculeGraph& g) {
  std::vector<AtomBondSummary> s(g.num_atoms());
  for (const auto& b : g.bonds()) {
    for (int a : {b.i, b.j}) {
      auto& e = s[static_cast<std::size_t>(a)];
      if (b.type == BondType::Aromatic) {
        ++e.aromatic_count;
      } else {
        e.nonaromatic_sum += bond_order(b.type);
        if (b.type == BondType::Double) e.exocyclic_double = true;
      }
    }
  }
  return s;
}

int implicit_h_for(int total, const std::vector<int>& allowed) {
  for (int v : allowed) {
    if (v >= total) return v - total;
  }
  return 0;
}

}  // namespace

std::vector<int> valence_totals(const MoleculeGraph& g) {
  const auto summary = summarize(g);
  std::vector<int> totals(g.num_atoms(), 0);
  for (std::size_t a = 0; a < g.num_atoms(); ++a) {
    const auto& s = summary[a];
    int total = s.nonaromatic_sum + s.aromatic_count;
    if (s.aromatic_count > 0 && !s.exocyclic_double &&
        !is_chalcogen(g.atoms()[a].atomic_number)) {
      total += 1;
    }
    totals[a] = total;
  }
  return totals;
}

std::string ValenceResult::detail() const {
  std::ostringstream os;
  bool first = true;
  for (const auto& a : atoms) {
    if (a.ok) continue;
    os << (first ? "" : "; ") << "atom " << a.atom << " ("
       << element_symbol(a.atomic_number) << ") has valence " << a.total_valence;
    first = false;
  }
  if (first) os << "all " << atoms.size() << " atoms within allowed valence";
  return os.str();
}

ValenceResult valence_check(const MoleculeGraph& g, const ValenceTable& table) {
  const auto totals = valence_totals(g);
  ValenceResult r;
  r.atoms.reserve(g.num_atoms());
  for (std::size_t a = 0; a < g.num_atoms(); ++a) {
    const int z = g.atoms()[a].atomic_number;
    const auto& allowed = table.allowed(z);
    AtomValence av;
    av.atom = static_cast<int>(a);
    av.atomic_number = z;
    av.total_valence = totals[a];
    av.ok = totals[a] <= allowed.back();
    av.implicit_hydrogens = av.ok ? implicit_h_for(totals[a], allowed) : 0;
    r.passed = r.passed && av.ok;
    r.atoms.push_back(av);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Kekulization

namespace {

enum class PiRole { None, Must, Optional, Donor, Exocyclic };

struct Matcher {
  const std::vector<std::vector<std::pair<int, int>>>* arom_adj;  // (nbr, bond idx)
  const std::vector<PiRole>* role;
  std::vector<int> partner_bond;  // per atom, bond index of its double or -1
  std::vector<int> must_atoms;
  std::function<bool(const std::vector<int>&)> accept;
  long budget = 1'000'000;

  bool solve(std::size_t k) {
    if (--budget < 0) return false;
    while (k < must_atoms.size() &&
           partner_bond[static_cast<std::size_t>(must_atoms[k])] >= 0) {
      ++k;
    }
    if (k == must_atoms.size()) return accept(partner_bond);
    const int a = must_atoms[k];
    for (int pass = 0; pass < 2; ++pass) {
      const PiRole want = pass == 0 ? PiRole::Must : PiRole::Optional;
      for (const auto& [w, bidx] : (*arom_adj)[static_cast<std::size_t>(a)]) {
        if ((*role)[static_cast<std::size_t>(w)] != want) continue;
        if (partner_bond[static_cast<std::size_t>(w)] >= 0) continue;
        partner_bond[static_cast<std::size_t>(a)] = bidx;
        partner_bond[static_cast<std::size_t>(w)] = bidx;
        if (solve(k + 1)) return true;
        partner_bond[static_cast<std::size_t>(a)] = -1;
        partner_bond[static_cast<std::size_t>(w)] = -1;
        if (budget < 0) return false;
      }
    }
    return false;
  }
};

struct CycleSearch {
  const std::vector<std::vector<int>>* adj;
  const std::vector<int>* electrons;
  int target = 0;
  std::vector<char> on_path;
  long budget = 200'000;
  static constexpr int kMaxRing = 12;

  // Extends a path ending at `v`; succeeds when it returns to `target`
  // through a cycle whose electron count is 4n+2.
  bool extend(int v, int length, int count, int prev) {
    if (--budget < 0) return false;
    for (int w : (*adj)[static_cast<std::size_t>(v)]) {
      if (w == prev && length == 2) continue;
      if (w == target) {
        if (length >= 3 && count % 4 == 2) return true;
        continue;
      }
      if (on_path[static_cast<std::size_t>(w)] || length >= kMaxRing) continue;
      on_path[static_cast<std::size_t>(w)] = 1;
      const bool found =
          extend(w, length + 1, count + (*electrons)[static_cast<std::size_t>(w)], v);
      on_path[static_cast<std::size_t>(w)] = 0;
      if (found) return true;
      if (budget < 0) return false;
    }
    return false;
  }
};

std::vector<std::vector<int>> aromatic_adjacency(const MoleculeGraph& g) {
  std::vector<std::vector<int>> adj(g.num_atoms());
  for (const auto& b : g.bonds()) {
    if (b.type != BondType::Aromatic) continue;
    adj[static_cast<std::size_t>(b.i)].push_back(b.j);
    adj[static_cast<std::size_t>(b.j)].push_back(b.i);
  }
  return adj;
}

std::vector<int> pi_electrons(const std::vector<std::vector<int>>& arom_adj,
                              const KekuleForm& k) {
  std::vector<int> electrons(arom_adj.size(), 0);
  for (std::size_t a = 0; a < arom_adj.size(); ++a) {
    if (arom_adj[a].empty()) continue;
    electrons[a] = k.lone_pair_donor[a] ? 2 : (k.exocyclic_pi[a] ? 0 : 1);
  }
  return electrons;
}

// First aromatic bond not on a 4n+2 cycle, or -1.
int first_unbalanced_bond(const MoleculeGraph& g, const std::vector<std::vector<int>>& arom_adj,
                          const std::vector<int>& electrons) {
  const std::size_t n = g.num_atoms();
  for (std::size_t b = 0; b < g.bonds().size(); ++b) {
    const auto& bd = g.bonds()[b];
    if (bd.type != BondType::Aromatic) continue;
    CycleSearch cs{&arom_adj, &electrons, bd.i, std::vector<char>(n, 0)};
    cs.on_path[static_cast<std::size_t>(bd.i)] = 1;
    cs.on_path[static_cast<std::size_t>(bd.j)] = 1;
    const int start =
        electrons[static_cast<std::size_t>(bd.i)] + electrons[static_cast<std::size_t>(bd.j)];
    if (!cs.extend(bd.j, 2, start, bd.i)) return static_cast<int>(b);
  }
  return -1;
}

KekuleForm form_from(const MoleculeGraph& g, const std::vector<PiRole>& role,
                     const std::vector<int>& partner_bond) {
  const std::size_t n = g.num_atoms();
  KekuleForm k;
  k.bond_types.reserve(g.bonds().size());
  for (const auto& bd : g.bonds()) {
    k.bond_types.push_back(bd.type == BondType::Aromatic ? BondType::Single : bd.type);
  }
  for (std::size_t a = 0; a < n; ++a) {
    if (partner_bond[a] >= 0) {
      k.bond_types[static_cast<std::size_t>(partner_bond[a])] = BondType::Double;
    }
  }
  k.lone_pair_donor.assign(n, 0);
  k.exocyclic_pi.assign(n, 0);
  for (std::size_t a = 0; a < n; ++a) {
    if (role[a] == PiRole::Exocyclic) k.exocyclic_pi[a] = 1;
    if ((role[a] == PiRole::Donor || role[a] == PiRole::Optional) && partner_bond[a] < 0) {
      k.lone_pair_donor[a] = 1;
    }
  }
  return k;
}

}  // namespace

std::optional<KekuleForm> kekulize(const MoleculeGraph& g) {
  const auto summary = summarize(g);
  const std::size_t n = g.num_atoms();
  std::vector<std::vector<std::pair<int, int>>> arom_bonds(n);
  for (std::size_t b = 0; b < g.bonds().size(); ++b) {
    const auto& bd = g.bonds()[b];
    if (bd.type != BondType::Aromatic) continue;
    arom_bonds[static_cast<std::size_t>(bd.i)].emplace_back(bd.j, static_cast<int>(b));
    arom_bonds[static_cast<std::size_t>(bd.j)].emplace_back(bd.i, static_cast<int>(b));
  }

  std::vector<PiRole> role(n, PiRole::None);
  for (std::size_t a = 0; a < n; ++a) {
    const auto& s = summary[a];
    if (s.aromatic_count == 0) continue;
    const int z = g.atoms()[a].atomic_number;
    if (!aromatic_capable(z)) return std::nullopt;
    const int with_pi = s.nonaromatic_sum + s.aromatic_count + 1;
    if (z == 6) {
      if (s.exocyclic_double) {
        role[a] = PiRole::Exocyclic;
      } else if (with_pi <= 4) {
        role[a] = PiRole::Must;
      } else {
        return std::nullopt;
      }
    } else if (z == 7) {
      if (s.exocyclic_double) {
        role[a] = PiRole::Exocyclic;
      } else {
        role[a] = with_pi <= 3 ? PiRole::Optional : PiRole::Donor;
      }
    } else {
      role[a] = PiRole::Donor;
    }
  }

  // Matchings are enumerated until one also satisfies the 4n+2 rule; the
  // first matching is the fallback when none does.
  const auto arom_adj = aromatic_adjacency(g);
  std::optional<KekuleForm> first;
  std::optional<KekuleForm> balanced;
  Matcher m{&arom_bonds, &role, std::vector<int>(n, -1), {}, {}, 1'000'000};
  m.accept = [&](const std::vector<int>& partner) {
    KekuleForm k = form_from(g, role, partner);
    if (first_unbalanced_bond(g, arom_adj, pi_electrons(arom_adj, k)) < 0) {
      balanced = std::move(k);
      return true;
    }
    if (!first) first = std::move(k);
    return false;
  };
  for (std::size_t a = 0; a < n; ++a) {
    if (role[a] == PiRole::Must) m.must_atoms.push_back(static_cast<int>(a));
  }
  m.solve(0);
  if (balanced) return balanced;
  return first;
}

std::optional<MoleculeGraph> kekulized_graph(const MoleculeGraph& g) {
  auto k = kekulize(g);
  if (!k) return std::nullopt;
  MoleculeGraph out(g.atoms());
  for (std::size_t b = 0; b < g.bonds().size(); ++b) {
    out.add_bond(g.bonds()[b].i, g.bonds()[b].j, k->bond_types[b]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Aromaticity and formal charge

AromaticityResult aromaticity_and_charge_check(const MoleculeGraph& g,
                                               const ValenceTable& table) {
  AromaticityResult r;
  const std::size_t n = g.num_atoms();

  std::vector<int> order_totals(n, 0);
  bool has_aromatic = false;
  for (const auto& b : g.bonds()) has_aromatic = has_aromatic || b.type == BondType::Aromatic;

  std::optional<KekuleForm> kek;
  if (has_aromatic) {
    const auto arom_adj = aromatic_adjacency(g);
    for (std::size_t a = 0; a < n; ++a) {
      if (!arom_adj[a].empty() && !aromatic_capable(g.atoms()[a].atomic_number)) {
        r.passed = false;
        r.detail = "atom " + std::to_string(a) + " (" +
                   std::string(element_symbol(g.atoms()[a].atomic_number)) +
                   ") cannot be aromatic";
        return r;
      }
    }
    kek = kekulize(g);
    if (!kek) {
      r.passed = false;
      r.detail = "aromatic system has no alternating single/double assignment";
      return r;
    }
    const int bad = first_unbalanced_bond(g, arom_adj, pi_electrons(arom_adj, *kek));
    if (bad >= 0) {
      const auto& bd = g.bonds()[static_cast<std::size_t>(bad)];
      r.passed = false;
      r.detail = "aromatic bond " + std::to_string(bd.i) + "-" + std::to_string(bd.j) +
                 " is not on a 4n+2 ring";
      return r;
    }
  }

  for (std::size_t b = 0; b < g.bonds().size(); ++b) {
    const auto& bd = g.bonds()[b];
    const BondType t = kek ? kek->bond_types[b] : bd.type;
    order_totals[static_cast<std::size_t>(bd.i)] += bond_order(t);
    order_totals[static_cast<std::size_t>(bd.j)] += bond_order(t);
  }

  r.formal_charges.assign(n, 0);
  for (std::size_t a = 0; a < n; ++a) {
    const int z = g.atoms()[a].atomic_number;
    const auto ve = valence_electrons(z);
    if (!ve || !table.contains(z)) {
      r.passed = false;
      r.detail = "formal charge undefined for atom " + std::to_string(a);
      return r;
    }
    const auto& allowed = table.allowed(z);
    const int total = order_totals[a];
    const int target = total <= allowed.back() ? total + implicit_h_for(total, allowed)
                                               : allowed.back();
    const int hydrogens = std::max(0, target - total);
    const int nonbonded = std::max(0, *ve - target);
    r.formal_charges[a] = *ve - nonbonded - (total + hydrogens);
  }
  for (std::size_t a = 0; a < n; ++a) {
    if (r.formal_charges[a] != 0) {
      r.passed = false;
      r.detail = "atom " + std::to_string(a) + " has formal charge " +
                 std::to_string(r.formal_charges[a]);
      return r;
    }
  }
  r.detail = has_aromatic ? "aromatic rings balanced, all formal charges zero"
                          : "no aromatic bonds, all formal charges zero";
  return r;
}

// ---------------------------------------------------------------------------
// Cascade

std::string ValidationReport::failed_stage() const {
  for (const auto& s : stages) {
    if (!s.passed) return s.stage;
  }
  return {};
}

nlohmann::json to_json(const ValidationReport& r) {
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& s : r.stages) {
    stages.push_back({{"stage", s.stage}, {"passed", s.passed}, {"detail", s.detail}});
  }
  return {{"stages", std::move(stages)},
          {"final_verdict", r.final_verdict},
          {"fragments", r.fragments}};
}

SanitizeResult sanitize(const RawMolecule& raw, const ValenceTable& table) {
  ValidationReport report;
  auto record = [&report](const char* stage, bool passed, std::string detail) {
    report.stages.push_back({stage, passed, std::move(detail)});
    return passed;
  };
  auto finish = [&report](MoleculeGraph g) {
    while (report.stages.size() < kCascadeStages.size()) {
      report.stages.push_back({kCascadeStages[report.stages.size()], false, "skipped"});
    }
    report.final_verdict =
        std::all_of(report.stages.begin(), report.stages.end(),
                    [](const StageResult& s) { return s.passed; });
    report.fragments = static_cast<int>(connected_components(g).size());
    return SanitizeResult{std::move(g), std::move(report)};
  };

  std::vector<Atom> atoms = raw.atoms;
  for (auto& a : atoms) {
    for (double& c : a.position) {
      if (!std::isfinite(c)) c = 0.0;
    }
  }

  // Stage 1: atomic range.
  std::vector<int> bad;
  for (std::size_t a = 0; a < atoms.size(); ++a) {
    const int z = atoms[a].atomic_number;
    if (z < 1 || z > kMaxAtomicNumber) bad.push_back(static_cast<int>(a));
  }
  bool ok;
  if (atoms.empty()) {
    ok = record(kCascadeStages[0], false, "empty molecule");
  } else if (!bad.empty()) {
    ok = record(kCascadeStages[0], false,
                std::to_string(bad.size()) + " atom(s) outside atomic number range [1,118]");
  } else {
    ok = record(kCascadeStages[0], true, std::to_string(atoms.size()) + " atoms in range");
  }

  // Stage 2 runs regardless so that the returned graph is always deduped.
  std::vector<Edge> in_range;
  std::size_t dropped_index = 0;
  for (const auto& e : raw.edges) {
    const auto na = static_cast<int>(atoms.size());
    if (e.i < 0 || e.j < 0 || e.i >= na || e.j >= na) {
      ++dropped_index;
      continue;
    }
    in_range.push_back(e);
  }
  const auto deduped = dedup_edges(in_range);
  MoleculeGraph g(std::move(atoms));
  for (const auto& e : deduped) g.add_bond(e.i, e.j, e.type);
  if (!ok) return finish(std::move(g));

  const std::size_t removed = in_range.size() - deduped.size();
  std::string dedup_detail = "removed " + std::to_string(removed) +
                             " duplicate or self-loop edge(s)";
  if (dropped_index > 0) {
    dedup_detail += ", " + std::to_string(dropped_index) + " edge(s) with invalid endpoints";
  }
  record(kCascadeStages[1], true, std::move(dedup_detail));

  // Stage 3: valence.
  try {
    const auto v = valence_check(g, table);
    if (!record(kCascadeStages[2], v.passed, v.detail())) return finish(std::move(g));
  } catch (const UnknownElement& e) {
    record(kCascadeStages[2], false, e.what());
    return finish(std::move(g));
  }

  // Stage 4: aromatic rings and formal charges.
  const auto ar = aromaticity_and_charge_check(g, table);
  if (!record(kCascadeStages[3], ar.passed, ar.detail)) return finish(std::move(g));

  // Stage 5: the aromatic form is kept; kekulization only has to exist.
  const auto kek = kekulize(g);
  std::size_t aromatic = 0;
  for (const auto& b : g.bonds()) aromatic += b.type == BondType::Aromatic;
  if (aromatic == 0) {
    record(kCascadeStages[4], true, "no aromatic bonds");
  } else if (kek) {
    record(kCascadeStages[4], true,
           "kekule form found for " + std::to_string(aromatic) + " aromatic bond(s)");
  } else {
    record(kCascadeStages[4], false, "cannot kekulize aromatic system");
  }
  return finish(std::move(g));
}

SanitizeResult sanitize(const MoleculeGraph& g, const ValenceTable& table) {
  RawMolecule raw;
  raw.atoms = g.atoms();
  for (const auto& b : g.bonds()) raw.edges.push_back({b.i, b.j, b.type});
  return sanitize(raw, table);
}

}  // namespace odorgen::chem
