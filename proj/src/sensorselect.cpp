// SPDX-License-Identifier: Apache-2.0

#include "odorgen/sensorselect.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include "odorgen/smiles.hpp"

namespace odorgen::sensors {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::set<std::string> coverable(const CoverageProblem& p) {
  std::set<std::string> out;
  for (const auto& s : p.catalog.sensors()) {
    for (const auto& d : s.detects) {
      if (p.targets.count(d)) out.insert(d);
    }
  }
  return out;
}

}  // namespace

std::string compound_key(const std::string& token) {
  const std::string t = trim(token);
  if (t.empty()) return t;
  try {
    return smiles::canonicalize(smiles::parse(t));
  } catch (const Error&) {
    return t;
  }
}

SensorCatalog::SensorCatalog(std::vector<Sensor> sensors) : sensors_(std::move(sensors)) {
  std::set<std::string> ids;
  for (const auto& s : sensors_) {
    if (s.id.empty()) throw FormatError("sensor with empty id");
    if (!ids.insert(s.id).second) throw FormatError("duplicate sensor id '" + s.id + "'");
    if (s.detects.empty()) throw FormatError("sensor '" + s.id + "' detects nothing");
    if (!(s.cost >= 0.0) || !std::isfinite(s.cost)) {
      throw FormatError("sensor '" + s.id + "' has invalid cost");
    }
  }
}

SensorCatalog SensorCatalog::from_json(const nlohmann::json& j) {
  try {
    std::vector<Sensor> list;
    for (const auto& e : j.at("sensors")) {
      Sensor s;
      s.id = e.at("id").get<std::string>();
      for (const auto& d : e.at("detects")) s.detects.insert(compound_key(d.get<std::string>()));
      s.cost = e.contains("cost") ? e.at("cost").get<double>() : 1.0;
      list.push_back(std::move(s));
    }
    return SensorCatalog(std::move(list));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed sensor catalog: ") + e.what());
  }
}

const Sensor& SensorCatalog::at(const std::string& id) const {
  for (const auto& s : sensors_) {
    if (s.id == id) return s;
  }
  throw UnknownSensorId("no sensor with id '" + id + "'");
}

bool SensorCatalog::contains(const std::string& id) const {
  return std::any_of(sensors_.begin(), sensors_.end(),
                     [&](const Sensor& s) { return s.id == id; });
}

Scenario scenario_from_json(const nlohmann::json& j) {
  try {
    Scenario sc;
    sc.name = j.value("name", "");
    sc.note = j.value("note", "");
    for (const auto& t : j.at("targets")) sc.problem.targets.insert(compound_key(t.get<std::string>()));
    if (sc.problem.targets.empty()) throw FormatError("scenario has no targets");
    sc.problem.catalog =
        SensorCatalog::from_json(j.contains("catalog") ? j.at("catalog") : j);
    if (j.contains("current")) {
      for (const auto& c : j.at("current")) sc.current.push_back(c.get<std::string>());
    }
    return sc;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed scenario: ") + e.what());
  }
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFound("cannot open scenario " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("scenario " + path.string() + " is not JSON: " + e.what());
  }
  return scenario_from_json(j);
}

nlohmann::json to_json(const SelectionResult& r) {
  return {{"chosen", r.chosen},
          {"count", r.chosen.size()},
          {"covered", r.covered},
          {"uncovered", r.uncovered},
          {"total_cost", r.total_cost}};
}

SelectionResult evaluate(const CoverageProblem& problem, std::vector<std::string> chosen) {
  SelectionResult r;
  r.chosen = std::move(chosen);
  for (const auto& id : r.chosen) {
    const Sensor& s = problem.catalog.at(id);
    r.total_cost += s.cost;
    for (const auto& d : s.detects) {
      if (problem.targets.count(d)) r.covered.insert(d);
    }
  }
  for (const auto& t : problem.targets) {
    if (!r.covered.count(t)) r.uncovered.insert(t);
  }
  return r;
}

SelectionResult greedy_cover(const CoverageProblem& problem) {
  std::set<std::string> covered;
  std::vector<std::string> chosen;
  std::vector<bool> used(problem.catalog.size(), false);
  const auto& sensors = problem.catalog.sensors();
  for (;;) {
    int best = -1;
    std::size_t best_gain = 0;
    for (std::size_t k = 0; k < sensors.size(); ++k) {
      if (used[k]) continue;
      std::size_t gain = 0;
      for (const auto& d : sensors[k].detects) {
        if (problem.targets.count(d) && !covered.count(d)) ++gain;
      }
      if (gain == 0) continue;
      if (best < 0) {
        best = static_cast<int>(k);
        best_gain = gain;
        continue;
      }
      const Sensor& b = sensors[static_cast<std::size_t>(best)];
      const double lhs = static_cast<double>(gain) * b.cost;
      const double rhs = static_cast<double>(best_gain) * sensors[k].cost;
      bool better;
      if (lhs != rhs) {
        better = lhs > rhs;
      } else if (sensors[k].cost != b.cost) {
        better = sensors[k].cost < b.cost;
      } else if (gain != best_gain) {
        better = gain > best_gain;
      } else {
        better = sensors[k].id < b.id;
      }
      if (better) {
        best = static_cast<int>(k);
        best_gain = gain;
      }
    }
    if (best < 0) break;
    const Sensor& s = sensors[static_cast<std::size_t>(best)];
    used[static_cast<std::size_t>(best)] = true;
    chosen.push_back(s.id);
    for (const auto& d : s.detects) {
      if (problem.targets.count(d)) covered.insert(d);
    }
  }
  return evaluate(problem, std::move(chosen));
}

SelectionResult exact_cover(const CoverageProblem& problem) {
  const auto& sensors = problem.catalog.sensors();
  const std::size_t m = sensors.size();
  if (m > kExactCoverLimit) {
    throw TooManySensors(std::to_string(m) + " sensors exceed the exhaustive limit of " +
                         std::to_string(kExactCoverLimit));
  }
  const std::set<std::string> goal = coverable(problem);
  std::map<std::string, int> bit;
  for (const auto& t : goal) bit.emplace(t, static_cast<int>(bit.size()));
  const bool use_bits = goal.size() <= 64;
  std::vector<std::uint64_t> masks(m, 0);
  for (std::size_t k = 0; k < m; ++k) {
    for (const auto& d : sensors[k].detects) {
      auto it = bit.find(d);
      if (use_bits && it != bit.end()) masks[k] |= std::uint64_t{1} << it->second;
    }
  }
  const std::uint64_t full =
      goal.size() == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << goal.size()) - 1;

  auto covers_all = [&](std::uint32_t subset) {
    if (use_bits) {
      std::uint64_t acc = 0;
      for (std::size_t k = 0; k < m; ++k) {
        if (subset & (1u << k)) acc |= masks[k];
      }
      return acc == full;
    }
    std::set<std::string> acc;
    for (std::size_t k = 0; k < m; ++k) {
      if (!(subset & (1u << k))) continue;
      for (const auto& d : sensors[k].detects) {
        if (goal.count(d)) acc.insert(d);
      }
    }
    return acc.size() == goal.size();
  };

  std::uint32_t best = 0;
  bool found = goal.empty();
  double best_cost = 0.0;
  int best_size = goal.empty() ? 0 : std::numeric_limits<int>::max();
  const std::uint32_t limit = m == 0 ? 1u : (1u << m);
  for (std::uint32_t subset = 1; subset < limit && !goal.empty(); ++subset) {
    const int size = __builtin_popcount(subset);
    if (size > best_size) continue;
    if (!covers_all(subset)) continue;
    double cost = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      if (subset & (1u << k)) cost += sensors[k].cost;
    }
    const bool better = !found || size < best_size || (size == best_size && cost < best_cost);
    if (better) {
      found = true;
      best = subset;
      best_size = size;
      best_cost = cost;
    }
  }
  std::vector<std::string> chosen;
  for (std::size_t k = 0; k < m; ++k) {
    if (best & (1u << k)) chosen.push_back(sensors[k].id);
  }
  return evaluate(problem, std::move(chosen));
}

SelectionResult subtractive_prune(const std::vector<std::string>& current,
                                  const CoverageProblem& problem) {
  std::vector<std::string> kept;
  for (const auto& id : current) {
    problem.catalog.at(id);
    if (std::find(kept.begin(), kept.end(), id) == kept.end()) kept.push_back(id);
  }
  const std::set<std::string> baseline = evaluate(problem, kept).covered;

  std::vector<std::string> order = kept;
  std::stable_sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
    const double ca = problem.catalog.at(a).cost, cb = problem.catalog.at(b).cost;
    if (ca != cb) return ca > cb;
    const std::size_t da = problem.catalog.at(a).detects.size();
    const std::size_t db = problem.catalog.at(b).detects.size();
    if (da != db) return da < db;
    return a < b;
  });
  for (const auto& id : order) {
    std::vector<std::string> trial;
    for (const auto& k : kept) {
      if (k != id) trial.push_back(k);
    }
    if (evaluate(problem, trial).covered == baseline) kept = std::move(trial);
  }
  return evaluate(problem, std::move(kept));
}

Expansion expand_targets(const std::vector<std::string>& user_compounds, std::size_t count,
                         const std::function<std::optional<std::string>(std::size_t)>& generate) {
  Expansion out;
  for (const auto& c : user_compounds) {
    std::string key = compound_key(c);
    if (!key.empty()) out.targets.insert(std::move(key));
  }
  for (std::size_t k = 0; k < count; ++k) {
    if (auto s = generate(k)) {
      ++out.generated_valid;
      out.targets.insert(compound_key(*s));
    }
  }
  out.zero_yield = count > 0 && out.generated_valid == 0;
  return out;
}

}  // namespace odorgen::sensors
