// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "odorgen/errors.hpp"

namespace odorgen::sensors {

ODORGEN_DEFINE_ERROR(TooManySensors);
ODORGEN_DEFINE_ERROR(UnknownSensorId);

inline constexpr std::size_t kExactCoverLimit = 20;

struct Sensor {
  std::string id;
  std::set<std::string> detects;  // compound keys
  double cost = 1.0;
};

/// Unique ids, nonempty detection sets, nonnegative finite costs.
class SensorCatalog {
 public:
  SensorCatalog() = default;
  /// Throws FormatError on an invariant violation.
  explicit SensorCatalog(std::vector<Sensor> sensors);

  /// {"sensors":[{"id":..,"detects":[..],"cost":..}]}. Detection entries are
  /// normalized with compound_key(). Throws FormatError.
  static SensorCatalog from_json(const nlohmann::json& j);

  const std::vector<Sensor>& sensors() const { return sensors_; }
  std::size_t size() const { return sensors_.size(); }
  /// Throws UnknownSensorId.
  const Sensor& at(const std::string& id) const;
  bool contains(const std::string& id) const;

 private:
  std::vector<Sensor> sensors_;
};

/// Canonical SMILES when the token parses as a molecule, otherwise the
/// trimmed token itself.
std::string compound_key(const std::string& token);

struct CoverageProblem {
  std::set<std::string> targets;
  SensorCatalog catalog;
};

struct Scenario {
  std::string name;
  std::string note;
  CoverageProblem problem;
  std::vector<std::string> current;  // installed sensors, for subtractive mode
};

/// {"name", "note", "targets":[..], "current":[..], "catalog":{"sensors":[..]}}
/// or with "sensors" at top level. Throws FormatError, FileNotFound.
Scenario scenario_from_json(const nlohmann::json& j);
Scenario load_scenario(const std::filesystem::path& path);

struct SelectionResult {
  std::vector<std::string> chosen;
  std::set<std::string> covered;
  std::set<std::string> uncovered;
  double total_cost = 0.0;
};

nlohmann::json to_json(const SelectionResult& r);

/// Fills covered/uncovered/total_cost for a chosen set.
SelectionResult evaluate(const CoverageProblem& problem, std::vector<std::string> chosen);

/// Greedy by newly covered targets per unit cost; ties prefer lower cost,
/// then lexicographically smaller id. Zero-cost sensors that add coverage
/// rank first.
SelectionResult greedy_cover(const CoverageProblem& problem);

/// Minimum cardinality, then minimum cost, over all subsets that reach the
/// coverable target set. Throws TooManySensors above kExactCoverLimit.
SelectionResult exact_cover(const CoverageProblem& problem);

/// Drops sensors, most expensive first, whenever the remainder keeps the
/// coverage of `current`. Equal costs try the narrower detector first, then
/// the smaller id. Throws UnknownSensorId.
SelectionResult subtractive_prune(const std::vector<std::string>& current,
                                  const CoverageProblem& problem);

/// User compounds plus the valid outputs of `generate(k)` for k < count,
/// deduplicated by compound_key(). `generate` returns a SMILES or nothing.
struct Expansion {
  std::set<std::string> targets;
  std::size_t generated_valid = 0;
  bool zero_yield = false;
};
Expansion expand_targets(const std::vector<std::string>& user_compounds, std::size_t count,
                         const std::function<std::optional<std::string>(std::size_t)>& generate);

}  // namespace odorgen::sensors
