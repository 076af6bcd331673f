// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "odorgen/chemrules.hpp"
#include "odorgen/dataio.hpp"
#include "odorgen/diffusion.hpp"
#include "odorgen/elements.hpp"
#include "odorgen/generator.hpp"
#include "odorgen/params.hpp"
#include "odorgen/sensorselect.hpp"
#include "odorgen/smiles.hpp"
#include "svg_plot.hpp"

namespace odorgen::cli {

namespace {

using nlohmann::json;

/// Bad user input: mapped to exit code 2.
ODORGEN_DEFINE_ERROR(BadInput);

constexpr int kMinSteps = 800;
constexpr int kMaxSteps = 1200;

bool quiet() {
  const char* level = std::getenv("ODORGEN_LOG_LEVEL");
  return level != nullptr && (std::string(level) == "quiet" || std::string(level) == "error");
}

struct Logger {
  std::ostream& err;
  template <typename T>
  Logger& operator<<(const T& v) {
    if (!quiet()) err << v;
    return *this;
  }
};

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFound("cannot open " + path);
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw FormatError(path + " is not valid JSON: " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw BadInput("cannot write " + path);
  out << text;
}

std::vector<int> parse_allowlist(const std::vector<std::string>& symbols) {
  std::vector<int> out;
  for (const auto& s : symbols) {
    auto z = atomic_number_of(s);
    if (!z) throw BadInput("unknown element '" + s + "' in allowlist");
    if (std::find(out.begin(), out.end(), *z) == out.end()) out.push_back(*z);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> split_symbols(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::string> symbols_of(const std::vector<int>& zs) {
  std::vector<std::string> out;
  for (int z : zs) out.emplace_back(element_symbol(z));
  return out;
}

void check_steps(int steps) {
  if (steps < kMinSteps || steps > kMaxSteps) {
    throw BadInput("diffusion steps must lie in [" + std::to_string(kMinSteps) + ", " +
                   std::to_string(kMaxSteps) + "], got " + std::to_string(steps));
  }
}

// ---------------------------------------------------------------------------

struct IngestOptions {
  std::string data;
  std::string out;
  std::uint64_t seed = 0;
};

int cmd_ingest(const IngestOptions& o, std::ostream& out, Logger& log) {
  data::Dataset ds = data::load_csv(o.data, o.seed);
  json j;
  j["molecules"] = ds.molecules.size();
  j["skipped"] = ds.skipped;
  j["skip_reasons"] = ds.skip_reasons;
  j["vocabulary"] = ds.vocab.terms();
  if (ds.molecules.size() >= 5) {
    data::DataSplit split = data::split_80_20(ds.molecules, o.seed);
    j["split"] = {{"train", split.train.size()}, {"test", split.test.size()}, {"seed", o.seed}};
  }
  json mols = json::array();
  for (const auto& m : ds.molecules) {
    mols.push_back({{"smiles", m.smiles},
                    {"canonical", smiles::canonicalize(m.graph)},
                    {"descriptors", m.descriptors},
                    {"atoms", m.graph.num_atoms()}});
  }
  j["entries"] = mols;
  const std::string text = j.dump(2) + "\n";
  if (o.out.empty()) {
    out << text;
  } else {
    write_text(o.out, text);
  }
  log << "ingested " << ds.molecules.size() << " molecules, skipped " << ds.skipped
      << ", vocabulary size " << ds.vocab.size() << "\n";
  return kOk;
}

struct TrainOptions {
  std::string data;
  std::string config;
  std::string out;
  std::string metrics;
  std::optional<int> epochs;
  std::optional<int> steps;
  std::optional<double> tau;
  std::optional<double> lr;
  std::optional<std::uint64_t> seed;
  bool constrained = false;
  std::string allowlist;
};

diffusion::TrainConfig train_config_from_json(const json& j) {
  diffusion::TrainConfig c;
  try {
    c.T = j.value("T", c.T);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.tau = j.value("tau", c.tau);
    c.lr = j.value("lr", c.lr);
    c.constrained = j.value("constrained", c.constrained);
    c.seed = j.value("seed", c.seed);
    if (j.contains("allowlist")) {
      c.allowlist = parse_allowlist(j.at("allowlist").get<std::vector<std::string>>());
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad training config: ") + e.what());
  }
  return c;
}

int cmd_train(const TrainOptions& o, std::ostream& out, Logger& log) {
  diffusion::TrainConfig cfg;
  if (!o.config.empty()) cfg = train_config_from_json(read_json_file(o.config));
  if (o.epochs) cfg.epochs = *o.epochs;
  if (o.steps) cfg.T = *o.steps;
  if (o.tau) cfg.tau = *o.tau;
  if (o.lr) cfg.lr = *o.lr;
  if (o.seed) cfg.seed = *o.seed;
  if (o.constrained) cfg.constrained = true;
  if (!o.allowlist.empty()) cfg.allowlist = parse_allowlist(split_symbols(o.allowlist));
  if (cfg.constrained && cfg.allowlist.empty()) cfg.allowlist = gen::default_allowlist();
  check_steps(cfg.T);
  if (cfg.epochs < 0) throw BadInput("epochs must be nonnegative");
  if (!(cfg.tau > 0.0)) throw BadInput("tau must be positive");
  if (!(cfg.lr > 0.0)) throw BadInput("learning rate must be positive");
  if (cfg.batch_size == 0) throw BadInput("batch size must be positive");

  data::Dataset ds = data::load_csv(o.data, cfg.seed);
  data::DataSplit split = data::split_80_20(ds.molecules, cfg.seed);
  log << "training on " << split.train.size() << " molecules (" << split.test.size()
      << " held out), " << cfg.epochs << " epochs, T=" << cfg.T << "\n";

  auto examples = data::training_examples(split.train, ds.vocab);
  diffusion::TrainResult result =
      diffusion::train(examples, ds.vocab.size(), cfg, [&](const diffusion::EpochMetrics& m) {
        if (m.epoch == 1 || m.epoch % 50 == 0 || m.epoch == cfg.epochs) {
          log << "epoch " << m.epoch << " total " << m.total_loss << " (mse " << m.mse_loss
              << ", ce " << m.ce_loss << ")\n";
        }
      });

  std::vector<int> counts;
  for (const auto& m : split.train) {
    if (cfg.constrained) {
      const auto& atoms = m.graph.atoms();
      const bool ok = std::all_of(atoms.begin(), atoms.end(), [&](const Atom& a) {
        return std::find(cfg.allowlist.begin(), cfg.allowlist.end(), a.atomic_number) !=
               cfg.allowlist.end();
      });
      if (!ok) continue;
    }
    counts.push_back(static_cast<int>(m.graph.num_atoms()));
  }
  std::vector<std::string> corpus;
  for (const auto& m : ds.molecules) corpus.push_back(smiles::canonicalize(m.graph));
  std::sort(corpus.begin(), corpus.end());
  corpus.erase(std::unique(corpus.begin(), corpus.end()), corpus.end());
  std::vector<std::string> test_smiles;
  for (const auto& m : split.test) test_smiles.push_back(m.smiles);

  json meta = {
      {"vocabulary", ds.vocab.terms()},
      {"T", cfg.T},
      {"epochs", cfg.epochs},
      {"batch_size", cfg.batch_size},
      {"tau", cfg.tau},
      {"lr", cfg.lr},
      {"seed", cfg.seed},
      {"constrained", cfg.constrained},
      {"allowlist", symbols_of(cfg.allowlist)},
      {"atom_counts", counts},
      {"corpus", corpus},
      {"test_smiles", test_smiles},
      {"examples_used", result.examples_used},
  };
  num::save_checkpoint(o.out, result.params, meta);
  const std::string metrics_path = o.metrics.empty() ? o.out + ".metrics.csv" : o.metrics;
  diffusion::write_metrics_csv(metrics_path, result.metrics);
  json summary = {{"checkpoint", o.out},
                  {"metrics", metrics_path},
                  {"epochs", result.metrics.size()},
                  {"examples_used", result.examples_used}};
  if (!result.metrics.empty()) summary["final_total_loss"] = result.metrics.back().total_loss;
  out << summary.dump() << "\n";
  return kOk;
}

struct GenerateOptions {
  std::string checkpoint;
  std::string query;
  std::string out;
  std::string summary;
  std::optional<int> n;
  std::optional<int> steps;
  std::optional<double> tau;
  std::optional<std::uint64_t> seed;
  std::optional<int> n_atoms;
  bool constrained = false;
  bool unconstrained = false;
  bool heuristic_bonds = false;
  std::string allowlist;
};

int cmd_generate(const GenerateOptions& o, std::ostream& out, Logger& log) {
  json meta;
  num::ParamStore params = num::load_checkpoint(o.checkpoint, &meta);
  const json query = read_json_file(o.query);
  std::vector<std::string> descriptors;
  int count = 10;
  try {
    descriptors = query.at("descriptors").get<std::vector<std::string>>();
    count = query.value("count", count);
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad query: ") + e.what());
  }
  if (o.n) count = *o.n;
  if (count < 0) throw BadInput("sample count must be nonnegative");

  data::OdourVocabulary vocab;
  gen::GenerationConfig cfg;
  try {
    vocab = data::OdourVocabulary::from_terms(meta.at("vocabulary").get<std::vector<std::string>>());
    cfg.T = meta.value("T", cfg.T);
    cfg.atom_count_pool = meta.value("atom_counts", std::vector<int>{});
    const bool trained_constrained = meta.value("constrained", false);
    cfg.mode = trained_constrained ? gen::Mode::Constrained : gen::Mode::Unconstrained;
    const auto allow = meta.value("allowlist", std::vector<std::string>{});
    if (!allow.empty()) cfg.allowlist = parse_allowlist(allow);
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint metadata incomplete: ") + e.what());
  }
  if (o.constrained && o.unconstrained) {
    throw BadInput("--constrained and --unconstrained are mutually exclusive");
  }
  if (o.constrained) cfg.mode = gen::Mode::Constrained;
  if (o.unconstrained) cfg.mode = gen::Mode::Unconstrained;
  if (!o.allowlist.empty()) cfg.allowlist = parse_allowlist(split_symbols(o.allowlist));
  if (o.steps) cfg.T = *o.steps;
  check_steps(cfg.T);
  if (o.tau) cfg.tau = *o.tau;
  if (o.n_atoms) cfg.n_atoms = *o.n_atoms;
  if (o.heuristic_bonds) cfg.bond_source = gen::BondSource::Heuristic;
  const std::uint64_t seed = o.seed.value_or(meta.value("seed", std::uint64_t{0}));
  cfg.seed = seed;
  try {
    gen::validate_config(cfg);
  } catch (const gen::InvalidConfig& e) {
    throw BadInput(e.what());
  }

  data::MultiHot y = data::multi_hot(descriptors, vocab);
  if (y.unknown > 0) {
    log << "warning: " << y.unknown << " descriptor(s) not in the training vocabulary were dropped\n";
  }
  gen::Corpus corpus;
  for (const auto& s : meta.value("corpus", std::vector<std::string>{})) corpus.insert_canonical(s);

  std::ostringstream lines;
  std::vector<gen::GenerationReport> reports;
  for (int k = 0; k < count; ++k) {
    gen::GenerationConfig c = cfg;
    c.seed = gen::sample_seed(seed, static_cast<std::uint64_t>(k));
    reports.push_back(gen::sample(y.y, c, params, &corpus));
    lines << gen::to_json(reports.back()).dump() << "\n";
  }
  write_text(o.out, lines.str());

  json summary = gen::summary_json(reports, cfg);
  summary["seed"] = seed;
  summary["descriptors"] = descriptors;
  summary["unknown_descriptors"] = y.unknown;
  if (!o.summary.empty()) write_text(o.summary, summary.dump(2) + "\n");
  out << summary.dump() << "\n";
  if (!reports.empty()) {
    log << gen::format_table1({{std::string("odorgen (") + std::string(gen::to_string(cfg.mode)) + ")",
                                gen::validity_rate(reports), reports.size()}});
  }
  return kOk;
}

struct ValidateOptions {
  std::string input;
};

int cmd_validate(const ValidateOptions& o, std::ostream& out, Logger& log) {
  std::ifstream in(o.input);
  if (!in) throw FileNotFound("cannot open " + o.input);
  std::string line;
  std::size_t total = 0, failed = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto a = line.find_first_not_of(" \t");
    if (a == std::string::npos) continue;
    const std::string text = line.substr(a, line.find_last_not_of(" \t") - a + 1);
    ++total;
    json j = {{"input", text}};
    try {
      MoleculeGraph g = smiles::parse(text);
      chem::SanitizeResult sr = chem::sanitize(g);
      j["valid"] = sr.report.final_verdict;
      j["report"] = chem::to_json(sr.report);
      if (sr.report.final_verdict) {
        j["canonical"] = smiles::canonicalize(sr.graph);
      } else {
        j["failed_stage"] = sr.report.failed_stage();
      }
    } catch (const Error& e) {
      j["valid"] = false;
      j["failed_stage"] = "parse";
      j["error"] = e.what();
    }
    if (!j["valid"].get<bool>()) ++failed;
    out << j.dump() << "\n";
  }
  log << total << " molecule(s), " << failed << " failed\n";
  return failed == 0 ? kOk : kValidationFailed;
}

struct SelectOptions {
  std::string scenario;
  std::string mode = "add";
  bool exact = false;
  std::vector<std::string> generated;
  std::string current;
};

int cmd_select(const SelectOptions& o, std::ostream& out, Logger& log) {
  sensors::Scenario sc = sensors::load_scenario(o.scenario);
  std::size_t added = 0;
  for (const auto& path : o.generated) {
    std::ifstream in(path);
    if (!in) throw FileNotFound("cannot open " + path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        json r = json::parse(line);
        if (r.value("valid", false) && r.contains("smiles") && r["smiles"].is_string()) {
          if (sc.problem.targets.insert(sensors::compound_key(r["smiles"].get<std::string>())).second) {
            ++added;
          }
        }
      } catch (const json::exception& e) {
        throw FormatError(path + ": bad report line: " + e.what());
      }
    }
  }
  if (added > 0) log << added << " generated compound(s) added to targets\n";

  sensors::SelectionResult result;
  if (o.mode == "add") {
    result = o.exact ? sensors::exact_cover(sc.problem) : sensors::greedy_cover(sc.problem);
  } else if (o.mode == "subtract") {
    std::vector<std::string> current = sc.current;
    if (!o.current.empty()) current = split_symbols(o.current);
    if (current.empty()) {
      for (const auto& s : sc.problem.catalog.sensors()) current.push_back(s.id);
    }
    result = sensors::subtractive_prune(current, sc.problem);
  } else {
    throw BadInput("mode must be 'add' or 'subtract'");
  }
  json j = sensors::to_json(result);
  j["mode"] = o.mode;
  j["exact"] = o.exact && o.mode == "add";
  j["catalog_size"] = sc.problem.catalog.size();
  j["targets"] = sc.problem.targets;
  if (!sc.name.empty()) j["scenario"] = sc.name;
  out << j.dump(2) << "\n";
  log << "selected " << result.chosen.size() << " of " << sc.problem.catalog.size()
      << " sensors, " << result.uncovered.size() << " target(s) uncovered\n";
  return kOk;
}

struct PlotOptions {
  std::string metrics;
  std::string out;
};

int cmd_plot(const PlotOptions& o, std::ostream& out, Logger&) {
  auto rows = diffusion::read_metrics_csv(o.metrics);
  write_text(o.out, render_loss_svg(rows));
  out << json{{"svg", o.out}, {"points", rows.size()}}.dump() << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Logger log{err};
  CLI::App app{"odorgen: descriptor-conditioned molecule diffusion and sensor selection"};
  app.require_subcommand(1);

  IngestOptions ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Load a dataset and report its vocabulary and split");
  c_ingest->add_option("--data", ingest.data, "CSV of smiles,desc1;desc2")->required();
  c_ingest->add_option("--out", ingest.out, "Write the JSON report here instead of stdout");
  c_ingest->add_option("--seed", ingest.seed, "Split and embedding seed");

  TrainOptions train;
  auto* c_train = app.add_subcommand("train", "Train the denoiser");
  c_train->add_option("--data", train.data, "Training CSV")->required();
  c_train->add_option("--config", train.config, "Training config JSON");
  c_train->add_option("--out", train.out, "Checkpoint path")->required();
  c_train->add_option("--metrics", train.metrics, "Metrics CSV path");
  c_train->add_option("--epochs", train.epochs);
  c_train->add_option("--steps", train.steps, "Diffusion steps T (800-1200)");
  c_train->add_option("--tau", train.tau);
  c_train->add_option("--lr", train.lr);
  c_train->add_option("--seed", train.seed);
  c_train->add_flag("--constrained", train.constrained, "Train only on allowlisted molecules");
  c_train->add_option("--allowlist", train.allowlist, "Comma-separated element symbols");

  GenerateOptions generate;
  auto* c_gen = app.add_subcommand("generate", "Sample molecules for a descriptor query");
  c_gen->add_option("--checkpoint", generate.checkpoint)->required();
  c_gen->add_option("--query", generate.query, "{\"descriptors\":[..],\"count\":n}")->required();
  c_gen->add_option("--out", generate.out, "JSONL of generation reports")->required();
  c_gen->add_option("--summary", generate.summary, "Summary JSON path");
  c_gen->add_option("-n,--count", generate.n, "Number of samples");
  c_gen->add_option("--steps", generate.steps, "Diffusion steps T (800-1200)");
  c_gen->add_option("--tau", generate.tau, "Bond temperature");
  c_gen->add_option("--seed", generate.seed);
  c_gen->add_option("--n-atoms", generate.n_atoms, "Fixed atom count per sample");
  c_gen->add_flag("--constrained", generate.constrained);
  c_gen->add_flag("--unconstrained", generate.unconstrained);
  c_gen->add_flag("--heuristic-bonds", generate.heuristic_bonds,
                  "Bond types from atomic numbers instead of the classifier");
  c_gen->add_option("--allowlist", generate.allowlist, "Comma-separated element symbols");

  ValidateOptions validate;
  auto* c_val = app.add_subcommand("validate", "Run the validation cascade on SMILES lines");
  c_val->add_option("input", validate.input, "File with one SMILES per line")->required();

  SelectOptions select;
  auto* c_sel = app.add_subcommand("select-sensors", "Choose a covering sensor set");
  c_sel->add_option("--scenario", select.scenario)->required();
  c_sel->add_option("--mode", select.mode, "add or subtract")
      ->check(CLI::IsMember({"add", "subtract"}));
  c_sel->add_flag("--exact", select.exact, "Exhaustive optimum (at most 20 sensors)");
  c_sel->add_option("--generated", select.generated, "Generation JSONL whose valid SMILES join the targets");
  c_sel->add_option("--current", select.current, "Installed sensor ids for subtract mode");

  PlotOptions plot;
  auto* c_plot = app.add_subcommand("metrics-plot", "Render a metrics CSV as an SVG loss chart");
  c_plot->add_option("--metrics", plot.metrics)->required();
  c_plot->add_option("--out", plot.out)->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kBadInput;
  }

  try {
    if (c_ingest->parsed()) return cmd_ingest(ingest, out, log);
    if (c_train->parsed()) return cmd_train(train, out, log);
    if (c_gen->parsed()) return cmd_generate(generate, out, log);
    if (c_val->parsed()) return cmd_validate(validate, out, log);
    if (c_sel->parsed()) return cmd_select(select, out, log);
    if (c_plot->parsed()) return cmd_plot(plot, out, log);
    err << "error: no subcommand\n";
    return kBadInput;
  } catch (const diffusion::DivergedLoss& e) {
    err << "error: DivergedLoss: " << e.what() << "\n";
    return kDiverged;
  } catch (const BadInput& e) {
    err << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const FileNotFound& e) {
    err << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const EmptyDataset& e) {
    err << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const data::TooFewSamples& e) {
    err << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const diffusion::LengthMismatch& e) {
    err << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const sensors::UnknownSensorId& e) {
    err << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const sensors::TooManySensors& e) {
    err << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const gen::UntrainedParams& e) {
    err << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const num::UnknownParam& e) {
    err << "error: checkpoint does not match the model: " << e.what() << "\n";
    return kBadInput;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternal;
  } catch (...) {
    err << "internal error\n";
    return kInternal;
  }
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int k = 1; k < argc; ++k) args.emplace_back(argv[k]);
  return run(args, out, err);
}

}  // namespace odorgen::cli
