// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using odorgen::cli::run;

namespace {

const fs::path kData = ODORGEN_DATA_DIR;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome call(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("odorgen_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(dir_ / name) << text;
    return path(name);
  }

  static std::string read(const std::string& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  }

  std::string small_dataset() const {
    return write("small.csv",
                 "smiles,descriptors\n"
                 "CCO,alcoholic;ethereal\n"
                 "CC(=O)O,sour\n"
                 "CCCO,alcoholic\n"
                 "c1ccccc1,sweet\n"
                 "CC(C)O,alcoholic\n"
                 "CCOC(C)=O,fruity\n");
  }

  fs::path dir_;
};

std::size_t count_lines(const std::string& text) {
  std::size_t n = 0;
  for (char c : text) n += c == '\n';
  return n;
}

}  // namespace

TEST_F(CliTest, NoArgumentsIsBadInput) {
  EXPECT_EQ(call({}).code, odorgen::cli::kBadInput);
  EXPECT_EQ(call({"frobnicate"}).code, odorgen::cli::kBadInput);
}

TEST_F(CliTest, HelpExitsZero) { EXPECT_EQ(call({"--help"}).code, odorgen::cli::kOk); }

TEST_F(CliTest, IngestReportsBundledFixture) {
  auto r = call({"ingest", "--data", (kData / "mini_scents.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  json j = json::parse(r.out);
  EXPECT_GE(j["molecules"].get<int>(), 200);
  EXPECT_EQ(j["skipped"].get<int>(), 0);
  EXPECT_EQ(j["split"]["train"].get<int>() + j["split"]["test"].get<int>(),
            j["molecules"].get<int>());
}

TEST_F(CliTest, IngestMissingFileIsBadInput) {
  EXPECT_EQ(call({"ingest", "--data", path("absent.csv")}).code, 2);
}

TEST_F(CliTest, TrainWritesCheckpointAndMetrics) {
  auto r = call({"train", "--data", small_dataset(), "--out", path("ck.json"), "--epochs", "3",
                 "--steps", "1000"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(path("ck.json")));
  const std::string csv = read(path("ck.json") + ".metrics.csv");
  EXPECT_EQ(csv.rfind("epoch,mse_loss,ce_loss,total_loss\n", 0), 0u);
  EXPECT_EQ(count_lines(csv), 4u);
  EXPECT_EQ(json::parse(r.out)["epochs"].get<int>(), 3);
}

TEST_F(CliTest, TrainWithBundledConfig) {
  auto r = call({"train", "--data", small_dataset(), "--config",
                 (kData / "configs" / "default_train.json").string(), "--epochs", "2", "--out",
                 path("ck.json"), "--metrics", path("m.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_lines(read(path("m.csv"))), 3u);
}

TEST_F(CliTest, TrainRejectsStepsOutsideRange) {
  for (const char* steps : {"799", "1201", "10"}) {
    auto r = call({"train", "--data", small_dataset(), "--out", path("ck.json"), "--epochs", "1",
                   "--steps", steps});
    EXPECT_EQ(r.code, 2) << steps;
    EXPECT_NE(r.err.find("800"), std::string::npos);
  }
  for (const char* steps : {"800", "1200"}) {
    auto r = call({"train", "--data", small_dataset(), "--out", path("ck.json"), "--epochs", "1",
                   "--steps", steps});
    EXPECT_EQ(r.code, 0) << steps << r.err;
  }
}

TEST_F(CliTest, TrainMissingDatasetIsBadInput) {
  EXPECT_EQ(call({"train", "--data", path("none.csv"), "--out", path("ck.json")}).code, 2);
}

TEST_F(CliTest, TrainMalformedConfigIsBadInput) {
  auto cfg = write("cfg.json", "{\"epochs\": \"many\"}");
  EXPECT_EQ(
      call({"train", "--data", small_dataset(), "--config", cfg, "--out", path("ck.json")}).code,
      2);
  auto broken = write("broken.json", "{");
  EXPECT_EQ(
      call({"train", "--data", small_dataset(), "--config", broken, "--out", path("ck.json")})
          .code,
      2);
}

TEST_F(CliTest, TrainDivergenceExitsThree) {
  auto r = call({"train", "--data", small_dataset(), "--out", path("ck.json"), "--epochs", "200",
                 "--lr", "1000"});
  EXPECT_EQ(r.code, 3) << r.err;
  EXPECT_NE(r.err.find("DivergedLoss"), std::string::npos);
}

TEST_F(CliTest, GenerateWritesOneLinePerSample) {
  ASSERT_EQ(call({"train", "--data", small_dataset(), "--out", path("ck.json"), "--epochs", "2"})
                .code,
            0);
  auto q = write("q.json", R"({"descriptors":["floral","fruity"]})");
  auto r = call({"generate", "--checkpoint", path("ck.json"), "--query", q, "-n", "4", "--out",
                 path("g.jsonl"), "--steps", "800", "--seed", "5"});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string lines = read(path("g.jsonl"));
  EXPECT_EQ(count_lines(lines), 4u);
  json summary = json::parse(r.out);
  EXPECT_TRUE(summary.contains("validity_rate"));
  EXPECT_EQ(summary["unknown_descriptors"].get<int>(), 1);
  EXPECT_NE(r.err.find("warning"), std::string::npos);
  std::istringstream in(lines);
  std::string line;
  while (std::getline(in, line)) EXPECT_TRUE(json::parse(line).contains("valid"));
}

TEST_F(CliTest, GenerateZeroSamplesGivesEmptyFile) {
  ASSERT_EQ(call({"train", "--data", small_dataset(), "--out", path("ck.json"), "--epochs", "1"})
                .code,
            0);
  auto q = write("q.json", R"({"descriptors":["sweet"]})");
  auto r = call({"generate", "--checkpoint", path("ck.json"), "--query", q, "-n", "0", "--out",
                 path("g.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(path("g.jsonl")));
  EXPECT_TRUE(read(path("g.jsonl")).empty());
}

TEST_F(CliTest, GenerateBadInputs) {
  ASSERT_EQ(call({"train", "--data", small_dataset(), "--out", path("ck.json"), "--epochs", "1"})
                .code,
            0);
  auto q = write("q.json", R"({"descriptors":["sweet"]})");
  auto bad_q = write("bad.json", R"({"tags":["sweet"]})");
  EXPECT_EQ(call({"generate", "--checkpoint", path("none.json"), "--query", q, "--out",
                  path("g.jsonl")})
                .code,
            2);
  EXPECT_EQ(call({"generate", "--checkpoint", path("ck.json"), "--query", bad_q, "--out",
                  path("g.jsonl")})
                .code,
            2);
  EXPECT_EQ(call({"generate", "--checkpoint", path("ck.json"), "--query", q, "--out",
                  path("g.jsonl"), "--steps", "50"})
                .code,
            2);
  EXPECT_EQ(call({"generate", "--checkpoint", path("ck.json"), "--query", q, "--out",
                  path("g.jsonl"), "--constrained", "--unconstrained"})
                .code,
            2);
}

TEST_F(CliTest, GenerateIsReproducible) {
  ASSERT_EQ(call({"train", "--data", small_dataset(), "--out", path("ck.json"), "--epochs", "2"})
                .code,
            0);
  auto q = write("q.json", R"({"descriptors":["sweet","fruity"]})");
  for (const char* name : {"a.jsonl", "b.jsonl"}) {
    ASSERT_EQ(call({"generate", "--checkpoint", path("ck.json"), "--query", q, "-n", "3",
                    "--out", path(name), "--seed", "11"})
                  .code,
              0);
  }
  EXPECT_EQ(read(path("a.jsonl")), read(path("b.jsonl")));
}

TEST_F(CliTest, ValidateAllValid) {
  auto f = write("ok.smi", "CCO\nc1ccccc1\n\nCC(=O)O\n");
  auto r = call({"validate", f});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_lines(r.out), 3u);
}

TEST_F(CliTest, ValidateReportsValenceFailure) {
  auto f = write("bad.smi", "CCO\nC(C)(C)(C)(C)C\n");
  auto r = call({"validate", f});
  EXPECT_EQ(r.code, 4);
  std::istringstream in(r.out);
  std::string first, second;
  std::getline(in, first);
  std::getline(in, second);
  EXPECT_TRUE(json::parse(first)["valid"].get<bool>());
  json j = json::parse(second);
  EXPECT_FALSE(j["valid"].get<bool>());
  EXPECT_EQ(j["failed_stage"], "valence");
}

TEST_F(CliTest, ValidateUnparsableLineFails) {
  auto r = call({"validate", write("x.smi", "C1CC\n")});
  EXPECT_EQ(r.code, 4);
  EXPECT_EQ(json::parse(r.out)["failed_stage"], "parse");
}

TEST_F(CliTest, ValidateEmptyFile) {
  auto r = call({"validate", write("empty.smi", "")});
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(r.out.empty());
  EXPECT_NE(r.err.find("0 molecule(s)"), std::string::npos);
}

TEST_F(CliTest, ValidateMissingFile) { EXPECT_EQ(call({"validate", path("none.smi")}).code, 2); }

TEST_F(CliTest, SelectToyScenario) {
  auto r = call({"select-sensors", "--scenario", (kData / "scenarios" / "abc_toy.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["chosen"], json::array({"C"}));
  auto e = call({"select-sensors", "--scenario",
                 (kData / "scenarios" / "abc_toy.json").string(), "--exact"});
  ASSERT_EQ(e.code, 0);
  EXPECT_EQ(json::parse(e.out)["chosen"], json::array({"C"}));
  auto s = call({"select-sensors", "--scenario",
                 (kData / "scenarios" / "abc_toy.json").string(), "--mode", "subtract"});
  ASSERT_EQ(s.code, 0);
  EXPECT_EQ(json::parse(s.out)["chosen"], json::array({"C"}));
}

TEST_F(CliTest, SelectAmmoniaScenarioPicksFour) {
  const std::string sc = (kData / "scenarios" / "ammonia_16.json").string();
  for (std::vector<std::string> extra :
       {std::vector<std::string>{}, {"--exact"}, {"--mode", "subtract"}}) {
    std::vector<std::string> args = {"select-sensors", "--scenario", sc};
    args.insert(args.end(), extra.begin(), extra.end());
    auto r = call(args);
    ASSERT_EQ(r.code, 0) << r.err;
    json j = json::parse(r.out);
    EXPECT_EQ(j["count"].get<int>(), 4);
    EXPECT_EQ(j["catalog_size"].get<int>(), 16);
    EXPECT_TRUE(j["uncovered"].empty());
  }
}

TEST_F(CliTest, SubtractOnMinimalSetIsUnchanged) {
  auto r = call({"select-sensors", "--scenario", (kData / "scenarios" / "abc_toy.json").string(),
                 "--mode", "subtract", "--current", "A,B"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["chosen"], json::array({"A", "B"}));
}

TEST_F(CliTest, SelectBadScenario) {
  EXPECT_EQ(call({"select-sensors", "--scenario", write("s.json", "{\"targets\": 3}")}).code, 2);
  EXPECT_EQ(call({"select-sensors", "--scenario", path("none.json")}).code, 2);
  EXPECT_EQ(call({"select-sensors", "--scenario",
                  (kData / "scenarios" / "abc_toy.json").string(), "--mode", "sideways"})
                .code,
            2);
}

TEST_F(CliTest, MetricsPlotDrawsThreeSeries) {
  auto csv = write("m.csv",
                   "epoch,mse_loss,ce_loss,total_loss\n1,2.0,1.0,3.0\n2,1.5,0.8,2.3\n"
                   "3,1.0,0.7,1.7\n");
  auto r = call({"metrics-plot", "--metrics", csv, "--out", path("m.svg")});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string svg = read(path("m.svg"));
  EXPECT_EQ(svg.rfind("<svg", 0) == 0 || svg.rfind("<?xml", 0) == 0, true);
  for (const char* id : {"mse_loss", "ce_loss", "total_loss"}) {
    EXPECT_NE(svg.find(std::string("<polyline id=\"") + id + "\""), std::string::npos) << id;
  }
}

TEST_F(CliTest, MetricsPlotSingleRow) {
  auto csv = write("m.csv", "epoch,mse_loss,ce_loss,total_loss\n1,2.0,1.0,3.0\n");
  EXPECT_EQ(call({"metrics-plot", "--metrics", csv, "--out", path("m.svg")}).code, 0);
  EXPECT_TRUE(fs::exists(path("m.svg")));
}

TEST_F(CliTest, MetricsPlotMissingColumn) {
  auto csv = write("m.csv", "epoch,mse_loss,total_loss\n1,2.0,3.0\n");
  EXPECT_EQ(call({"metrics-plot", "--metrics", csv, "--out", path("m.svg")}).code, 2);
}

TEST_F(CliTest, StandaloneBinaryRuns) {
  const std::string cmd = std::string(ODORGEN_CLI_PATH) + " select-sensors --scenario " +
                          (kData / "scenarios" / "abc_toy.json").string() + " > " +
                          path("out.json") + " 2>/dev/null";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_EQ(json::parse(read(path("out.json")))["chosen"], json::array({"C"}));
}
