#include <softhgr/data.hpp>
#include <softhgr/error.hpp>
#include <softhgr/experiments.hpp>
#include <softhgr/report.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace softhgr;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "softhgr_test_report" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Report, ValidatesOwnOutput) {
  ExperimentReport r;
  r.experiment = "demo";
  r.add("a", "count", 3.0);
  r.add("b", "seconds", std::vector<double>{1.0, 2.0});
  EXPECT_TRUE(validate_report(r.to_json()).empty());
  EXPECT_DOUBLE_EQ(r.scalar("a"), 3.0);
  EXPECT_EQ(r.find("missing"), nullptr);
}

TEST(Report, FlagsProblems) {
  auto j = nlohmann::json::object();
  EXPECT_FALSE(validate_report(j).empty());
  ExperimentReport r;
  r.experiment = "demo";
  r.add("a", "count", 3.0);
  j = r.to_json();
  j["metrics"][0].erase("unit");
  j["metrics"][0]["values"] = {1.0};
  const auto problems = validate_report(j);
  EXPECT_EQ(problems.size(), 2u);
  j = r.to_json();
  j["schema_version"] = 99;
  EXPECT_EQ(validate_report(j).size(), 1u);
}

TEST(Report, WritesJsonAndSeries) {
  ExperimentReport r;
  r.experiment = "demo";
  r.add("a", "count", 1.0);
  r.series.push_back({"table", {"x", "y"}, {{1.0, 2.0}, {3.0, std::nan("")}}});
  const auto dir = fresh_dir("write");
  r.write(dir);
  std::ifstream json(dir / "demo.json");
  EXPECT_TRUE(validate_report(nlohmann::json::parse(json)).empty());
  std::ifstream csv(dir / "demo_table.csv");
  std::string header, row1, row2;
  std::getline(csv, header);
  std::getline(csv, row1);
  std::getline(csv, row2);
  EXPECT_EQ(header, "x,y");
  EXPECT_EQ(row1, "1,2");
  EXPECT_EQ(row2, "3,");
}

TEST(Experiments, OracleReport) {
  Matrix p(2, 2);
  p << 0.4, 0.1, 0.1, 0.4;
  const auto r = experiments::oracle(DiscreteJoint(p), 1);
  EXPECT_TRUE(validate_report(r.to_json()).empty());
  EXPECT_NEAR(r.scalar("sigma_sum"), 0.6, 1e-12);
  EXPECT_NEAR(r.scalar("soft_optimum"), 0.18, 1e-12);
  EXPECT_EQ(r.series.size(), 2u);
}

TEST(Experiments, LinearitySmall) {
  experiments::LinearityParams p;
  p.card = 8;
  p.n = 20000;
  p.k = 3;
  p.epochs = 150;
  const auto r = experiments::linearity(p);
  EXPECT_TRUE(validate_report(r.to_json()).empty());
  EXPECT_GE(r.scalar("cca_soft_hgr_f"), 0.98 * 3);
  EXPECT_GE(r.scalar("cca_soft_hgr_g"), 0.98 * 3);
  EXPECT_NEAR(r.scalar("cca_soft_f_g"), r.scalar("cca_hgr_f_g"), 0.02 * 3);
}

TEST(Experiments, BenchSmall) {
  experiments::BenchParams p;
  p.m = 50;
  p.k_list = {10, 60};
  p.dim = 256;
  p.repetitions = 1;
  const auto r = experiments::bench(p);
  EXPECT_TRUE(validate_report(r.to_json()).empty());
  EXPECT_DOUBLE_EQ(r.scalar("baseline_first_failure_k"), 60.0);
}

TEST(Experiments, TrainFromConfig) {
  const nlohmann::json cfg = nlohmann::json::parse(R"({
    "objective": "multimodal", "batch_size": 50, "learning_rate": 0.05, "epochs": 2, "k": 2,
    "architectures": [{"widths": [4, 2]}, {"widths": [4, 2]}, {"widths": [4, 2]}],
    "data": {"synthetic": {"kind": "latent_class", "dims": [4, 4, 4], "n": 300, "missing": [0.2, 0.2, 0.2]}}
  })");
  const auto dir = fresh_dir("train");
  const auto run = experiments::train_from_config(cfg, {}, dir);
  EXPECT_TRUE(validate_report(run.report.to_json()).empty());
  EXPECT_NE(run.report.find("pair_value@0_2"), nullptr);
  EXPECT_TRUE(fs::exists(dir / "trace.jsonl"));
  std::ifstream ck(dir / "checkpoint.json");
  EXPECT_EQ(maps_from_checkpoint(nlohmann::json::parse(ck)).size(), 3u);
}

TEST(Experiments, TrainFromConfigListsEveryProblem) {
  try {
    experiments::train_from_config(nlohmann::json::parse(R"({"learning_rate": -1})"), {}, std::nullopt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::schema);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("\"data\""), std::string::npos);
    EXPECT_NE(msg.find("\"batch_size\""), std::string::npos);
    EXPECT_NE(msg.find("learning_rate"), std::string::npos);
  }
}
