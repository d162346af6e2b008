#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fixtures.hpp"
#include "nl2sql/cli.hpp"
#include "nl2sql/digest.hpp"
#include "suites.hpp"

namespace nl2sql {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

CliRun cli(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  CliRun run;
  run.code = run_cli(args, out, err);
  run.out = out.str();
  run.err = err.str();
  return run;
}

std::vector<std::string> lines_of(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override { testing::build_all(db_root()); }

  fs::path db_root() const { return dir_.path() / "db"; }
  fs::path path(const std::string& name) const { return dir_.path() / name; }

  CliRun eval(const testing::Suite& suite, const fs::path& out, std::vector<std::string> extra = {}) {
    std::vector<std::string> args = {"eval",          "--benchmark",    suite.benchmark.string(),
                                     "--format",      "bird",           "--db-root",
                                     db_root().string(), "--backend",   "mock",
                                     "--mock-fixture", suite.mock.string(), "--seed",
                                     "7",             "--out",          out.string()};
    args.insert(args.end(), extra.begin(), extra.end());
    return cli(args);
  }

  testing::TempDir dir_;
};

TEST_F(CliTest, GreedySmoke) {
  const auto suite = testing::write_count_suite(path("count"), 3, 5);
  const auto run = eval(suite, path("run"), {"--track", "greedy"});
  ASSERT_EQ(run.code, kExitOk) << run.err;
  EXPECT_NE(run.out.find("greedy: EX 60.0 over 5 items"), std::string::npos) << run.out;
  for (const char* name : {"manifest.txt", "records.jsonl", "report.json", "report.csv"}) {
    EXPECT_TRUE(fs::exists(path("run") / name)) << name;
  }
  const auto report = nlohmann::json::parse(read_file(path("run") / "report.json"));
  EXPECT_EQ(report["strategy"], "greedy");
  EXPECT_EQ(report["n_items"], 5);
  EXPECT_EQ(report["ex_overall"].get<double>(), 60.0);
  // Every artifact carries the manifest hash.
  const std::string hash = report["manifest"];
  EXPECT_EQ(hash, sha256_hex(read_file(path("run") / "manifest.txt")));
  EXPECT_EQ(read_file(path("run") / "report.csv").rfind("# manifest " + hash + "\n", 0), 0u);
  for (const auto& line : lines_of(path("run") / "records.jsonl")) {
    EXPECT_EQ(nlohmann::json::parse(line)["manifest"], hash);
  }
}

TEST_F(CliTest, StrategyNames) {
  const auto suite = testing::write_count_suite(path("count"), 1, 2);
  EXPECT_NE(eval(suite, path("a"), {"--track", "sql-d1", "--k", "8", "--ablation", "a_r,a_g,a_s"})
                .out.find("sql-d1[a_g+a_r+a_s]@8:"),
            std::string::npos);
  EXPECT_NE(eval(suite, path("b"), {"--track", "maj", "--k", "4"}).out.find("maj@4:"),
            std::string::npos);
  EXPECT_NE(eval(suite, path("c"), {"--track", "sample"}).out.find("sample:"), std::string::npos);
  EXPECT_NE(eval(suite, path("d"), {"--track", "sql-d1", "--k", "3"}).out.find("sql-d1@3:"),
            std::string::npos);
}

TEST_F(CliTest, ConfigErrors) {
  const auto suite = testing::write_count_suite(path("count"), 1, 2);
  EXPECT_EQ(eval(suite, path("x"), {"--track", "bogus"}).code, kExitConfig);
  EXPECT_EQ(eval(suite, path("x"), {"--track", "sql-d1", "--ablation", "a_g", "--k", "4"}).code,
            kExitConfig);
  EXPECT_EQ(eval(suite, path("x"), {"--track", "sql-d1", "--ablation", "a_r,a_x"}).code,
            kExitConfig);
  EXPECT_EQ(eval(suite, path("x"), {"--format", "wikisql"}).code, kExitConfig);
  EXPECT_EQ(cli({"eval", "--benchmark", "b.json"}).code, kExitConfig);
  EXPECT_EQ(cli({"frobnicate"}).code, kExitConfig);
  EXPECT_EQ(cli({"--help"}).code, kExitOk);
  EXPECT_NE(cli({"classify", "--run", path("missing").string()}).code, kExitOk);
}

TEST_F(CliTest, ClassifyGoldenErrors) {
  const auto suite = testing::write_golden_error_suite(path("golden"));
  ASSERT_EQ(eval(suite, path("run"), {"--track", "greedy"}).code, kExitOk);
  const auto run = cli({"classify", "--run", path("run").string()});
  ASSERT_EQ(run.code, kExitOk) << run.err;
  const auto labels = lines_of(path("run") / "labels.jsonl");
  ASSERT_EQ(labels.size(), 5u);
  const std::vector<std::string> expected = {"Table", "Value", "Condition", "Condition",
                                             "Function"};
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(nlohmann::json::parse(labels[i])["category"], expected[i]) << labels[i];
  }
  const auto report = nlohmann::json::parse(read_file(path("run") / "report.json"));
  EXPECT_TRUE(report["classified"].get<bool>());
  EXPECT_EQ(report["error_distribution"],
            nlohmann::json::parse(
                R"({"Table": 1, "Value": 1, "Condition": 2, "Function": 1, "Others": 0})"));
}

TEST_F(CliTest, ClassifyAllCorrect) {
  const auto suite = testing::write_count_suite(path("count"), 4, 4);
  ASSERT_EQ(eval(suite, path("run"), {"--track", "greedy"}).code, kExitOk);
  ASSERT_EQ(cli({"classify", "--run", path("run").string()}).code, kExitOk);
  EXPECT_EQ(read_file(path("run") / "labels.jsonl"), "");
  const auto report = nlohmann::json::parse(read_file(path("run") / "report.json"));
  for (const auto& [name, count] : report["error_distribution"].items()) EXPECT_EQ(count, 0);
}

TEST_F(CliTest, ClassifyPredictionFiles) {
  testing::write_file(path("pred.sql"),
                      "SELECT Id FROM posts\n"
                      "SELECT Id FROM users WHERE Age > 30\n"
                      "SELECT MAX(Age) FROM users\n");
  testing::write_file(path("gold.sql"),
                      "SELECT Id FROM users\tcodebase_community\n"
                      "SELECT Id FROM users WHERE Age > 30\tcodebase_community\n"
                      "SELECT AVG(Age) FROM users\tcodebase_community\n"
                      "SELECT COUNT(*) FROM posts\tcodebase_community\n");
  const auto run = cli({"classify", "--pred", path("pred.sql").string(), "--gold",
                        path("gold.sql").string(), "--db",
                        (db_root() / "codebase_community" / "codebase_community.sqlite").string(),
                        "--out", path("labels").string()});
  ASSERT_EQ(run.code, kExitOk) << run.err;
  const auto labels = lines_of(path("labels") / "labels.jsonl");
  ASSERT_EQ(labels.size(), 3u);
  EXPECT_EQ(nlohmann::json::parse(labels[0])["subtype"], "table_mismatch");
  EXPECT_EQ(nlohmann::json::parse(labels[1])["subtype"], "aggregation_error");
  EXPECT_EQ(nlohmann::json::parse(labels[1])["item_id"], "2");
  EXPECT_EQ(nlohmann::json::parse(labels[2])["subtype"], "structural_error");
  EXPECT_FALSE(nlohmann::json::parse(labels[2])["manifest"].get<std::string>().empty());
}

TEST_F(CliTest, ReportCurvesAndScatter) {
  const auto pools = testing::write_pool_suite(path("pools"));
  ASSERT_EQ(eval(pools, path("greedy"), {"--track", "greedy"}).code, kExitOk);
  ASSERT_EQ(eval(pools, path("maj"), {"--track", "maj", "--k", "8"}).code, kExitOk);
  const auto run = cli({"report", "--runs", path("greedy").string(), path("maj").string(),
                        "--out", path("plots").string()});
  ASSERT_EQ(run.code, kExitOk) << run.err;
  const auto scatter = lines_of(path("plots") / "scatter.csv");
  ASSERT_EQ(scatter.size(), 4u);
  EXPECT_EQ(scatter[0].rfind("# manifest ", 0), 0u);
  EXPECT_EQ(scatter[1], "strategy,k,mean_latency_seconds,mean_tokens,ex");
  EXPECT_EQ(scatter[2].rfind("greedy,1,", 0), 0u);
  EXPECT_EQ(scatter[3].rfind("maj@8,8,", 0), 0u);

  std::vector<double> pass;
  for (const auto& line : lines_of(path("plots") / "curves.csv")) {
    if (line.rfind("maj@8,", 0) != 0 || line.find(",pass_at_k,") == std::string::npos) continue;
    const auto value = line.substr(line.rfind(',') + 1);
    EXPECT_EQ(value.size() - value.find('.'), 2u) << line;  // one decimal
    pass.push_back(std::stod(value));
  }
  ASSERT_EQ(pass.size(), 8u);
  for (std::size_t i = 1; i < pass.size(); ++i) EXPECT_GE(pass[i], pass[i - 1]);
  // Items have 0..4 correct of 8, twice each: pass@8 is 8/10.
  EXPECT_DOUBLE_EQ(pass.back(), 80.0);
}

TEST_F(CliTest, ReportRefusesMixedBenchmarks) {
  const auto a = testing::write_count_suite(path("a"), 1, 2);
  const auto b = testing::write_count_suite(path("b"), 1, 3);
  ASSERT_EQ(eval(a, path("ra"), {"--track", "greedy"}).code, kExitOk);
  ASSERT_EQ(eval(b, path("rb"), {"--track", "greedy"}).code, kExitOk);
  const auto run = cli({"report", "--runs", path("ra").string(), path("rb").string()});
  EXPECT_EQ(run.code, kExitConfig);
  EXPECT_NE(run.err.find("different benchmark"), std::string::npos);
}

TEST_F(CliTest, DeterministicChain) {
  const auto suite = testing::write_pool_suite(path("pools"));
  for (const char* name : {"one", "two"}) {
    ASSERT_EQ(eval(suite, path(name), {"--track", "sql-d1", "--k", "8", "--workers", "3"}).code,
              kExitOk);
    ASSERT_EQ(cli({"classify", "--run", path(name).string()}).code, kExitOk);
    ASSERT_EQ(cli({"report", "--runs", path(name).string()}).code, kExitOk);
  }
  for (const char* file : {"manifest.txt", "records.jsonl", "labels.jsonl", "report.json",
                           "report.csv", "curves.csv", "scatter.csv"}) {
    EXPECT_EQ(read_file(path("one") / file), read_file(path("two") / file)) << file;
  }
}

TEST_F(CliTest, ResumeCompletesInterruptedRun) {
  const auto suite = testing::write_count_suite(path("count"), 5, 9);
  ASSERT_EQ(eval(suite, path("full"), {"--track", "greedy"}).code, kExitOk);
  ASSERT_EQ(eval(suite, path("cut"), {"--track", "greedy"}).code, kExitOk);

  // Keep four records and half of the fifth, as if the process died mid-write.
  const auto lines = lines_of(path("cut") / "records.jsonl");
  std::string partial;
  for (std::size_t i = 0; i < 4; ++i) partial += lines[i] + "\n";
  partial += lines[4].substr(0, lines[4].size() / 2);
  testing::write_file(path("cut") / "records.jsonl", partial);

  const auto resumed = eval(suite, path("cut"), {"--track", "greedy", "--resume"});
  ASSERT_EQ(resumed.code, kExitOk) << resumed.err;
  EXPECT_EQ(read_file(path("cut") / "records.jsonl"), read_file(path("full") / "records.jsonl"));
  EXPECT_EQ(read_file(path("cut") / "report.json"), read_file(path("full") / "report.json"));

  // A different configuration cannot resume into the same directory.
  EXPECT_EQ(eval(suite, path("cut"), {"--track", "sample", "--resume"}).code, kExitConfig);
}

TEST_F(CliTest, UnreachableBackendKeepsRecords) {
  const auto suite = testing::write_count_suite(path("count"), 1, 2);
  setenv("BACKEND_URL", "http://127.0.0.1:1/v1", 1);
  const auto run = cli({"eval", "--benchmark", suite.benchmark.string(), "--db-root",
                        db_root().string(), "--backend", "remote", "--track", "greedy", "--out",
                        path("remote").string()});
  unsetenv("BACKEND_URL");
  EXPECT_EQ(run.code, kExitBackend) << run.err;
  EXPECT_EQ(lines_of(path("remote") / "records.jsonl").size(), 2u);
  const auto report = nlohmann::json::parse(read_file(path("remote") / "report.json"));
  EXPECT_EQ(report["backend_failures"], 2);
  EXPECT_EQ(report["ex_overall"].get<double>(), 0.0);
}

}  // namespace
}  // namespace nl2sql
