#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "fixtures.hpp"
#include "nl2sql/error.hpp"
#include "nl2sql/pipeline.hpp"
#include "nl2sql/records.hpp"
#include "oracles.hpp"

namespace nl2sql {
namespace {

const char* kCaseThreeBroken =
    "SELECT s.District FROM satscores s JOIN schools sch ON s.cds = sch.CDSCode WHERE "
    "sch.StatusType = 'Active' GROUP BY s.District ORDER BY AVG(s.AvgScrRead) DESC LIMIT 1";
const char* kCaseThreeGold =
    "SELECT T1.District FROM schools AS T1 INNER JOIN satscores AS T2 ON T1.CDSCode = T2.cds "
    "WHERE T1.StatusType = 'Active' ORDER BY T2.AvgScrRead DESC LIMIT 1";

std::string fenced(const std::string& sql) { return "<answer>\n```sql\n" + sql + "\n```\n</answer>"; }

MockBackend::Entry reply_to(const std::string& prompt_part, const std::string& sql,
                            std::optional<std::size_t> trajectory = std::nullopt) {
  MockBackend::Entry entry;
  entry.prompt = prompt_part;
  entry.reply = fenced(sql);
  entry.trajectory_id = trajectory;
  entry.usage_tokens = 100;
  entry.latency_seconds = 0.5;
  return entry;
}

BenchmarkItem item(const std::string& id, const std::string& db_id, const std::string& question,
                   const std::string& gold) {
  BenchmarkItem out;
  out.item_id = id;
  out.db_id = db_id;
  out.question = question;
  out.gold_sql = gold;
  return out;
}

BenchmarkItem case_three() {
  return item("case3", "california_schools",
              "Which active district has the highest average score in Reading?", kCaseThreeGold);
}

std::size_t count_stage(const std::vector<TraceEntry>& trace, const std::string& stage) {
  return static_cast<std::size_t>(std::count_if(
      trace.begin(), trace.end(), [&](const TraceEntry& t) { return t.stage == stage; }));
}

class PipelineTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testing::TempDir();
    testing::build_all(dir_->path());
  }
  static void TearDownTestSuite() { delete dir_; }

  ContextBuilder contexts() const { return ContextBuilder(dir_->path(), DatabaseLayout::nested); }

  static PipelineConfig all_off() {
    PipelineConfig cfg;
    cfg.use_retriever = false;
    cfg.use_verifier = false;
    cfg.use_selector = false;
    cfg.sampling.temperature = 0.0;
    return cfg;
  }

  static testing::TempDir* dir_;
};

testing::TempDir* PipelineTest::dir_ = nullptr;

TEST_F(PipelineTest, GreedyOracleIsCorrect) {
  const auto it = item("g1", "codebase_community", "Which users are older than 30?",
                       "SELECT Id FROM users WHERE Age > 30");
  MockBackend backend({reply_to("older than 30", "SELECT Id FROM users WHERE Age > 30")});
  Gateway gateway(backend);
  Pipeline pipeline(gateway);
  auto ctxs = contexts();
  const auto record = pipeline.run_greedy(it, ctxs.database(it.db_id),
                                          ctxs.plain(it.db_id, RenderOptions{}), PipelineConfig{});
  EXPECT_TRUE(record.correct);
  EXPECT_EQ(record.final_sql, "SELECT Id FROM users WHERE Age > 30");
  ASSERT_EQ(record.candidates.size(), 1u);
  EXPECT_EQ(record.total_tokens, 100u);
  EXPECT_DOUBLE_EQ(record.total_latency_seconds, 0.5);
  EXPECT_EQ(count_stage(record.per_stage_trace, "generate"), 1u);
  EXPECT_EQ(record.per_stage_trace.back().stage, "execute");
  EXPECT_EQ(record.correct,
            compare_results(record.outcome, record.gold_outcome, record.order_sensitive));
}

TEST_F(PipelineTest, GreedyCaseThreeIsSqlError) {
  MockBackend backend({reply_to("Reading", kCaseThreeBroken)});
  Gateway gateway(backend);
  Pipeline pipeline(gateway);
  auto ctxs = contexts();
  const auto it = case_three();
  const auto record = pipeline.run_greedy(it, ctxs.database(it.db_id),
                                          ctxs.plain(it.db_id, RenderOptions{}), PipelineConfig{});
  EXPECT_FALSE(record.correct);
  EXPECT_EQ(record.outcome.status, ExecStatus::sql_error);
}

TEST_F(PipelineTest, GreedyPermutationEquivalentIsCorrect) {
  const auto it = item("g2", "codebase_community", "Names and ages of users?",
                       "SELECT DisplayName, Age FROM users");
  MockBackend backend(
      {reply_to("Names and ages", "SELECT DisplayName, Age FROM users ORDER BY Age DESC")});
  Gateway gateway(backend);
  Pipeline pipeline(gateway);
  auto ctxs = contexts();
  const auto record = pipeline.run_greedy(it, ctxs.database(it.db_id),
                                          ctxs.plain(it.db_id, RenderOptions{}), PipelineConfig{});
  EXPECT_FALSE(record.order_sensitive);
  EXPECT_TRUE(record.correct);
}

TEST_F(PipelineTest, GreedyForcesTemperatureZero) {
  class Recorder : public Backend {
   public:
    BackendReply complete(const GenerationRequest& request, std::size_t) override {
      temperature = request.temperature;
      n = request.num_candidates;
      return {fenced("SELECT 1"), 1, 0.0};
    }
    std::string identity() const override { return "recorder"; }
    double temperature = -1;
    std::size_t n = 0;
  } backend;
  Gateway gateway(backend);
  Pipeline pipeline(gateway);
  auto ctxs = contexts();
  PipelineConfig cfg;
  cfg.k = 5;
  cfg.sampling.temperature = 0.8;
  const auto it = item("t", "formula_1", "one", "SELECT 1");
  const auto record = pipeline.run_greedy(it, ctxs.database(it.db_id),
                                          ctxs.plain(it.db_id, RenderOptions{}), cfg);
  EXPECT_EQ(backend.temperature, 0.0);
  EXPECT_EQ(backend.n, 1u);
  EXPECT_EQ(record.candidates.size(), 1u);
  EXPECT_TRUE(record.correct);
}

TEST_F(PipelineTest, BackendFailureMarksRecord) {
  class Down : public Backend {
   public:
    BackendReply complete(const GenerationRequest&, std::size_t) override {
      throw BackendError("connection refused");
    }
    std::string identity() const override { return "down"; }
  } backend;
  Gateway gateway(backend);
  Pipeline pipeline(gateway);
  auto ctxs = contexts();
  const auto it = item("f", "formula_1", "q", "SELECT 1");
  const auto record = pipeline.run_greedy(it, ctxs.database(it.db_id),
                                          ctxs.plain(it.db_id, RenderOptions{}), PipelineConfig{});
  EXPECT_FALSE(record.correct);
  EXPECT_TRUE(record.backend_failed);
  EXPECT_FALSE(record.final_sql);
  EXPECT_EQ(record.outcome.status, ExecStatus::empty_prediction);
  bool noted = false;
  for (const auto& t : record.per_stage_trace) {
    noted = noted || t.detail.find("backend failure: connection refused") != std::string::npos;
  }
  EXPECT_TRUE(noted);
}

TEST_F(PipelineTest, GeneratorPoolOfEight) {
  std::vector<MockBackend::Entry> entries;
  for (std::size_t t = 0; t < 8; ++t) {
    entries.push_back(reply_to("drivers", "SELECT driverId FROM drivers WHERE driverId > " +
                                              std::to_string(t),
                               t));
  }
  MockBackend backend(entries);
  Gateway gateway(backend);
  Pipeline pipeline(gateway);
  auto ctxs = contexts();
  const auto it = item("p", "formula_1", "List drivers", "SELECT driverId FROM drivers");
  PipelineConfig cfg;
  cfg.k = 8;
  std::vector<TraceEntry> trace;
  const auto pool = pipeline.run_generator(it, ctxs.plain(it.db_id, RenderOptions{}), cfg, &trace);
  ASSERT_EQ(pool.size(), 8u);
  std::set<std::string> distinct;
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_EQ(pool[i].trajectory_id, i);
    distinct.insert(pool[i].extracted_sql.value());
  }
  EXPECT_EQ(distinct.size(), 8u);
  EXPECT_EQ(count_stage(trace, "generate"), 8u);

  cfg.k = 1;
  EXPECT_EQ(pipeline.run_generator(it, ctxs.plain(it.db_id, RenderOptions{}), cfg).size(), 1u);
}

TEST_F(PipelineTest, VerifierLeavesWorkingSqlAlone) {
  MockBackend backend({reply_to("Reading", kCaseThreeGold)});
  Gateway gateway(backend);
  Pipeline pipeline(gateway);
  auto ctxs = contexts();
  const auto it = case_three();
  const auto ctx = ctxs.plain(it.db_id, RenderOptions{});
  const auto db = ctxs.database(it.db_id);
  Candidate candidate;
  candidate.extracted_sql = kCaseThreeGold;
  candidate.raw_text = fenced(kCaseThreeGold);
  const auto out = pipeline.run_verifier(candidate, it, db, ctx, PipelineConfig{});
  EXPECT_EQ(out.extracted_sql, candidate.extracted_sql);
  EXPECT_EQ(backend.call_count(), 0u);
}

TEST_F(PipelineTest, VerifierRepairsCaseThree) {
  const std::string repair_marker =
      std::string(kCaseThreeBroken) + "\n```\nExecuting it produced the error";
  MockBackend backend(
      {reply_to(repair_marker, kCaseThreeGold), reply_to("Reading", kCaseThreeBroken)});
  Gateway gateway(backend);
  Pipeline pipeline(gateway);
  auto ctxs = contexts();
  const auto it = case_three();
  const auto ctx = ctxs.plain(it.db_id, RenderOptions{});
  const auto db = ctxs.database(it.db_id);
  PipelineConfig cfg;
  std::vector<TraceEntry> trace;
  auto first = pipeline.run_generator(it, ctx, cfg, &trace).front();
  ASSERT_EQ(first.extracted_sql, kCaseThreeBroken);
  const auto repaired = pipeline.run_verifier(first, it, db, ctx, cfg, &trace);
  EXPECT_EQ(repaired.extracted_sql, kCaseThreeGold);
  EXPECT_EQ(backend.call_count(), 2u);
  EXPECT_EQ(count_stage(trace, "repair"), 1u);
  EXPECT_EQ(count_stage(trace, "verify"), 1u);
  EXPECT_DOUBLE_EQ(repaired.latency_seconds, 1.0);
  EXPECT_EQ(repaired.token_count, 200u);
  EXPECT_EQ(execute_sql(db, *repaired.extracted_sql).status, ExecStatus::ok);

  // The repair prompt is the original prompt plus the error feedback.
  const auto prompts = backend.prompts();
  const std::string original = build_prompt(it, ctx);
  EXPECT_EQ(prompts[1].rfind(original, 0), 0u);
  EXPECT_NE(prompts[1].find("Your previous SQL query was:\n```sql\n"), std::string::npos);
  EXPECT_NE(prompts[1].find("no such column: s.District"), std::string::npos) << prompts[1];
  EXPECT_NE(prompts[1].find("Output only the corrected SQL inside ```sql ``` tags."),
            std::string::npos);
}

TEST_F(PipelineTest, VerifierGivesUpAfterMaxIters) {
  MockBackend backend({reply_to("Reading", kCaseThreeBroken)});
  Gateway gateway(backend);
  Pipeline pipeline(gateway);
  auto ctxs = contexts();
  const auto it = case_three();
  const auto ctx = ctxs.plain(it.db_id, RenderOptions{});
  const auto db = ctxs.database(it.db_id);
  PipelineConfig cfg;
  cfg.verifier_max_iters = 2;
  Candidate broken;
  broken.extracted_sql = kCaseThreeBroken;
  std::vector<TraceEntry> trace;
  const auto out = pipeline.run_verifier(broken, it, db, ctx, cfg, &trace);
  EXPECT_EQ(backend.call_count(), 2u);
  EXPECT_EQ(count_stage(trace, "repair"), 2u);
  EXPECT_EQ(out.extracted_sql, broken.extracted_sql);
  EXPECT_EQ(execute_sql(db, *out.extracted_sql).status, ExecStatus::sql_error);

  cfg.verifier_max_iters = 0;
  pipeline.run_verifier(broken, it, db, ctx, cfg);
  EXPECT_EQ(backend.call_count(), 2u);
}

TEST_F(PipelineTest, SelectorCases) {
  MockBackend backend({});
  Gateway gateway(backend);
  Pipeline pipeline(gateway);
  auto ctxs = contexts();
  const auto db = ctxs.database("codebase_community");
  const auto cases = testing::selector_cases();
  ASSERT_EQ(cases.size(), 12u);
  for (const auto& c : cases) {
    const auto it = item("s", "codebase_community", "q", c.gold);
    const auto chosen = pipeline.run_selector(c.candidates, it, db, PipelineConfig{});
    if (!c.expected_trajectory) {
      EXPECT_FALSE(chosen) << c.name;
      continue;
    }
    const auto expected = std::find_if(
        c.candidates.begin(), c.candidates.end(),
        [&](const Candidate& x) { return x.trajectory_id == *c.expected_trajectory; });
    EXPECT_EQ(chosen, expected->extracted_sql) << c.name;
  }
}

TEST_F(PipelineTest, SelectorWinningClusterIgnoresOrder) {
  MockBackend backend({});
  Gateway gateway(backend);
  Pipeline pipeline(gateway);
  auto ctxs = contexts();
  const auto db = ctxs.database("codebase_community");
  std::mt19937 rng(3);
  for (const auto& c : testing::selector_cases()) {
    if (!c.expected_trajectory) continue;
    const auto it = item("s", "codebase_community", "q", c.gold);
    const bool ordered = is_order_sensitive(c.gold);
    const auto base = pipeline.run_selector(c.candidates, it, db, PipelineConfig{});
    const auto base_sig = result_signature(execute_sql(db, base.value_or("")), ordered);
    for (int round = 0; round < 5; ++round) {
      auto shuffled = c.candidates;
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      const auto chosen = pipeline.run_selector(shuffled, it, db, PipelineConfig{});
      EXPECT_EQ(chosen, base) << c.name;
      EXPECT_EQ(result_signature(execute_sql(db, chosen.value_or("")), ordered), base_sig);
    }
  }
}

TEST_F(PipelineTest, AllOffMatchesGreedy) {
  const auto it = item("x", "formula_1", "Where was the first European Grand Prix held?",
                       "SELECT T1.country FROM circuits AS T1 JOIN races AS T2 ON T2.circuitId = "
                       "T1.circuitId WHERE T2.name = 'European Grand Prix' ORDER BY T2.year LIMIT 1");
  const std::vector<MockBackend::Entry> script = {
      reply_to("European", "SELECT country FROM circuits WHERE circuitId = 6")};
  MockBackend a(script);
  MockBackend b(script);
  Gateway ga(a);
  Gateway gb(b);
  auto ctxs = contexts();
  const auto cfg = all_off();
  const auto greedy = Pipeline(ga).run_greedy(it, ctxs.database(it.db_id),
                                             ctxs.plain(it.db_id, cfg.render), cfg);
  const auto d1 = Pipeline(gb).run_sql_d1(it, ctxs, cfg);
  EXPECT_EQ(record_to_json(greedy).dump(), record_to_json(d1).dump());
  EXPECT_EQ(a.prompts(), b.prompts());
  EXPECT_TRUE(d1.correct);
}

TEST_F(PipelineTest, FullFlowTracesEveryBackendCall) {
  const auto it = case_three();
  const std::string repair_marker =
      std::string(kCaseThreeBroken) + "\n```\nExecuting it produced the error";
  MockBackend backend({reply_to(repair_marker, kCaseThreeGold),
                       reply_to("Reading", kCaseThreeBroken, 0),
                       reply_to("Reading", kCaseThreeGold)});
  Gateway gateway(backend);
  Pipeline pipeline(gateway);
  auto ctxs = contexts();
  PipelineConfig cfg;
  cfg.k = 3;
  const auto record = pipeline.run_sql_d1(it, ctxs, cfg);
  EXPECT_TRUE(record.correct);
  EXPECT_EQ(record.pool.size(), 3u);
  for (const auto& entry : record.pool) EXPECT_TRUE(entry.correct);
  EXPECT_EQ(backend.call_count(), 4u);
  EXPECT_EQ(count_stage(record.per_stage_trace, "generate") +
                count_stage(record.per_stage_trace, "repair"),
            backend.call_count());
  EXPECT_EQ(count_stage(record.per_stage_trace, "retrieve"), 1u);
  EXPECT_EQ(count_stage(record.per_stage_trace, "select"), 1u);
  EXPECT_EQ(record.total_tokens, 400u);
  EXPECT_DOUBLE_EQ(record.total_latency_seconds, 2.0);
}

TEST_F(PipelineTest, NoExtractedSqlAnywhere) {
  MockBackend backend({}, "I cannot answer that.");
  Gateway gateway(backend);
  Pipeline pipeline(gateway);
  auto ctxs = contexts();
  PipelineConfig cfg;
  cfg.k = 3;
  cfg.use_verifier = false;
  const auto record = pipeline.run_sql_d1(item("n", "formula_1", "q", "SELECT 1"), ctxs, cfg);
  EXPECT_FALSE(record.final_sql);
  EXPECT_EQ(record.outcome.status, ExecStatus::empty_prediction);
  EXPECT_FALSE(record.correct);
}

TEST(PipelineConfig, Validation) {
  PipelineConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.k = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.k = 2;
  cfg.use_selector = false;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.use_selector = true;
  cfg.timeout_seconds = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(ChoosePlurality, EmptyPool) { EXPECT_FALSE(choose_plurality({})); }

}  // namespace
}  // namespace nl2sql
