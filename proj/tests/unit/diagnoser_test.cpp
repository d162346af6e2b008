#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "nl2sql/diagnoser.hpp"
#include "nl2sql/executor.hpp"
#include "oracles.hpp"

namespace nl2sql {
namespace {

class DiagnoserTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testing::TempDir();
    testing::build_all(dir_->path());
    for (const auto& db_id : testing::kFixtureDatabases) {
      schemas_[db_id] = extract_schema(db(db_id));
    }
  }
  static void TearDownTestSuite() { delete dir_; }

  static DatabaseHandle db(const std::string& db_id) {
    return DatabaseHandle{db_id, dir_->path() / db_id / (db_id + ".sqlite")};
  }
  static const SchemaContext& schema(const std::string& db_id) { return schemas_.at(db_id); }

  static ErrorLabel classify(const std::string& db_id, const std::string& pred,
                             const std::string& gold) {
    return classify_error(pred, gold, schema(db_id));
  }

  static testing::TempDir* dir_;
  static std::map<std::string, SchemaContext> schemas_;
};

testing::TempDir* DiagnoserTest::dir_ = nullptr;
std::map<std::string, SchemaContext> DiagnoserTest::schemas_;

TEST_F(DiagnoserTest, GoldenErrorsGetExpectedLabels) {
  std::vector<ErrorLabel> labels;
  for (const auto& c : testing::load_json("golden_errors.json")) {
    const std::string db_id = c.at("db_id");
    const std::string pred = c.at("pred");
    const std::string gold = c.at("gold");
    const auto label = classify(db_id, pred, gold);
    EXPECT_EQ(to_string(label.category), c.at("category").get<std::string>())
        << "case " << c.at("case") << ": " << label.rationale;
    EXPECT_EQ(to_string(label.subtype), c.at("subtype").get<std::string>())
        << "case " << c.at("case");
    // The predictions really are wrong on the fixture data.
    const auto pred_outcome = execute_sql(db(db_id), pred);
    const auto gold_outcome = execute_sql(db(db_id), gold);
    EXPECT_EQ(gold_outcome.status, ExecStatus::ok);
    EXPECT_FALSE(compare_results(pred_outcome, gold_outcome, is_order_sensitive(gold)))
        << "case " << c.at("case") << " prediction matches gold on fixture data";
    labels.push_back(label);
  }
  const auto distribution = error_distribution(labels);
  const ErrorDistribution expected = {{ErrorCategory::table, 1},
                                      {ErrorCategory::value, 1},
                                      {ErrorCategory::condition, 2},
                                      {ErrorCategory::function, 1},
                                      {ErrorCategory::others, 0}};
  EXPECT_EQ(distribution, expected);
}

TEST_F(DiagnoserTest, CaseFourRationaleKeepsExplicitConditionMissing) {
  const auto cases = testing::load_json("golden_errors.json");
  const auto& c = cases.at(3);
  const auto label = classify(c.at("db_id"), c.at("pred"), c.at("gold"));
  EXPECT_NE(label.rationale.find("Explicit condition missing"), std::string::npos);
  EXPECT_NE(label.rationale.find("European Grand Prix"), std::string::npos);
}

TEST_F(DiagnoserTest, CaseThreeNamesTheUnknownColumn) {
  const auto cases = testing::load_json("golden_errors.json");
  const auto& c = cases.at(2);
  const auto label = classify(c.at("db_id"), c.at("pred"), c.at("gold"));
  EXPECT_NE(label.rationale.find("s.District"), std::string::npos);
}

TEST_F(DiagnoserTest, AbsentOrUnparseablePrediction) {
  const std::string gold = "SELECT Id FROM users";
  const auto absent = classify_error(std::nullopt, gold, schema("codebase_community"));
  EXPECT_EQ(absent.category, ErrorCategory::others);
  EXPECT_EQ(absent.subtype, ErrorSubtype::structural_error);
  EXPECT_NE(absent.rationale.find("unparseable"), std::string::npos);
  const auto broken = classify("codebase_community", "SELECT 'oops FROM users", gold);
  EXPECT_EQ(broken.subtype, ErrorSubtype::structural_error);
  EXPECT_NE(broken.rationale.find("unparseable"), std::string::npos);
  ExecutionOutcome empty;
  const auto shortcut = classify_error(std::string("SELECT Id FROM users"), gold,
                                       schema("codebase_community"), &empty);
  EXPECT_NE(shortcut.rationale.find("unparseable"), std::string::npos);
}

TEST_F(DiagnoserTest, SubtypeRules) {
  const std::string cc = "codebase_community";
  struct Row {
    std::string pred;
    std::string gold;
    ErrorSubtype subtype;
  };
  const std::vector<Row> rows = {
      {"SELECT Id FROM posts", "SELECT Id FROM users", ErrorSubtype::table_mismatch},
      {"SELECT p.Id FROM posts p", "SELECT p.Id FROM posts p JOIN users u ON u.Id = p.OwnerUserId",
       ErrorSubtype::table_missing},
      {"SELECT Id FROM users WHERE Age > 30", "SELECT Id FROM users WHERE Age > 40",
       ErrorSubtype::value_mismatch},
      {"SELECT Id FROM users WHERE DisplayName = 'neil mcguigan'",
       "SELECT Id FROM users WHERE DisplayName = 'Neil McGuigan'", ErrorSubtype::value_mismatch},
      {"SELECT Id FROM users WHERE Age >= 30", "SELECT Id FROM users WHERE Age > 30",
       ErrorSubtype::operator_error},
      {"SELECT Id FROM users WHERE Age > 30 OR Reputation > 100",
       "SELECT Id FROM users WHERE Age > 30 AND Reputation > 100", ErrorSubtype::operator_error},
      {"SELECT Id FROM users WHERE Reputation > 30", "SELECT Id FROM users WHERE Age > 30",
       ErrorSubtype::attribute_error},
      {"SELECT Id FROM users WHERE Location = 'Warsaw'", "SELECT Id FROM users WHERE Age > 30",
       ErrorSubtype::attribute_error},
      {"SELECT Id FROM users WHERE Age > 30 AND Location = 'Warsaw'",
       "SELECT Id FROM users WHERE Age > 30", ErrorSubtype::attribute_error},
      {"SELECT MAX(Age) FROM users", "SELECT AVG(Age) FROM users", ErrorSubtype::aggregation_error},
      {"SELECT Age FROM users", "SELECT COUNT(Age) FROM users", ErrorSubtype::aggregation_error},
      {"SELECT OwnerUserId, COUNT(*) FROM posts",
       "SELECT OwnerUserId, COUNT(*) FROM posts GROUP BY OwnerUserId", ErrorSubtype::clause_missing},
      {"SELECT Title FROM posts", "SELECT Title FROM posts ORDER BY Score DESC LIMIT 1",
       ErrorSubtype::clause_missing},
      {"SELECT Id FROM users WHERE Reputation > 1000",
       "SELECT Id FROM users WHERE Reputation > (SELECT AVG(Reputation) FROM users)",
       ErrorSubtype::structural_error},
      {"SELECT DisplayName FROM users", "SELECT Location FROM users", ErrorSubtype::structural_error},
  };
  for (const auto& row : rows) {
    const auto label = classify(cc, row.pred, row.gold);
    EXPECT_EQ(label.subtype, row.subtype)
        << row.pred << "\n  vs " << row.gold << "\n  got " << to_string(label.subtype) << ": "
        << label.rationale;
    EXPECT_EQ(label.category, category_of(label.subtype));
  }
}

TEST_F(DiagnoserTest, AliasRewritesNeverChangeLabels) {
  const auto cases = testing::load_json("golden_errors.json");
  for (const auto& c : cases) {
    const std::string pred = c.at("pred");
    const auto base = classify(c.at("db_id"), pred, c.at("gold"));
    // Rename every short alias token by appending a suffix.
    std::string renamed;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      renamed.push_back(pred[i]);
      const bool alias_end = (pred[i] == 'c' || pred[i] == 'u' || pred[i] == 'f' ||
                              pred[i] == 's' || pred[i] == 'r' || pred[i] == 'd') &&
                             i > 0 && pred[i - 1] == ' ' && i + 1 < pred.size() &&
                             (pred[i + 1] == ' ' || pred[i + 1] == '.');
      if (alias_end) renamed += "_x";
      if (pred.compare(i, 4, " sch") == 0 && (pred[i + 4] == ' ' || pred[i + 4] == '.')) {
        renamed += "sch_x";
        i += 3;
      }
    }
    // Every alias use was renamed consistently, so the query keeps its meaning.
    const auto label = classify(c.at("db_id"), renamed, c.at("gold"));
    EXPECT_EQ(label.category, base.category) << renamed;
    EXPECT_EQ(label.subtype, base.subtype) << renamed;
  }
}

TEST(ErrorLabels, SubtypesBelongToTheirCategories) {
  EXPECT_EQ(category_of(ErrorSubtype::table_mismatch), ErrorCategory::table);
  EXPECT_EQ(category_of(ErrorSubtype::table_missing), ErrorCategory::table);
  EXPECT_EQ(category_of(ErrorSubtype::value_mismatch), ErrorCategory::value);
  EXPECT_EQ(category_of(ErrorSubtype::attribute_error), ErrorCategory::condition);
  EXPECT_EQ(category_of(ErrorSubtype::operator_error), ErrorCategory::condition);
  EXPECT_EQ(category_of(ErrorSubtype::aggregation_error), ErrorCategory::function);
  EXPECT_EQ(category_of(ErrorSubtype::clause_missing), ErrorCategory::others);
  EXPECT_EQ(category_of(ErrorSubtype::structural_error), ErrorCategory::others);
  for (auto category : kAllCategories) {
    EXPECT_EQ(parse_category(to_string(category)), category);
  }
  EXPECT_EQ(parse_subtype("value_mismatch"), ErrorSubtype::value_mismatch);
}

TEST(ErrorLabels, DistributionHasEveryCategory) {
  const auto empty = error_distribution({});
  ASSERT_EQ(empty.size(), 5u);
  for (const auto& [category, count] : empty) EXPECT_EQ(count, 0u);

  std::vector<ErrorLabel> labels;
  const std::vector<std::pair<ErrorSubtype, int>> construction = {
      {ErrorSubtype::table_mismatch, 2}, {ErrorSubtype::value_mismatch, 3},
      {ErrorSubtype::operator_error, 1}, {ErrorSubtype::aggregation_error, 1},
      {ErrorSubtype::clause_missing, 2}, {ErrorSubtype::structural_error, 1}};
  for (const auto& [subtype, n] : construction) {
    for (int i = 0; i < n; ++i) labels.push_back(make_label(subtype, "synthetic"));
  }
  const auto counts = error_distribution(labels);
  EXPECT_EQ(counts.at(ErrorCategory::table), 2u);
  EXPECT_EQ(counts.at(ErrorCategory::value), 3u);
  EXPECT_EQ(counts.at(ErrorCategory::condition), 1u);
  EXPECT_EQ(counts.at(ErrorCategory::function), 1u);
  EXPECT_EQ(counts.at(ErrorCategory::others), 3u);
}

TEST_F(DiagnoserTest, DeterministicAcrossRuns) {
  for (const auto& c : testing::load_json("golden_errors.json")) {
    EXPECT_EQ(classify(c.at("db_id"), c.at("pred"), c.at("gold")),
              classify(c.at("db_id"), c.at("pred"), c.at("gold")));
  }
}

}  // namespace
}  // namespace nl2sql
