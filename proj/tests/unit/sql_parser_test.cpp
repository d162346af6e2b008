#include <fstream>
#include <functional>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "nl2sql/error.hpp"
#include "nl2sql/executor.hpp"
#include "nl2sql/sql_ast.hpp"

namespace nl2sql {
namespace {

using sql::Expr;
using sql::ExprKind;

void collect(const Expr& expr, const std::function<void(const Expr&)>& visit) {
  visit(expr);
  for (const auto& arg : expr.args) collect(arg, visit);
}

TEST(SqlParser, CountWithComparison) {
  const auto query = sql::parse("SELECT COUNT(*) FROM t WHERE a < 60");
  ASSERT_EQ(query.first.projection.size(), 1u);
  const Expr& count = query.first.projection[0].expr;
  EXPECT_EQ(count.kind, ExprKind::function);
  EXPECT_EQ(count.op, "COUNT");
  ASSERT_EQ(query.first.from.size(), 1u);
  EXPECT_EQ(query.first.from[0].source.name, "t");
  ASSERT_TRUE(query.first.where.has_value());
  EXPECT_EQ(query.first.where->kind, ExprKind::binary);
  EXPECT_EQ(query.first.where->op, "<");
  EXPECT_EQ(query.first.where->args[0].name, "a");
  EXPECT_EQ(query.first.where->args[1].op, "60");
}

TEST(SqlParser, NestedFunctionsOfCaseFiveCorrection) {
  const auto query = sql::parse(
      "SELECT AVG(CAST(SUBSTR(T2.fastestLapTime, 1, INSTR(T2.fastestLapTime, ':') - 1) "
      "AS INTEGER) * 60 + CAST(SUBSTR(T2.fastestLapTime, INSTR(T2.fastestLapTime, ':') + 1) "
      "AS REAL)) FROM drivers AS T1 INNER JOIN results AS T2 ON T1.driverId = T2.driverId "
      "WHERE T1.surname = 'Hamilton' AND T1.forename = 'Lewis'");
  std::multiset<std::string> names;
  collect(query.first.projection[0].expr, [&](const Expr& e) {
    if (e.kind == ExprKind::function) names.insert(e.op);
    if (e.kind == ExprKind::cast) names.insert("CAST");
  });
  EXPECT_EQ(names.count("SUBSTR"), 2u);
  EXPECT_EQ(names.count("INSTR"), 2u);
  EXPECT_EQ(names.count("CAST"), 2u);
  EXPECT_EQ(names.count("AVG"), 1u);
  EXPECT_EQ(query.first.from[1].op, "INNER JOIN");
  EXPECT_EQ(query.first.from[1].source.alias, "T2");
}

TEST(SqlParser, UnsupportedConstructsBecomeOpaque) {
  const auto query = sql::parse("SELECT a FROM t WHERE b = ?");
  EXPECT_EQ(query.first.where->args[1].kind, ExprKind::opaque);
  EXPECT_EQ(sql::parse(sql::render(query)), query);
}

TEST(SqlParser, SyntaxErrorsCarryPosition) {
  try {
    sql::parse("SELECT 'unterminated FROM t");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 7u);
  }
  EXPECT_THROW(sql::parse("SELECT FROM"), ParseError);
  EXPECT_THROW(sql::parse("SELECT 1; SELECT 2"), ParseError);
  EXPECT_THROW(sql::parse("DELETE FROM t"), ParseError);
}

TEST(SqlParser, LimitCommaFormIsOffsetFirst) {
  const auto query = sql::parse("SELECT * FROM users LIMIT 2, 3");
  ASSERT_TRUE(query.limit && query.offset);
  EXPECT_EQ(query.limit->op, "3");
  EXPECT_EQ(query.offset->op, "2");
}

TEST(SqlParser, SpansAreIgnoredByEquality) {
  EXPECT_EQ(sql::parse("SELECT a FROM t"), sql::parse("select   a\n from t"));
  EXPECT_NE(sql::parse("SELECT a FROM t"), sql::parse("SELECT b FROM t"));
}

TEST(SqlParser, TopLevelOrderByFallback) {
  EXPECT_TRUE(sql::has_top_level_order_by("SELECT a FROM t ORDER BY a"));
  EXPECT_FALSE(sql::has_top_level_order_by(
      "SELECT a FROM (SELECT a FROM t ORDER BY a) WHERE b = 'order by'"));
}

TEST(SqlParser, RoundTripOverFixtureCorpus) {
  testing::TempDir dir;
  testing::build_all(dir.path());
  std::ifstream in(testing::fixture_dir() / "queries" / "roundtrip.tsv");
  std::string line;
  std::size_t total = 0;
  std::size_t equal = 0;
  while (std::getline(in, line)) {
    const auto tab = line.find('\t');
    const std::string db_id = line.substr(0, tab);
    const std::string text = line.substr(tab + 1);
    ++total;
    const auto first = sql::parse(text);
    const std::string rendered = sql::render(first);
    const auto second = sql::parse(rendered);
    if (first == second) {
      ++equal;
    } else {
      ADD_FAILURE() << text << "\n  rendered: " << rendered;
    }
    // The rendered text must still be valid SQLite.
    const DatabaseHandle db{db_id, dir.path() / db_id / (db_id + ".sqlite")};
    const auto original = execute_sql(db, text);
    const auto reparsed = execute_sql(db, rendered);
    EXPECT_EQ(original.status, ExecStatus::ok) << text << ": "
                                                << original.error_message.value_or("");
    EXPECT_TRUE(compare_results(reparsed, original, true)) << rendered;
  }
  EXPECT_EQ(total, 200u);
  EXPECT_EQ(equal, total);
}

}  // namespace
}  // namespace nl2sql
