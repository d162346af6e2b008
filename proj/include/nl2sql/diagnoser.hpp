#pragma once

// Static AST + schema comparison of a wrong prediction against its reference
// query, producing one label from the five-category error taxonomy.

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nl2sql/context.hpp"
#include "nl2sql/executor.hpp"
#include "nl2sql/sql_ast.hpp"

namespace nl2sql {

enum class ErrorCategory { table, value, condition, function, others };

enum class ErrorSubtype {
  table_mismatch,
  table_missing,
  value_mismatch,
  attribute_error,
  operator_error,
  aggregation_error,
  clause_missing,
  structural_error,
};

inline constexpr std::array<ErrorCategory, 5> kAllCategories = {
    ErrorCategory::table, ErrorCategory::value, ErrorCategory::condition,
    ErrorCategory::function, ErrorCategory::others};

ErrorCategory category_of(ErrorSubtype subtype);
std::string_view to_string(ErrorCategory category);
std::string_view to_string(ErrorSubtype subtype);
ErrorCategory parse_category(std::string_view text);
ErrorSubtype parse_subtype(std::string_view text);

struct ErrorLabel {
  ErrorCategory category = ErrorCategory::others;
  ErrorSubtype subtype = ErrorSubtype::structural_error;
  std::string rationale;

  bool operator==(const ErrorLabel&) const = default;
};

// The only way labels are built, so category always matches subtype.
ErrorLabel make_label(ErrorSubtype subtype, std::string rationale);

// One leaf of a WHERE / HAVING / ON predicate tree.
struct PredicateAtom {
  std::set<std::string> columns;        // "table.column", lowercased
  std::multiset<std::string> literals;  // normalised literal text
  std::string op;                       // e.g. "=", "<", "LIKE", "NOT IN"
  bool has_subquery = false;
  std::string text;                     // rendered leaf, for rationales
};

// Structural summary of one query, with aliases resolved to table names.
struct QueryFacts {
  std::set<std::string> tables;
  std::set<std::pair<std::string, std::string>> join_edges;
  std::vector<PredicateAtom> atoms;
  std::size_t and_count = 0;
  std::size_t or_count = 0;
  std::multiset<std::string> functions;  // uppercase names, CAST included
  std::vector<std::string> unknown_columns;
  std::set<std::string> projection_columns;
  bool group_by = false;
  bool order_by = false;
  bool limit = false;
  std::size_t subquery_count = 0;
  std::size_t max_depth = 0;
  std::size_t compound_count = 0;
};

QueryFacts analyze(const sql::Query& query, const SchemaContext& schema);

// Total on incorrect records. Execution outcomes only short-circuit missing
// predictions; everything else is decided statically.
ErrorLabel classify_error(const std::optional<std::string>& pred_sql,
                          std::string_view gold_sql,
                          const SchemaContext& schema,
                          const ExecutionOutcome* pred_outcome = nullptr,
                          const ExecutionOutcome* gold_outcome = nullptr);

using ErrorDistribution = std::map<ErrorCategory, std::size_t>;

// Every category is present, zero when unused.
ErrorDistribution error_distribution(const std::vector<ErrorLabel>& labels);

}  // namespace nl2sql
