#pragma once

// Schema extraction, annotated DDL rendering, question-driven value retrieval
// and prompt assembly.

#include <compare>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nl2sql/corpus.hpp"

namespace nl2sql {

struct ColumnInfo {
  std::string name;
  std::string declared_type;
  std::optional<std::string> description;
  // Distinct non-null values rendered as SQL literals, in catalog scan order.
  std::vector<std::string> sample_values;

  bool textual() const;
};

struct ForeignKey {
  std::string column;
  std::string foreign_table;
  std::string foreign_column;
};

struct TableInfo {
  std::string name;
  std::vector<ColumnInfo> columns;
  std::vector<std::string> primary_key;
  std::vector<ForeignKey> foreign_keys;

  // Case-insensitive, as in SQLite.
  const ColumnInfo* find_column(std::string_view column) const;
};

struct ColumnKey {
  std::string table;
  std::string column;

  auto operator<=>(const ColumnKey&) const = default;
};

using ColumnDescriptions = std::map<ColumnKey, std::string>;

struct SchemaContext {
  std::string db_id;
  std::vector<TableInfo> tables;
  std::string ddl_text;
  std::map<ColumnKey, std::vector<std::string>> matched_values;

  const TableInfo* find_table(std::string_view table) const;
};

// Reads BIRD `database_description/<table>.csv` files from `dir`.
ColumnDescriptions load_descriptions(const std::filesystem::path& dir);

inline constexpr std::size_t kSampledValuesPerColumn = 8;

SchemaContext extract_schema(const DatabaseHandle& db,
                             const ColumnDescriptions* descriptions = nullptr);

struct RenderOptions {
  bool include_values = true;
  std::size_t values_per_column = 3;
  bool include_descriptions = true;
};

std::string render_ddl(const SchemaContext& schema,
                       const RenderOptions& options);

// Identifier as it appears in DDL: bare when simple, backtick-quoted otherwise.
std::string render_identifier(std::string_view name);

inline constexpr double kValueMatchThreshold = 0.6;
inline constexpr std::size_t kCandidateLiteralLimit = 2000;

// Lowercased word n-grams of the question, n in 1..4.
std::vector<std::string> question_ngrams(std::string_view question);

// Longest common substring with any n-gram, normalised by literal length.
double value_match_score(std::string_view literal,
                         const std::vector<std::string>& ngrams);

SchemaContext retrieve_values(std::string_view question,
                              const DatabaseHandle& db, SchemaContext schema,
                              std::size_t top_k);

// Question plus evidence, as substituted into the prompt's Question slot.
std::string question_text(const BenchmarkItem& item);

std::string build_prompt(const BenchmarkItem& item, const SchemaContext& ctx);

}  // namespace nl2sql
