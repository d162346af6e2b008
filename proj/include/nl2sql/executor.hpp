#pragma once

// Sandboxed, time-limited SQL execution and result comparison.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nl2sql/corpus.hpp"
#include "nl2sql/digest.hpp"

namespace nl2sql {

struct BlobDigest {
  std::string sha256;
  bool operator==(const BlobDigest&) const = default;
};

using Cell = std::variant<std::monostate, std::int64_t, double, std::string,
                          BlobDigest>;
using Row = std::vector<Cell>;

enum class ExecStatus { ok, sql_error, timeout, empty_prediction };

std::string_view to_string(ExecStatus status);
ExecStatus parse_exec_status(std::string_view text);

struct ExecutionOutcome {
  ExecStatus status = ExecStatus::empty_prediction;
  std::vector<Row> rows;
  std::size_t column_count = 0;
  std::optional<std::string> error_message;
  double elapsed_seconds = 0.0;
};

struct ResultSignature {
  Sha256 digest{};
  std::string hex() const { return to_hex(digest); }
  bool operator==(const ResultSignature&) const = default;
};

inline constexpr double kDefaultTimeoutSeconds = 30.0;
inline constexpr std::size_t kRowCap = 100'000;
inline constexpr double kRelativeTolerance = 1e-6;

// Runs one read-only statement. Writes, attachments and multi-statement
// input are rejected as sql_error; the wall-clock limit yields timeout.
ExecutionOutcome execute_sql(const DatabaseHandle& db, std::string_view sql,
                             double timeout_seconds = kDefaultTimeoutSeconds,
                             std::size_t row_cap = kRowCap);

// True iff the outermost query has ORDER BY.
bool is_order_sensitive(std::string_view gold_sql);

bool cells_equal(const Cell& a, const Cell& b);

// EX comparison. Column order matters, column names do not.
bool compare_results(const ExecutionOutcome& pred,
                     const ExecutionOutcome& gold, bool order_sensitive);

ResultSignature result_signature(const ExecutionOutcome& outcome,
                                 bool order_sensitive);

}  // namespace nl2sql
