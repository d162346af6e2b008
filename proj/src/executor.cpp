#include "nl2sql/executor.hpp"

#include <algorithm>
#include <chrono>
#include <cctype>
#include <cmath>
#include <numeric>

#include "nl2sql/error.hpp"
#include "nl2sql/sql_ast.hpp"
#include "nl2sql/sqlite_db.hpp"
#include "sql_lexer.hpp"

namespace nl2sql {
namespace {

using Clock = std::chrono::steady_clock;

struct Deadline {
  Clock::time_point at;
  bool fired = false;
};

int progress_callback(void* arg) {
  auto* deadline = static_cast<Deadline*>(arg);
  if (Clock::now() >= deadline->at) {
    deadline->fired = true;
    return 1;
  }
  return 0;
}

int authorize(void*, int action, const char*, const char*, const char*,
              const char*) {
  switch (action) {
    case SQLITE_SELECT:
    case SQLITE_READ:
    case SQLITE_FUNCTION:
    case SQLITE_RECURSIVE:
      return SQLITE_OK;
    default:
      return SQLITE_DENY;
  }
}

bool only_trivia(std::string_view tail) {
  for (char c : tail) {
    if (!std::isspace(static_cast<unsigned char>(c)) && c != ';') return false;
  }
  return true;
}

// SELECT, WITH or VALUES, possibly behind opening parentheses. Maintenance
// statements such as REINDEX or ANALYZE can pass the read-only checks.
bool starts_as_query(std::string_view sql) {
  try {
    for (const auto& token : sql::tokenize(sql)) {
      if (token.kind == sql::TokenKind::symbol && token.text == "(") continue;
      if (token.kind != sql::TokenKind::identifier) return false;
      std::string word = token.text;
      std::transform(word.begin(), word.end(), word.begin(),
                     [](unsigned char c) { return std::toupper(c); });
      return word == "SELECT" || word == "WITH" || word == "VALUES";
    }
  } catch (const ParseError&) {
  }
  return false;
}

std::string strip_trailing_ws(std::string_view text) {
  const auto end = text.find_last_not_of(" \t\r\n\f\v");
  if (end == std::string_view::npos) return {};
  return std::string(text.substr(0, end + 1));
}

ExecutionOutcome failure(ExecStatus status, std::string message,
                         Clock::time_point start) {
  ExecutionOutcome outcome;
  outcome.status = status;
  outcome.error_message = std::move(message);
  outcome.elapsed_seconds =
      std::chrono::duration<double>(Clock::now() - start).count();
  return outcome;
}

// Reals are snapped to a grid of step 1e-6 * 2^e with 2^e <= max(1, |x|),
// so two reals sharing a grid point are within the comparison tolerance.
std::pair<int, long long> quantize(double x) {
  int exponent = 0;
  const double magnitude = std::max(1.0, std::fabs(x));
  std::frexp(magnitude, &exponent);
  exponent -= 1;  // 2^exponent <= magnitude
  const double step = kRelativeTolerance * std::ldexp(1.0, exponent);
  return {exponent, std::llround(x / step)};
}

// Below 2^20 the grid step is under 1, so integers quantize to distinct
// points and can share the grid with reals. Larger integral values are
// encoded exactly instead.
constexpr double kExactIntegerFloor = 1048576.0;

bool exact_integral(double x) {
  return std::fabs(x) >= kExactIntegerFloor && std::nearbyint(x) == x &&
         std::fabs(x) < 9007199254740992.0;
}

double quantized_value(double x) {
  if (exact_integral(x)) return x;
  const auto [exponent, k] = quantize(x);
  return static_cast<double>(k) * kRelativeTolerance * std::ldexp(1.0, exponent);
}

struct CellKey {
  int rank = 0;
  double number = 0.0;
  std::string text;

  auto operator<=>(const CellKey&) const = default;
};

CellKey cell_key(const Cell& cell) {
  return std::visit(
      [](const auto& value) -> CellKey {
        using T = std::decay_t<decltype(value)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return {0, 0.0, {}};
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return {1, quantized_value(static_cast<double>(value)), {}};
        } else if constexpr (std::is_same_v<T, double>) {
          if (std::isnan(value)) return {1, 0.0, "nan"};
          return {1, std::isfinite(value) ? quantized_value(value) : value, {}};
        } else if constexpr (std::is_same_v<T, std::string>) {
          return {2, 0.0, strip_trailing_ws(value)};
        } else {
          return {3, 0.0, value.sha256};
        }
      },
      cell);
}

std::vector<CellKey> row_key(const Row& row) {
  std::vector<CellKey> key;
  key.reserve(row.size());
  for (const auto& cell : row) key.push_back(cell_key(cell));
  return key;
}

std::vector<const Row*> canonical_order(const std::vector<Row>& rows) {
  std::vector<std::pair<std::vector<CellKey>, const Row*>> keyed;
  keyed.reserve(rows.size());
  for (const auto& row : rows) keyed.emplace_back(row_key(row), &row);
  std::stable_sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
    return a.first < b.first;
  });
  std::vector<const Row*> out;
  out.reserve(keyed.size());
  for (auto& entry : keyed) out.push_back(entry.second);
  return out;
}

bool rows_equal(const Row& a, const Row& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!cells_equal(a[i], b[i])) return false;
  }
  return true;
}

std::string encode_cell(const Cell& cell) {
  return std::visit(
      [](const auto& value) -> std::string {
        using T = std::decay_t<decltype(value)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return "N";
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          if (std::fabs(static_cast<double>(value)) >= kExactIntegerFloor) {
            return "I" + std::to_string(value);
          }
          const auto [exponent, k] = quantize(static_cast<double>(value));
          return "R" + std::to_string(exponent) + ":" + std::to_string(k);
        } else if constexpr (std::is_same_v<T, double>) {
          if (std::isnan(value)) return "Rnan";
          if (std::isinf(value)) return value > 0 ? "R+inf" : "R-inf";
          if (exact_integral(value)) {
            return "I" + std::to_string(static_cast<long long>(value));
          }
          const auto [exponent, k] = quantize(value);
          return "R" + std::to_string(exponent) + ":" + std::to_string(k);
        } else if constexpr (std::is_same_v<T, std::string>) {
          const auto text = strip_trailing_ws(value);
          return "T" + std::to_string(text.size()) + ":" + text;
        } else {
          return "B" + value.sha256;
        }
      },
      cell);
}

}  // namespace

std::string_view to_string(ExecStatus status) {
  switch (status) {
    case ExecStatus::ok:
      return "ok";
    case ExecStatus::sql_error:
      return "sql_error";
    case ExecStatus::timeout:
      return "timeout";
    case ExecStatus::empty_prediction:
      break;
  }
  return "empty_prediction";
}

ExecStatus parse_exec_status(std::string_view text) {
  if (text == "ok") return ExecStatus::ok;
  if (text == "sql_error") return ExecStatus::sql_error;
  if (text == "timeout") return ExecStatus::timeout;
  if (text == "empty_prediction") return ExecStatus::empty_prediction;
  throw Error("unknown execution status '" + std::string(text) + "'");
}

ExecutionOutcome execute_sql(const DatabaseHandle& db, std::string_view sql,
                             double timeout_seconds, std::size_t row_cap) {
  const auto start = Clock::now();
  if (sql.find_first_not_of(" \t\r\n;") == std::string_view::npos) {
    return failure(ExecStatus::empty_prediction, "no SQL to execute", start);
  }

  std::optional<sqlite::Connection> conn;
  try {
    conn.emplace(sqlite::Connection::open_readonly(db.path, db.db_id));
  } catch (const Error& e) {
    return failure(ExecStatus::sql_error, e.what(), start);
  }
  sqlite3* handle = conn->get();
  sqlite3_set_authorizer(handle, authorize, nullptr);

  Deadline deadline{start + std::chrono::duration_cast<Clock::duration>(
                                std::chrono::duration<double>(timeout_seconds))};
  sqlite3_progress_handler(handle, 1000, progress_callback, &deadline);

  sqlite3_stmt* raw = nullptr;
  const char* tail = nullptr;
  int rc = sqlite3_prepare_v2(handle, sql.data(), static_cast<int>(sql.size()),
                              &raw, &tail);
  std::unique_ptr<sqlite3_stmt, decltype(&sqlite3_finalize)> stmt(
      raw, &sqlite3_finalize);
  if (rc != SQLITE_OK) {
    if (deadline.fired) {
      return failure(ExecStatus::timeout, "query exceeded time limit", start);
    }
    return failure(ExecStatus::sql_error, sqlite3_errmsg(handle), start);
  }
  if (!stmt) return failure(ExecStatus::empty_prediction, "no SQL to execute", start);

  const std::string_view rest(tail, sql.data() + sql.size() - tail);
  if (!only_trivia(rest)) {
    sqlite3_stmt* next = nullptr;
    // A tail that fails to prepare (e.g. a write refused by the authorizer)
    // is still a second statement; only comments prepare to nothing.
    const int next_rc = sqlite3_prepare_v2(
        handle, rest.data(), static_cast<int>(rest.size()), &next, nullptr);
    const bool has_statement = next_rc != SQLITE_OK || next != nullptr;
    sqlite3_finalize(next);
    if (has_statement) {
      return failure(ExecStatus::sql_error,
                     "multiple statements are not allowed", start);
    }
  }
  if (!sqlite3_stmt_readonly(stmt.get()) || !starts_as_query(sql)) {
    return failure(ExecStatus::sql_error,
                   "only read-only statements are allowed", start);
  }

  ExecutionOutcome outcome;
  outcome.column_count = static_cast<std::size_t>(sqlite3_column_count(stmt.get()));
  std::size_t total_rows = 0;
  while (true) {
    rc = sqlite3_step(stmt.get());
    if (rc == SQLITE_DONE) break;
    if (rc != SQLITE_ROW) {
      if (deadline.fired) {
        return failure(ExecStatus::timeout, "query exceeded time limit", start);
      }
      return failure(ExecStatus::sql_error, sqlite3_errmsg(handle), start);
    }
    ++total_rows;
    // Past the cap rows are no longer stored, but stepping continues so an
    // endless query still ends in timeout.
    if (total_rows > row_cap) {
      if (!outcome.rows.empty()) outcome.rows = {};
      continue;
    }
    Row row;
    row.reserve(outcome.column_count);
    for (int i = 0; i < static_cast<int>(outcome.column_count); ++i) {
      switch (sqlite3_column_type(stmt.get(), i)) {
        case SQLITE_INTEGER:
          row.emplace_back(std::int64_t{sqlite3_column_int64(stmt.get(), i)});
          break;
        case SQLITE_FLOAT:
          row.emplace_back(sqlite3_column_double(stmt.get(), i));
          break;
        case SQLITE_TEXT: {
          const auto* text = sqlite3_column_text(stmt.get(), i);
          row.emplace_back(std::string(
              reinterpret_cast<const char*>(text),
              static_cast<std::size_t>(sqlite3_column_bytes(stmt.get(), i))));
          break;
        }
        case SQLITE_BLOB: {
          const auto* data = static_cast<const char*>(sqlite3_column_blob(stmt.get(), i));
          const auto size = static_cast<std::size_t>(sqlite3_column_bytes(stmt.get(), i));
          row.emplace_back(BlobDigest{sha256_hex(std::string_view(data ? data : "", size))});
          break;
        }
        default:
          row.emplace_back(std::monostate{});
      }
    }
    outcome.rows.push_back(std::move(row));
  }
  if (total_rows > row_cap) {
    return failure(ExecStatus::sql_error,
                   "result too large (" + std::to_string(total_rows) +
                       " rows, cap " + std::to_string(row_cap) + ")",
                   start);
  }
  outcome.status = ExecStatus::ok;
  outcome.elapsed_seconds =
      std::chrono::duration<double>(Clock::now() - start).count();
  return outcome;
}

bool is_order_sensitive(std::string_view gold_sql) {
  try {
    const auto query = sql::parse(gold_sql);
    return !query.order_by.empty();
  } catch (const ParseError&) {
    return sql::has_top_level_order_by(gold_sql);
  }
}

bool cells_equal(const Cell& a, const Cell& b) {
  const bool a_num = std::holds_alternative<std::int64_t>(a) ||
                     std::holds_alternative<double>(a);
  const bool b_num = std::holds_alternative<std::int64_t>(b) ||
                     std::holds_alternative<double>(b);
  if (a_num && b_num) {
    if (std::holds_alternative<std::int64_t>(a) &&
        std::holds_alternative<std::int64_t>(b)) {
      return std::get<std::int64_t>(a) == std::get<std::int64_t>(b);
    }
    const double x = std::holds_alternative<double>(a)
                         ? std::get<double>(a)
                         : static_cast<double>(std::get<std::int64_t>(a));
    const double y = std::holds_alternative<double>(b)
                         ? std::get<double>(b)
                         : static_cast<double>(std::get<std::int64_t>(b));
    if (std::isnan(x) || std::isnan(y)) return std::isnan(x) && std::isnan(y);
    if (x == y) return true;
    const double scale = std::max({1.0, std::fabs(x), std::fabs(y)});
    return std::fabs(x - y) <= kRelativeTolerance * scale;
  }
  if (a.index() != b.index()) return false;
  if (std::holds_alternative<std::string>(a)) {
    return strip_trailing_ws(std::get<std::string>(a)) ==
           strip_trailing_ws(std::get<std::string>(b));
  }
  return a == b;
}

bool compare_results(const ExecutionOutcome& pred,
                     const ExecutionOutcome& gold, bool order_sensitive) {
  if (pred.status != ExecStatus::ok || gold.status != ExecStatus::ok) {
    return false;
  }
  if (pred.column_count != gold.column_count) return false;
  if (pred.rows.size() != gold.rows.size()) return false;
  if (order_sensitive) {
    for (std::size_t i = 0; i < pred.rows.size(); ++i) {
      if (!rows_equal(pred.rows[i], gold.rows[i])) return false;
    }
    return true;
  }
  const auto left = canonical_order(pred.rows);
  const auto right = canonical_order(gold.rows);
  for (std::size_t i = 0; i < left.size(); ++i) {
    if (!rows_equal(*left[i], *right[i])) return false;
  }
  return true;
}

ResultSignature result_signature(const ExecutionOutcome& outcome,
                                 bool order_sensitive) {
  if (outcome.status != ExecStatus::ok) {
    return ResultSignature{sha256("status:" + std::string(to_string(outcome.status)))};
  }
  std::vector<std::string> rows;
  rows.reserve(outcome.rows.size());
  for (const auto& row : outcome.rows) {
    std::string encoded = "[";
    for (const auto& cell : row) {
      encoded += encode_cell(cell);
      encoded.push_back('\x1f');
    }
    encoded.push_back(']');
    rows.push_back(std::move(encoded));
  }
  if (!order_sensitive) std::sort(rows.begin(), rows.end());
  std::string canonical = "ok;cols=" + std::to_string(outcome.column_count) + ";";
  for (const auto& row : rows) canonical += row;
  return ResultSignature{sha256(canonical)};
}

}  // namespace nl2sql
