#include "nl2sql/sqlite_db.hpp"

#include "nl2sql/error.hpp"

namespace nl2sql::sqlite {

Connection Connection::open_readonly(const std::filesystem::path& path,
                                     const std::string& label) {
  sqlite3* raw = nullptr;
  const int rc = sqlite3_open_v2(path.c_str(), &raw,
                                 SQLITE_OPEN_READONLY | SQLITE_OPEN_NOMUTEX,
                                 nullptr);
  Connection conn(raw);
  if (rc != SQLITE_OK) {
    std::string message = raw ? sqlite3_errmsg(raw) : sqlite3_errstr(rc);
    throw OpenError("cannot open database '" + label + "': " + message);
  }
  sqlite3_extended_result_codes(raw, 1);
  return conn;
}

std::string Connection::last_error() const { return sqlite3_errmsg(db_.get()); }

Statement::Statement(const Connection& conn, std::string_view sql)
    : db_(conn.get()) {
  sqlite3_stmt* raw = nullptr;
  const int rc = sqlite3_prepare_v2(db_, sql.data(),
                                    static_cast<int>(sql.size()), &raw,
                                    nullptr);
  stmt_.reset(raw);
  if (rc != SQLITE_OK) throw Error(sqlite3_errmsg(db_));
  if (raw == nullptr) throw Error("empty statement");
}

bool Statement::step() {
  const int rc = sqlite3_step(stmt_.get());
  if (rc == SQLITE_ROW) return true;
  if (rc == SQLITE_DONE) return false;
  throw Error(sqlite3_errmsg(db_));
}

std::string Statement::column_text(int index) const {
  const auto* text = sqlite3_column_text(stmt_.get(), index);
  if (text == nullptr) return {};
  return std::string(reinterpret_cast<const char*>(text),
                     static_cast<std::size_t>(
                         sqlite3_column_bytes(stmt_.get(), index)));
}

std::string quote_identifier(std::string_view name) {
  std::string out = "\"";
  for (char c : name) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace nl2sql::sqlite
