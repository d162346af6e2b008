#pragma once

#include <sqlite3.h>

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>

namespace nl2sql::sqlite {

// Owning wrapper around a read-only sqlite3 connection.
class Connection {
 public:
  // Throws OpenError naming `label` when the file cannot be opened.
  static Connection open_readonly(const std::filesystem::path& path,
                                  const std::string& label);

  sqlite3* get() const { return db_.get(); }
  std::string last_error() const;

 private:
  struct Closer {
    void operator()(sqlite3* db) const { sqlite3_close_v2(db); }
  };
  explicit Connection(sqlite3* db) : db_(db) {}
  std::unique_ptr<sqlite3, Closer> db_;
};

class Statement {
 public:
  // Throws Error carrying the engine message on prepare failure.
  Statement(const Connection& conn, std::string_view sql);

  sqlite3_stmt* get() const { return stmt_.get(); }
  // Returns true while rows are available; throws on engine error.
  bool step();
  int column_count() const { return sqlite3_column_count(stmt_.get()); }
  std::string column_text(int index) const;
  bool column_is_null(int index) const {
    return sqlite3_column_type(stmt_.get(), index) == SQLITE_NULL;
  }
  std::int64_t column_int(int index) const {
    return sqlite3_column_int64(stmt_.get(), index);
  }

 private:
  struct Finalizer {
    void operator()(sqlite3_stmt* stmt) const { sqlite3_finalize(stmt); }
  };
  sqlite3* db_;
  std::unique_ptr<sqlite3_stmt, Finalizer> stmt_;
};

// Quotes an identifier for embedding in generated SQL ("a""b").
std::string quote_identifier(std::string_view name);

}  // namespace nl2sql::sqlite
