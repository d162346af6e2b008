#include "fixtures.hpp"

#include <atomic>
#include <chrono>
#include <fstream>
#include <stdexcept>

#include <sqlite3.h>

#include "nl2sql/digest.hpp"

namespace nl2sql::testing {

namespace fs = std::filesystem;

fs::path fixture_dir() { return NL2SQL_FIXTURE_DIR; }

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
  path_ = fs::temp_directory_path() /
          ("nl2sql-test-" + std::to_string(stamp) + "-" + std::to_string(counter++));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ignored;
  fs::remove_all(path_, ignored);
}

void exec_script(const fs::path& db_path, const std::string& sql) {
  sqlite3* db = nullptr;
  if (sqlite3_open(db_path.c_str(), &db) != SQLITE_OK) {
    const std::string message = sqlite3_errmsg(db);
    sqlite3_close(db);
    throw std::runtime_error("open " + db_path.string() + ": " + message);
  }
  char* error = nullptr;
  if (sqlite3_exec(db, sql.c_str(), nullptr, nullptr, &error) != SQLITE_OK) {
    const std::string message = error ? error : "unknown error";
    sqlite3_free(error);
    sqlite3_close(db);
    throw std::runtime_error("script on " + db_path.string() + ": " + message);
  }
  sqlite3_close(db);
}

DatabaseHandle build_database(const fs::path& root, const std::string& db_id) {
  const fs::path dir = root / db_id;
  fs::create_directories(dir);
  const fs::path path = dir / (db_id + ".sqlite");
  fs::remove(path);
  exec_script(path, read_file(fixture_dir() / "sql" / (db_id + ".sql")));
  return DatabaseHandle{db_id, path, Dialect::sqlite};
}

void build_all(const fs::path& root) {
  for (const auto& db_id : kFixtureDatabases) build_database(root, db_id);
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

}  // namespace nl2sql::testing
