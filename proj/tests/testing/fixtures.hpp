#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "nl2sql/corpus.hpp"

namespace nl2sql::testing {

std::filesystem::path fixture_dir();

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline const std::vector<std::string> kFixtureDatabases = {
    "codebase_community", "california_schools", "formula_1"};

// Creates <root>/<db_id>/<db_id>.sqlite from fixtures/sql/<db_id>.sql.
DatabaseHandle build_database(const std::filesystem::path& root,
                              const std::string& db_id);
void build_all(const std::filesystem::path& root);

// Runs arbitrary SQL against a writable database file.
void exec_script(const std::filesystem::path& db_path, const std::string& sql);

void write_file(const std::filesystem::path& path, const std::string& text);

}  // namespace nl2sql::testing
