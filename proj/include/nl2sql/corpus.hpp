#pragma once

// Benchmark ingestion (Spider / BIRD record files) and the database registry.

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace nl2sql {

enum class Difficulty { simple, moderate, challenging, unlabeled };

inline constexpr std::array<Difficulty, 4> kAllDifficulties = {
    Difficulty::simple, Difficulty::moderate, Difficulty::challenging,
    Difficulty::unlabeled};

std::string_view to_string(Difficulty difficulty);
// Case-insensitive; anything unrecognised maps to unlabeled.
Difficulty parse_difficulty(std::string_view text);

enum class BenchmarkFormat { spider, bird };

std::string_view to_string(BenchmarkFormat format);
// Throws ConfigError for unknown tags.
BenchmarkFormat parse_format(std::string_view tag);

struct BenchmarkItem {
  std::string item_id;
  std::string question;
  std::optional<std::string> evidence;
  std::string db_id;
  std::string gold_sql;
  Difficulty difficulty = Difficulty::unlabeled;

  bool operator==(const BenchmarkItem&) const = default;
};

std::vector<BenchmarkItem> parse_benchmark(const nlohmann::json& records,
                                           BenchmarkFormat format);
std::vector<BenchmarkItem> load_benchmark(const std::filesystem::path& path,
                                          BenchmarkFormat format);

// Inverse of parse_benchmark for every mapped field.
nlohmann::json serialize_benchmark(const std::vector<BenchmarkItem>& items,
                                   BenchmarkFormat format);

enum class Dialect { sqlite };

struct DatabaseHandle {
  std::string db_id;
  std::filesystem::path path;
  Dialect dialect = Dialect::sqlite;
};

enum class DatabaseLayout {
  nested,  // root/<db_id>/<db_id>.sqlite
  flat,    // root/<db_id>.sqlite
};

std::filesystem::path database_path(const std::string& db_id,
                                    const std::filesystem::path& root,
                                    DatabaseLayout layout);

// Opens the database read-only and runs a probe query before returning.
DatabaseHandle load_database(const std::string& db_id,
                             const std::filesystem::path& root,
                             DatabaseLayout layout = DatabaseLayout::nested);

using Strata = std::map<Difficulty, std::vector<BenchmarkItem>>;

// Always returns all four buckets, possibly empty.
Strata stratify(const std::vector<BenchmarkItem>& items);

}  // namespace nl2sql
