#include "nl2sql/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <iostream>
#include <set>

#include "nl2sql/digest.hpp"
#include "nl2sql/error.hpp"
#include "nl2sql/sqlite_db.hpp"

namespace nl2sql {
namespace {

std::string lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string require_string(const nlohmann::json& record, std::size_t index,
                           const char* field) {
  auto it = record.find(field);
  if (it == record.end() || !it->is_string()) {
    throw IngestError("record " + std::to_string(index) +
                      ": missing or non-string field '" + field + "'");
  }
  return it->get<std::string>();
}

std::string record_id(const nlohmann::json& record, std::size_t index) {
  auto it = record.find("question_id");
  if (it == record.end()) return std::to_string(index);
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  if (it->is_string()) return it->get<std::string>();
  throw IngestError("record " + std::to_string(index) +
                    ": field 'question_id' must be an integer or string");
}

}  // namespace

std::string_view to_string(Difficulty difficulty) {
  switch (difficulty) {
    case Difficulty::simple:
      return "simple";
    case Difficulty::moderate:
      return "moderate";
    case Difficulty::challenging:
      return "challenging";
    case Difficulty::unlabeled:
      break;
  }
  return "unlabeled";
}

Difficulty parse_difficulty(std::string_view text) {
  const std::string key = lower(text);
  if (key == "simple") return Difficulty::simple;
  if (key == "moderate") return Difficulty::moderate;
  if (key == "challenging") return Difficulty::challenging;
  return Difficulty::unlabeled;
}

std::string_view to_string(BenchmarkFormat format) {
  return format == BenchmarkFormat::bird ? "bird" : "spider";
}

BenchmarkFormat parse_format(std::string_view tag) {
  const std::string key = lower(tag);
  if (key == "spider") return BenchmarkFormat::spider;
  if (key == "bird") return BenchmarkFormat::bird;
  throw ConfigError("unknown benchmark format '" + std::string(tag) +
                    "' (expected spider or bird)");
}

std::vector<BenchmarkItem> parse_benchmark(const nlohmann::json& records,
                                           BenchmarkFormat format) {
  if (!records.is_array()) {
    throw IngestError("benchmark file must contain an array of records");
  }
  std::vector<BenchmarkItem> items;
  items.reserve(records.size());
  std::set<std::string> seen;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& record = records[i];
    if (!record.is_object()) {
      throw IngestError("record " + std::to_string(i) + ": not an object");
    }
    BenchmarkItem item;
    item.item_id = record_id(record, i);
    item.question = require_string(record, i, "question");
    item.db_id = require_string(record, i, "db_id");
    if (format == BenchmarkFormat::spider) {
      item.gold_sql = require_string(record, i, "query");
    } else {
      item.gold_sql = require_string(record, i, "SQL");
      item.evidence = require_string(record, i, "evidence");
      // BIRD train splits ship without difficulty labels.
      const std::string label = record.contains("difficulty")
                                    ? require_string(record, i, "difficulty")
                                    : std::string("<missing>");
      item.difficulty = parse_difficulty(label);
      if (item.difficulty == Difficulty::unlabeled) {
        std::cerr << "warning: record " << i << ": unknown difficulty '"
                  << label << "', treated as unlabeled\n";
      }
    }
    if (item.gold_sql.empty()) {
      throw IngestError("record " + std::to_string(i) + ": empty gold SQL");
    }
    if (!seen.insert(item.item_id).second) {
      throw IngestError("record " + std::to_string(i) + ": duplicate id '" +
                        item.item_id + "'");
    }
    items.push_back(std::move(item));
  }
  return items;
}

std::vector<BenchmarkItem> load_benchmark(const std::filesystem::path& path,
                                          BenchmarkFormat format) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw IngestError(e.what());
  }
  nlohmann::json records;
  try {
    records = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw IngestError(path.string() + ": " + e.what());
  }
  return parse_benchmark(records, format);
}

nlohmann::json serialize_benchmark(const std::vector<BenchmarkItem>& items,
                                   BenchmarkFormat format) {
  auto out = nlohmann::json::array();
  for (const auto& item : items) {
    nlohmann::json record;
    record["question"] = item.question;
    record["db_id"] = item.db_id;
    if (format == BenchmarkFormat::spider) {
      record["query"] = item.gold_sql;
    } else {
      const bool numeric =
          !item.item_id.empty() &&
          std::all_of(item.item_id.begin(), item.item_id.end(),
                      [](unsigned char c) { return std::isdigit(c); });
      if (numeric && item.item_id.size() < 18) {
        record["question_id"] = std::stoll(item.item_id);
      } else {
        record["question_id"] = item.item_id;
      }
      record["evidence"] = item.evidence.value_or("");
      record["SQL"] = item.gold_sql;
      record["difficulty"] = std::string(to_string(item.difficulty));
    }
    out.push_back(std::move(record));
  }
  return out;
}

std::filesystem::path database_path(const std::string& db_id,
                                    const std::filesystem::path& root,
                                    DatabaseLayout layout) {
  if (layout == DatabaseLayout::flat) return root / (db_id + ".sqlite");
  return root / db_id / (db_id + ".sqlite");
}

DatabaseHandle load_database(const std::string& db_id,
                             const std::filesystem::path& root,
                             DatabaseLayout layout) {
  const auto path = database_path(db_id, root, layout);
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw RegistryError("no database file for db_id '" + db_id + "' at " +
                        path.string());
  }
  auto conn = sqlite::Connection::open_readonly(path, db_id);
  try {
    sqlite::Statement probe(conn, "SELECT 1");
    if (!probe.step() || probe.column_int(0) != 1) {
      throw OpenError("probe query returned no row");
    }
    // Touches the file header so corrupt files fail here, not mid-run.
    sqlite::Statement catalog(conn, "SELECT count(*) FROM sqlite_master");
    catalog.step();
  } catch (const OpenError&) {
    throw;
  } catch (const Error& e) {
    throw OpenError("cannot open database '" + db_id + "': " + e.what());
  }
  return DatabaseHandle{db_id, path, Dialect::sqlite};
}

Strata stratify(const std::vector<BenchmarkItem>& items) {
  Strata buckets;
  for (auto difficulty : kAllDifficulties) buckets[difficulty];
  for (const auto& item : items) buckets[item.difficulty].push_back(item);
  return buckets;
}

}  // namespace nl2sql
