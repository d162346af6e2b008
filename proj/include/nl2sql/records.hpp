#pragma once

// Per-item records file (one JSON object per line) and the run manifest.

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "nl2sql/pipeline.hpp"

namespace nl2sql {

// Outcomes are stored as status, shape and signature; result rows and
// execution timings are not written, keeping records small and reruns
// byte-identical.
nlohmann::ordered_json record_to_json(const EvalRecord& record);
EvalRecord record_from_json(const nlohmann::json& json);

// One records-file line: the record tagged with the run's manifest hash.
std::string record_line(const EvalRecord& record, const std::string& manifest_hash);

// Reads every complete line; a truncated last line (interrupted run) is
// dropped with a warning.
std::vector<EvalRecord> read_records(const std::filesystem::path& path);
// The complete lines of a records file, verbatim. A torn final line is
// dropped with a warning.
std::vector<std::string> read_record_lines(const std::filesystem::path& path);

// Key-value provenance block. Keys are kept sorted so the text form and its
// hash are stable.
class Manifest {
 public:
  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  std::string get(const std::string& key) const;
  bool has(const std::string& key) const { return values_.count(key) > 0; }
  const std::map<std::string, std::string>& values() const { return values_; }

  std::string text() const;  // "key=value\n" lines
  std::string hash() const;  // sha256 hex of text()

  static Manifest parse(const std::string& text);
  static Manifest load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

 private:
  std::map<std::string, std::string> values_;
};

// Appends records in item order even when they complete out of order.
class OrderedRecordWriter {
 public:
  OrderedRecordWriter(const std::filesystem::path& path, std::size_t first_index,
                      bool append, std::string manifest_hash = {});

  void submit(std::size_t index, const EvalRecord& record);
  // Marks an index that produces no record (e.g. already done on resume).
  void skip(std::size_t index);

 private:
  void drain();

  std::mutex mutex_;
  std::ofstream out_;
  std::size_t next_;
  std::string manifest_hash_;
  std::map<std::size_t, std::optional<std::string>> pending_;
};

}  // namespace nl2sql
