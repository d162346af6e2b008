#include "nl2sql/records.hpp"

#include <iostream>
#include <sstream>

#include "nl2sql/digest.hpp"
#include "nl2sql/error.hpp"

namespace nl2sql {
namespace {

using ojson = nlohmann::ordered_json;

template <class T>
ojson optional_json(const std::optional<T>& value) {
  return value ? ojson(*value) : ojson(nullptr);
}

template <class T>
std::optional<T> optional_from(const nlohmann::json& json, const char* key) {
  auto it = json.find(key);
  if (it == json.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

ojson outcome_to_json(const ExecutionOutcome& outcome, bool order_sensitive) {
  ojson out;
  out["status"] = std::string(to_string(outcome.status));
  out["columns"] = outcome.column_count;
  out["rows"] = outcome.rows.size();
  out["signature"] = result_signature(outcome, order_sensitive).hex();
  out["error"] = optional_json(outcome.error_message);
  return out;
}

ExecutionOutcome outcome_from_json(const nlohmann::json& json) {
  ExecutionOutcome outcome;
  outcome.status = parse_exec_status(json.at("status").get<std::string>());
  outcome.column_count = json.at("columns").get<std::size_t>();
  outcome.error_message = optional_from<std::string>(json, "error");
  return outcome;
}

}  // namespace

ojson record_to_json(const EvalRecord& record) {
  ojson out;
  out["item_id"] = record.item_id;
  out["db_id"] = record.db_id;
  out["difficulty"] = std::string(to_string(record.difficulty));
  out["gold_sql"] = record.gold_sql;
  out["final_sql"] = optional_json(record.final_sql);
  out["correct"] = record.correct;
  out["order_sensitive"] = record.order_sensitive;
  out["backend_failed"] = record.backend_failed;
  out["outcome"] = outcome_to_json(record.outcome, record.order_sensitive);
  out["gold_outcome"] = outcome_to_json(record.gold_outcome, record.order_sensitive);
  out["total_latency_seconds"] = record.total_latency_seconds;
  out["total_tokens"] = record.total_tokens;
  out["tokens_approximate"] = record.tokens_approximate;
  ojson candidates = ojson::array();
  for (const auto& candidate : record.candidates) {
    ojson c;
    c["trajectory_id"] = candidate.trajectory_id;
    c["raw_text"] = candidate.raw_text;
    c["extracted_sql"] = optional_json(candidate.extracted_sql);
    c["latency_seconds"] = candidate.latency_seconds;
    c["token_count"] = candidate.token_count;
    c["tokens_approximate"] = candidate.tokens_approximate;
    c["failure"] = optional_json(candidate.failure);
    candidates.push_back(std::move(c));
  }
  out["candidates"] = std::move(candidates);
  ojson pool = ojson::array();
  for (const auto& entry : record.pool) {
    ojson p;
    p["trajectory_id"] = entry.trajectory_id;
    p["has_sql"] = entry.has_sql;
    p["status"] = std::string(to_string(entry.status));
    p["signature"] = entry.signature;
    p["correct"] = entry.correct;
    pool.push_back(std::move(p));
  }
  out["pool"] = std::move(pool);
  ojson trace = ojson::array();
  for (const auto& entry : record.per_stage_trace) {
    trace.push_back(ojson::array({entry.stage, entry.detail}));
  }
  out["trace"] = std::move(trace);
  return out;
}

EvalRecord record_from_json(const nlohmann::json& json) {
  EvalRecord record;
  record.item_id = json.at("item_id").get<std::string>();
  record.db_id = json.at("db_id").get<std::string>();
  record.difficulty = parse_difficulty(json.at("difficulty").get<std::string>());
  record.gold_sql = json.at("gold_sql").get<std::string>();
  record.final_sql = optional_from<std::string>(json, "final_sql");
  record.correct = json.at("correct").get<bool>();
  record.order_sensitive = json.at("order_sensitive").get<bool>();
  record.backend_failed = json.at("backend_failed").get<bool>();
  record.outcome = outcome_from_json(json.at("outcome"));
  record.gold_outcome = outcome_from_json(json.at("gold_outcome"));
  record.total_latency_seconds = json.at("total_latency_seconds").get<double>();
  record.total_tokens = json.at("total_tokens").get<std::size_t>();
  record.tokens_approximate = json.at("tokens_approximate").get<bool>();
  for (const auto& c : json.at("candidates")) {
    Candidate candidate;
    candidate.trajectory_id = c.at("trajectory_id").get<std::size_t>();
    candidate.raw_text = c.at("raw_text").get<std::string>();
    candidate.extracted_sql = optional_from<std::string>(c, "extracted_sql");
    candidate.latency_seconds = c.at("latency_seconds").get<double>();
    candidate.token_count = c.at("token_count").get<std::size_t>();
    candidate.tokens_approximate = c.at("tokens_approximate").get<bool>();
    candidate.failure = optional_from<std::string>(c, "failure");
    record.candidates.push_back(std::move(candidate));
  }
  for (const auto& p : json.at("pool")) {
    PoolEntry entry;
    entry.trajectory_id = p.at("trajectory_id").get<std::size_t>();
    entry.has_sql = p.at("has_sql").get<bool>();
    entry.status = parse_exec_status(p.at("status").get<std::string>());
    entry.signature = p.at("signature").get<std::string>();
    entry.correct = p.at("correct").get<bool>();
    record.pool.push_back(std::move(entry));
  }
  for (const auto& t : json.at("trace")) {
    record.per_stage_trace.push_back({t.at(0).get<std::string>(), t.at(1).get<std::string>()});
  }
  return record;
}

std::vector<std::string> read_record_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open records file " + path.string());
  std::vector<std::string> lines;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    const bool last = in.peek() == std::char_traits<char>::eof();
    try {
      record_from_json(nlohmann::json::parse(line));
      lines.push_back(line);
    } catch (const nlohmann::json::exception& e) {
      if (last) {
        std::cerr << "warning: " << path.string() << ":" << number
                  << ": dropping incomplete record\n";
        break;
      }
      throw Error(path.string() + ":" + std::to_string(number) +
                  ": malformed record: " + e.what());
    }
  }
  return lines;
}

std::vector<EvalRecord> read_records(const std::filesystem::path& path) {
  std::vector<EvalRecord> records;
  for (const auto& line : read_record_lines(path)) {
    records.push_back(record_from_json(nlohmann::json::parse(line)));
  }
  return records;
}

std::string Manifest::get(const std::string& key) const {
  auto it = values_.find(key);
  return it == values_.end() ? std::string() : it->second;
}

std::string Manifest::text() const {
  std::string out;
  for (const auto& [key, value] : values_) out += key + "=" + value + "\n";
  return out;
}

std::string Manifest::hash() const { return sha256_hex(text()); }

Manifest Manifest::parse(const std::string& text) {
  Manifest manifest;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("malformed manifest line: " + line);
    manifest.set(line.substr(0, eq), line.substr(eq + 1));
  }
  return manifest;
}

Manifest Manifest::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw Error("missing manifest " + path.string());
  }
  return parse(read_file(path));
}

void Manifest::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text();
}

std::string record_line(const EvalRecord& record, const std::string& manifest_hash) {
  nlohmann::ordered_json line;
  if (!manifest_hash.empty()) line["manifest"] = manifest_hash;
  auto body = record_to_json(record);
  for (auto& [key, value] : body.items()) line[key] = std::move(value);
  return line.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

OrderedRecordWriter::OrderedRecordWriter(const std::filesystem::path& path,
                                         std::size_t first_index, bool append,
                                         std::string manifest_hash)
    : out_(path, std::ios::binary | (append ? std::ios::app : std::ios::trunc)),
      next_(first_index),
      manifest_hash_(std::move(manifest_hash)) {
  if (!out_) throw Error("cannot write " + path.string());
}

void OrderedRecordWriter::submit(std::size_t index, const EvalRecord& record) {
  std::string line = record_line(record, manifest_hash_);
  std::lock_guard lock(mutex_);
  pending_[index] = std::move(line);
  drain();
}

void OrderedRecordWriter::skip(std::size_t index) {
  std::lock_guard lock(mutex_);
  pending_[index] = std::nullopt;
  drain();
}

void OrderedRecordWriter::drain() {
  for (auto it = pending_.find(next_); it != pending_.end();
       it = pending_.find(next_)) {
    if (it->second) {
      out_ << *it->second << '\n';
      out_.flush();
    }
    pending_.erase(it);
    ++next_;
  }
}

}  // namespace nl2sql
