#include "nl2sql/gateway.hpp"

#include <algorithm>
#include <cctype>
#include <future>
#include <sstream>

#include "nl2sql/digest.hpp"
#include "nl2sql/error.hpp"
#include "nl2sql/sql_ast.hpp"

namespace nl2sql {
namespace {

std::string lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string_view trim_view(std::string_view text) {
  const auto begin = text.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  const auto end = text.find_last_not_of(" \t\r\n");
  return text.substr(begin, end - begin + 1);
}

// Strips whitespace, trailing fences and trailing semicolons.
std::optional<std::string> clean_sql(std::string_view sql) {
  std::string_view out = trim_view(sql);
  bool changed = true;
  while (changed && !out.empty()) {
    changed = false;
    if (out.size() >= 3 && out.substr(out.size() - 3) == "```") {
      out = trim_view(out.substr(0, out.size() - 3));
      changed = true;
    }
    if (!out.empty() && out.back() == ';') {
      out = trim_view(out.substr(0, out.size() - 1));
      changed = true;
    }
  }
  if (out.empty()) return std::nullopt;
  return std::string(out);
}

struct Block {
  std::size_t begin;  // first content byte
  std::size_t end;    // one past the last content byte
};

// All ```sql fenced blocks within [from, to) of the lowercased text.
std::vector<Block> sql_blocks(const std::string& folded, std::size_t from,
                              std::size_t to) {
  std::vector<Block> blocks;
  std::size_t pos = from;
  while (true) {
    const auto open = folded.find("```sql", pos);
    if (open == std::string::npos || open >= to) break;
    const auto content = open + 6;
    auto close = folded.find("```", content);
    if (close == std::string::npos || close > to) close = to;
    blocks.push_back(Block{content, close});
    pos = close + 3;
    if (pos >= to) break;
  }
  return blocks;
}

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

bool keyword_at(const std::string& folded, std::size_t pos,
                std::string_view keyword) {
  if (folded.compare(pos, keyword.size(), keyword) != 0) return false;
  if (pos > 0 && is_word_char(folded[pos - 1])) return false;
  const auto after = pos + keyword.size();
  return after >= folded.size() || !is_word_char(folded[after]);
}

// "WITH name [(cols)] AS (" distinguishes a CTE from the English word.
bool cte_at(const std::string& folded, std::size_t pos) {
  if (!keyword_at(folded, pos, "with")) return false;
  std::size_t i = pos + 4;
  auto skip_ws = [&] {
    while (i < folded.size() && std::isspace(static_cast<unsigned char>(folded[i]))) ++i;
  };
  skip_ws();
  if (keyword_at(folded, i, "recursive")) {
    i += 9;
    skip_ws();
  }
  const auto name_start = i;
  while (i < folded.size() && (is_word_char(folded[i]) || folded[i] == '"' ||
                               folded[i] == '`')) {
    ++i;
  }
  if (i == name_start) return false;
  skip_ws();
  if (i < folded.size() && folded[i] == '(') {
    const auto close = folded.find(')', i);
    if (close == std::string::npos) return false;
    i = close + 1;
    skip_ws();
  }
  if (!keyword_at(folded, i, "as")) return false;
  i += 2;
  skip_ws();
  return i < folded.size() && folded[i] == '(';
}

// Unfenced fallback: from the first SELECT/WITH up to the first statement
// terminator outside string literals.
std::optional<std::string> fallback_sql(std::string_view raw,
                                        const std::string& folded) {
  std::size_t start = std::string::npos;
  for (std::size_t i = 0; i < folded.size(); ++i) {
    if (keyword_at(folded, i, "select") || cte_at(folded, i)) {
      start = i;
      break;
    }
  }
  if (start == std::string::npos) return std::nullopt;
  std::size_t end = folded.size();
  char quote = 0;
  for (std::size_t i = start; i < folded.size(); ++i) {
    const char c = folded[i];
    if (quote != 0) {
      if (c == quote) quote = 0;
      continue;
    }
    if (c == '\'' || c == '"' || c == '`') {
      quote = c;
    } else if (c == ';') {
      end = i;
      break;
    } else if (folded.compare(i, 3, "```") == 0 ||
               folded.compare(i, 9, "</answer>") == 0) {
      end = i;
      break;
    }
  }
  auto sql = clean_sql(raw.substr(start, end - start));
  if (!sql) return std::nullopt;
  // Prose such as "I will select the rows" is not SQL. Keep text that parses,
  // or that at least reads like a query with a FROM clause.
  try {
    sql::parse(*sql);
    return sql;
  } catch (const Error&) {
  }
  const std::string folded_sql = lower(*sql);
  for (std::size_t i = 0; i < folded_sql.size(); ++i) {
    if (keyword_at(folded_sql, i, "from")) return sql;
  }
  return std::nullopt;
}

}  // namespace

void GenerationRequest::validate() const {
  if (num_candidates < 1) {
    throw ConfigError("num_candidates must be at least 1");
  }
  if (!(temperature >= 0.0 && temperature <= 2.0)) {
    throw ConfigError("temperature must lie in [0, 2]");
  }
}

std::optional<std::string> extract_sql(std::string_view raw_text) {
  const std::string raw(raw_text);
  const std::string folded = lower(raw);

  const auto answer = folded.rfind("<answer>");
  if (answer != std::string::npos) {
    auto close = folded.find("</answer>", answer);
    if (close == std::string::npos) close = folded.size();
    const auto blocks = sql_blocks(folded, answer, close);
    for (auto it = blocks.rbegin(); it != blocks.rend(); ++it) {
      if (auto sql = clean_sql(raw_text.substr(it->begin, it->end - it->begin))) {
        return sql;
      }
    }
  }
  const auto blocks = sql_blocks(folded, 0, folded.size());
  for (auto it = blocks.rbegin(); it != blocks.rend(); ++it) {
    if (auto sql = clean_sql(raw_text.substr(it->begin, it->end - it->begin))) {
      return sql;
    }
  }
  return fallback_sql(raw_text, folded);
}

std::size_t count_tokens(std::string_view raw_text,
                         std::optional<std::size_t> backend_usage) {
  if (backend_usage) return *backend_usage;
  std::istringstream in{std::string(raw_text)};
  std::size_t count = 0;
  std::string word;
  while (in >> word) ++count;
  return count;
}

MockBackend::MockBackend(std::vector<Entry> entries, std::string default_reply)
    : entries_(std::move(entries)), default_reply_(std::move(default_reply)) {}

MockBackend MockBackend::from_json(const nlohmann::json& fixture) {
  const nlohmann::json* list = &fixture;
  std::string default_reply;
  if (fixture.is_object()) {
    default_reply = fixture.value("default_reply", std::string());
    if (!fixture.contains("entries")) {
      throw ConfigError("mock fixture object needs an 'entries' array");
    }
    list = &fixture.at("entries");
  }
  if (!list->is_array()) throw ConfigError("mock fixture must be an array");
  std::vector<Entry> entries;
  for (std::size_t i = 0; i < list->size(); ++i) {
    const auto& raw = (*list)[i];
    try {
      Entry entry;
      const auto mode = raw.value("prompt_match", std::string("substring"));
      if (mode == "exact") {
        entry.match = Match::exact;
      } else if (mode == "substring") {
        entry.match = Match::substring;
      } else {
        throw ConfigError("unknown prompt_match '" + mode + "'");
      }
      entry.prompt = raw.value("prompt", std::string());
      if (raw.contains("trajectory_id") && !raw.at("trajectory_id").is_null()) {
        entry.trajectory_id = raw.at("trajectory_id").get<std::size_t>();
      }
      entry.reply = raw.at("reply").get<std::string>();
      if (raw.contains("usage_tokens")) {
        entry.usage_tokens = raw.at("usage_tokens").get<std::size_t>();
      }
      if (raw.contains("latency_seconds")) {
        entry.latency_seconds = raw.at("latency_seconds").get<double>();
      }
      entries.push_back(std::move(entry));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("mock fixture entry " + std::to_string(i) + ": " +
                        e.what());
    }
  }
  return MockBackend(std::move(entries), std::move(default_reply));
}

MockBackend MockBackend::from_file(const std::filesystem::path& path) {
  try {
    return from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("mock fixture " + path.string() + ": " + e.what());
  }
}

BackendReply MockBackend::complete(const GenerationRequest& request,
                                   std::size_t trajectory_id) {
  ++calls_;
  {
    std::lock_guard lock(mutex_);
    prompts_.push_back(request.prompt);
  }
  for (const auto& entry : entries_) {
    if (entry.trajectory_id && *entry.trajectory_id != trajectory_id) continue;
    const bool hit = entry.match == Match::exact
                         ? request.prompt == entry.prompt
                         : request.prompt.find(entry.prompt) != std::string::npos;
    if (hit) {
      return BackendReply{entry.reply, entry.usage_tokens,
                          entry.latency_seconds.value_or(0.0)};
    }
  }
  return BackendReply{default_reply_, std::nullopt, 0.0};
}

std::string MockBackend::identity() const {
  nlohmann::json dump = nlohmann::json::array();
  for (const auto& entry : entries_) {
    dump.push_back({{"exact", entry.match == Match::exact},
                    {"prompt", entry.prompt},
                    {"trajectory", entry.trajectory_id
                                       ? nlohmann::json(*entry.trajectory_id)
                                       : nlohmann::json()},
                    {"reply", entry.reply}});
  }
  dump.push_back(default_reply_);
  return "mock:" + sha256_hex(dump.dump()).substr(0, 16);
}

std::vector<std::string> MockBackend::prompts() const {
  std::lock_guard lock(mutex_);
  return prompts_;
}

Gateway::Gateway(Backend& backend, std::size_t max_in_flight)
    : backend_(backend),
      in_flight_(static_cast<std::ptrdiff_t>(
          std::clamp<std::size_t>(max_in_flight, 1, 1024))) {}

Candidate Gateway::fetch(const GenerationRequest& request,
                         std::size_t trajectory_id) {
  Candidate candidate;
  candidate.trajectory_id = trajectory_id;
  in_flight_.acquire();
  const auto start = std::chrono::steady_clock::now();
  try {
    BackendReply reply = backend_.complete(request, trajectory_id);
    const std::chrono::duration<double> elapsed =
        std::chrono::steady_clock::now() - start;
    in_flight_.release();
    candidate.latency_seconds = reply.latency_seconds.value_or(elapsed.count());
    candidate.token_count = count_tokens(reply.text, reply.usage_tokens);
    candidate.tokens_approximate = !reply.usage_tokens.has_value();
    candidate.raw_text = std::move(reply.text);
    candidate.extracted_sql = extract_sql(candidate.raw_text);
  } catch (const std::exception& e) {
    in_flight_.release();
    const std::chrono::duration<double> elapsed =
        std::chrono::steady_clock::now() - start;
    candidate.latency_seconds = elapsed.count();
    candidate.failure = e.what();
  }
  return candidate;
}

std::vector<Candidate> Gateway::generate(const GenerationRequest& request) {
  request.validate();
  std::vector<Candidate> out;
  out.reserve(request.num_candidates);
  if (request.num_candidates == 1) {
    out.push_back(fetch(request, 0));
    return out;
  }
  std::vector<std::future<Candidate>> pending;
  pending.reserve(request.num_candidates);
  for (std::size_t id = 0; id < request.num_candidates; ++id) {
    pending.push_back(std::async(std::launch::async,
                                 [this, &request, id] { return fetch(request, id); }));
  }
  for (auto& future : pending) out.push_back(future.get());
  return out;
}

}  // namespace nl2sql
