#include "nl2sql/pipeline.hpp"

#include <algorithm>

#include "nl2sql/digest.hpp"
#include "nl2sql/error.hpp"

namespace nl2sql {
namespace {

std::string short_hash(const std::string& text) {
  return sha256_hex(text).substr(0, 16);
}

std::string outcome_note(const ExecutionOutcome& outcome) {
  std::string note(to_string(outcome.status));
  if (outcome.error_message) note += ": " + *outcome.error_message;
  return note;
}

ExecutionOutcome execute_candidate(const Candidate& candidate,
                                   const DatabaseHandle& db, double timeout) {
  if (!candidate.extracted_sql) return ExecutionOutcome{};
  return execute_sql(db, *candidate.extracted_sql, timeout);
}

void note_candidate(std::vector<TraceEntry>* trace, std::string stage,
                    const Candidate& candidate, const std::string& prompt) {
  if (trace == nullptr) return;
  std::string detail = "trajectory " + std::to_string(candidate.trajectory_id) +
                       " prompt " + short_hash(prompt);
  if (candidate.failure) {
    detail += " backend failure: " + *candidate.failure;
  } else {
    detail += candidate.extracted_sql ? " sql extracted" : " no sql extracted";
  }
  trace->push_back({std::move(stage), std::move(detail)});
}

}  // namespace

void PipelineConfig::validate() const {
  if (k == 0) throw ConfigError("num_candidates k must be >= 1");
  if (!use_selector && k > 1) {
    throw ConfigError("k > 1 requires the selector: a pool needs a selection rule");
  }
  if (timeout_seconds <= 0) throw ConfigError("timeout must be positive");
  if (retrieval_top_k == 0) throw ConfigError("retrieval top_k must be >= 1");
  sampling.validate();
}

std::optional<std::size_t> choose_plurality(const std::vector<PoolEntry>& pool) {
  if (pool.empty()) return std::nullopt;
  struct Cluster {
    std::size_t size = 0;
    std::size_t lowest_id = 0;
    std::size_t representative = 0;
    bool failure = false;
    bool empty = false;
  };
  std::map<std::string, Cluster> clusters;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const auto& entry = pool[i];
    auto [it, inserted] = clusters.try_emplace(entry.signature);
    Cluster& cluster = it->second;
    if (inserted || entry.trajectory_id < cluster.lowest_id) {
      cluster.lowest_id = entry.trajectory_id;
      cluster.representative = i;
    }
    ++cluster.size;
    cluster.failure = entry.status != ExecStatus::ok;
    cluster.empty = entry.status == ExecStatus::empty_prediction;
  }
  const bool any_ok = std::any_of(clusters.begin(), clusters.end(),
                                  [](const auto& c) { return !c.second.failure; });
  const bool any_sql = std::any_of(pool.begin(), pool.end(),
                                   [](const PoolEntry& e) { return e.has_sql; });
  const Cluster* best = nullptr;
  for (const auto& [signature, cluster] : clusters) {
    if (any_ok && cluster.failure) continue;
    if (any_sql && cluster.empty) continue;
    if (best == nullptr || cluster.size > best->size ||
        (cluster.size == best->size && cluster.lowest_id < best->lowest_id)) {
      best = &cluster;
    }
  }
  return best->representative;
}

ContextBuilder::ContextBuilder(std::filesystem::path db_root,
                               DatabaseLayout layout,
                               std::optional<std::filesystem::path> descriptions_root)
    : db_root_(std::move(db_root)),
      layout_(layout),
      descriptions_root_(std::move(descriptions_root)) {}

const ContextBuilder::Entry& ContextBuilder::entry(const std::string& db_id) {
  std::lock_guard lock(mutex_);
  auto it = cache_.find(db_id);
  if (it != cache_.end()) return *it->second;
  auto fresh = std::make_unique<Entry>();
  fresh->db = load_database(db_id, db_root_, layout_);
  // BIRD ships column descriptions next to each database.
  std::filesystem::path dir =
      descriptions_root_ ? *descriptions_root_ / db_id / "database_description"
                         : fresh->db.path.parent_path() / "database_description";
  ColumnDescriptions descriptions;
  if (std::filesystem::is_directory(dir)) descriptions = load_descriptions(dir);
  fresh->schema = extract_schema(fresh->db, &descriptions);
  return *cache_.emplace(db_id, std::move(fresh)).first->second;
}

DatabaseHandle ContextBuilder::database(const std::string& db_id) {
  return entry(db_id).db;
}

SchemaContext ContextBuilder::plain(const std::string& db_id,
                                    const RenderOptions& options) {
  SchemaContext schema = entry(db_id).schema;
  schema.ddl_text = render_ddl(schema, options);
  return schema;
}

SchemaContext ContextBuilder::retrieved(const BenchmarkItem& item,
                                        std::size_t top_k,
                                        const RenderOptions& options) {
  const Entry& cached = entry(item.db_id);
  SchemaContext schema =
      retrieve_values(question_text(item), cached.db, cached.schema, top_k);
  schema.ddl_text = render_ddl(schema, options);
  return schema;
}

std::string repair_prompt(const std::string& original_prompt,
                          const std::string& sql, const std::string& error) {
  std::string prompt = original_prompt;
  if (!prompt.empty() && prompt.back() != '\n') prompt += "\n";
  prompt += "\nYour previous SQL query was:\n```sql\n" + sql +
            "\n```\nExecuting it produced the error: " + error +
            ". Fix the query. Output only the corrected SQL inside ```sql ``` tags.";
  return prompt;
}

std::vector<Candidate> Pipeline::run_generator(const BenchmarkItem& item,
                                               const SchemaContext& ctx,
                                               const PipelineConfig& cfg,
                                               std::vector<TraceEntry>* trace) {
  if (cfg.k == 0) throw ConfigError("num_candidates k must be >= 1");
  GenerationRequest request = cfg.sampling;
  request.prompt = build_prompt(item, ctx);
  request.num_candidates = cfg.k;
  auto candidates = gateway_.generate(request);
  for (const auto& candidate : candidates) {
    note_candidate(trace, "generate", candidate, request.prompt);
  }
  return candidates;
}

Candidate Pipeline::run_verifier(Candidate candidate, const BenchmarkItem& item,
                                 const DatabaseHandle& db,
                                 const SchemaContext& ctx,
                                 const PipelineConfig& cfg,
                                 std::vector<TraceEntry>* trace) {
  if (candidate.failure) return candidate;
  const std::string original = build_prompt(item, ctx);
  for (std::size_t iteration = 1; iteration <= cfg.verifier_max_iters; ++iteration) {
    const ExecutionOutcome outcome =
        execute_candidate(candidate, db, cfg.timeout_seconds);
    if (outcome.status == ExecStatus::ok) break;
    const std::string error = outcome.error_message.value_or(
        outcome.status == ExecStatus::empty_prediction
            ? "no SQL query was found in the answer"
            : std::string(to_string(outcome.status)));
    if (trace) {
      trace->push_back({"verify", "trajectory " +
                                      std::to_string(candidate.trajectory_id) +
                                      " iteration " + std::to_string(iteration) +
                                      ": " + outcome_note(outcome)});
    }
    GenerationRequest request = cfg.sampling;
    request.temperature = 0.0;
    request.num_candidates = 1;
    request.prompt = repair_prompt(original, candidate.extracted_sql.value_or(""), error);
    Candidate repaired = gateway_.generate(request).front();
    repaired.trajectory_id = candidate.trajectory_id;
    note_candidate(trace, "repair", repaired, request.prompt);
    const double latency = candidate.latency_seconds + repaired.latency_seconds;
    const std::size_t tokens = candidate.token_count + repaired.token_count;
    const bool approximate = candidate.tokens_approximate || repaired.tokens_approximate;
    if (repaired.failure) {
      candidate.latency_seconds = latency;
      candidate.token_count = tokens;
      candidate.tokens_approximate = approximate;
      break;
    }
    candidate = std::move(repaired);
    candidate.latency_seconds = latency;
    candidate.token_count = tokens;
    candidate.tokens_approximate = approximate;
  }
  return candidate;
}

std::optional<std::string> Pipeline::run_selector(
    const std::vector<Candidate>& candidates, const BenchmarkItem& item,
    const DatabaseHandle& db, const PipelineConfig& cfg,
    std::vector<TraceEntry>* trace) {
  if (candidates.empty()) throw ConfigError("selector needs at least one candidate");
  const bool order_sensitive = is_order_sensitive(item.gold_sql);
  std::vector<PoolEntry> pool;
  for (const auto& candidate : candidates) {
    const ExecutionOutcome outcome =
        execute_candidate(candidate, db, cfg.timeout_seconds);
    PoolEntry entry;
    entry.trajectory_id = candidate.trajectory_id;
    entry.has_sql = candidate.extracted_sql.has_value();
    entry.status = outcome.status;
    entry.signature = result_signature(outcome, order_sensitive).hex();
    pool.push_back(std::move(entry));
  }
  const std::size_t chosen = *choose_plurality(pool);
  if (trace) {
    trace->push_back({"select", "trajectory " +
                                    std::to_string(candidates[chosen].trajectory_id) +
                                    " signature " + pool[chosen].signature.substr(0, 16)});
  }
  return candidates[chosen].extracted_sql;
}

EvalRecord Pipeline::finish(const BenchmarkItem& item, const DatabaseHandle& db,
                            std::vector<Candidate> candidates,
                            std::optional<std::string> final_sql,
                            std::vector<TraceEntry> trace,
                            const PipelineConfig& cfg) {
  EvalRecord record;
  record.item_id = item.item_id;
  record.db_id = item.db_id;
  record.gold_sql = item.gold_sql;
  record.difficulty = item.difficulty;
  record.order_sensitive = is_order_sensitive(item.gold_sql);
  record.gold_outcome = execute_sql(db, item.gold_sql, cfg.timeout_seconds);
  if (record.gold_outcome.status != ExecStatus::ok) {
    trace.push_back({"gold", outcome_note(record.gold_outcome)});
  }
  for (const auto& candidate : candidates) {
    const ExecutionOutcome outcome =
        execute_candidate(candidate, db, cfg.timeout_seconds);
    PoolEntry entry;
    entry.trajectory_id = candidate.trajectory_id;
    entry.has_sql = candidate.extracted_sql.has_value();
    entry.status = outcome.status;
    entry.signature = result_signature(outcome, record.order_sensitive).hex();
    entry.correct =
        compare_results(outcome, record.gold_outcome, record.order_sensitive);
    record.pool.push_back(std::move(entry));
    record.total_latency_seconds += candidate.latency_seconds;
    record.total_tokens += candidate.token_count;
    record.tokens_approximate = record.tokens_approximate || candidate.tokens_approximate;
    record.backend_failed = record.backend_failed || candidate.failure.has_value();
  }
  record.final_sql = std::move(final_sql);
  record.outcome = record.final_sql ? execute_sql(db, *record.final_sql, cfg.timeout_seconds)
                                    : ExecutionOutcome{};
  record.correct =
      compare_results(record.outcome, record.gold_outcome, record.order_sensitive);
  trace.push_back({"execute", outcome_note(record.outcome)});
  record.candidates = std::move(candidates);
  record.per_stage_trace = std::move(trace);
  return record;
}

EvalRecord Pipeline::run_greedy(const BenchmarkItem& item,
                                const DatabaseHandle& db,
                                const SchemaContext& ctx,
                                const PipelineConfig& cfg) {
  PipelineConfig greedy = cfg;
  greedy.k = 1;
  greedy.sampling.temperature = 0.0;
  std::vector<TraceEntry> trace;
  auto candidates = run_generator(item, ctx, greedy, &trace);
  std::optional<std::string> sql = candidates.front().extracted_sql;
  return finish(item, db, std::move(candidates), std::move(sql), std::move(trace),
                greedy);
}

EvalRecord Pipeline::run_sql_d1(const BenchmarkItem& item,
                                ContextBuilder& contexts,
                                const PipelineConfig& cfg) {
  cfg.validate();
  const DatabaseHandle db = contexts.database(item.db_id);
  std::vector<TraceEntry> trace;
  SchemaContext ctx;
  if (cfg.use_retriever) {
    ctx = contexts.retrieved(item, cfg.retrieval_top_k, cfg.render);
    std::size_t matched = 0;
    for (const auto& [column, values] : ctx.matched_values) matched += values.size();
    trace.push_back({"retrieve", std::to_string(matched) + " matched values"});
  } else {
    ctx = contexts.plain(item.db_id, cfg.render);
  }
  auto candidates = run_generator(item, ctx, cfg, &trace);
  if (cfg.use_verifier) {
    for (auto& candidate : candidates) {
      candidate = run_verifier(std::move(candidate), item, db, ctx, cfg, &trace);
    }
  }
  std::optional<std::string> sql =
      cfg.use_selector ? run_selector(candidates, item, db, cfg, &trace)
                       : candidates.front().extracted_sql;
  return finish(item, db, std::move(candidates), std::move(sql), std::move(trace),
                cfg);
}

}  // namespace nl2sql
