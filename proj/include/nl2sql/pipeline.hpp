#pragma once

// Dual-track inference: model-based baselines (greedy, Maj@k) and the
// retrieve / generate / verify / select agentic flow.

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nl2sql/context.hpp"
#include "nl2sql/corpus.hpp"
#include "nl2sql/executor.hpp"
#include "nl2sql/gateway.hpp"

namespace nl2sql {

struct PipelineConfig {
  bool use_retriever = true;
  bool use_verifier = true;
  bool use_selector = true;
  std::size_t k = 1;
  std::size_t verifier_max_iters = 2;
  double timeout_seconds = kDefaultTimeoutSeconds;
  GenerationRequest sampling;  // prompt is filled per item
  std::size_t retrieval_top_k = 3;
  RenderOptions render;

  // Throws ConfigError on k == 0 or on k > 1 without a selector.
  void validate() const;
};

struct TraceEntry {
  std::string stage;
  std::string detail;

  bool operator==(const TraceEntry&) const = default;
};

// Execution summary of one pool member, enough to recompute Maj@k and
// pass@k without re-running anything.
struct PoolEntry {
  std::size_t trajectory_id = 0;
  bool has_sql = false;
  ExecStatus status = ExecStatus::empty_prediction;
  std::string signature;  // hex ResultSignature
  bool correct = false;

  bool operator==(const PoolEntry&) const = default;
};

struct EvalRecord {
  std::string item_id;
  std::string db_id;
  std::string gold_sql;
  Difficulty difficulty = Difficulty::unlabeled;
  std::optional<std::string> final_sql;
  std::vector<Candidate> candidates;
  std::vector<PoolEntry> pool;
  ExecutionOutcome outcome;
  ExecutionOutcome gold_outcome;
  bool order_sensitive = false;
  bool correct = false;
  bool backend_failed = false;
  std::vector<TraceEntry> per_stage_trace;
  double total_latency_seconds = 0.0;
  std::size_t total_tokens = 0;
  bool tokens_approximate = false;
};

// Plurality choice over a pool: failure clusters are dropped unless nothing
// else is left, the empty-prediction cluster loses to any SQL, ties go to the
// cluster holding the lowest trajectory id. Returns the index of the
// representative, or nothing for an empty pool.
std::optional<std::size_t> choose_plurality(const std::vector<PoolEntry>& pool);

// Builds (and caches per database) the schema context an item is prompted
// with.
class ContextBuilder {
 public:
  ContextBuilder(std::filesystem::path db_root, DatabaseLayout layout,
                 std::optional<std::filesystem::path> descriptions_root = {});

  DatabaseHandle database(const std::string& db_id);
  // Plain annotated DDL, no question-driven values.
  SchemaContext plain(const std::string& db_id, const RenderOptions& options);
  // DDL with values retrieved for this item's question.
  SchemaContext retrieved(const BenchmarkItem& item, std::size_t top_k,
                          const RenderOptions& options);

 private:
  struct Entry {
    DatabaseHandle db;
    SchemaContext schema;
  };
  const Entry& entry(const std::string& db_id);

  std::filesystem::path db_root_;
  DatabaseLayout layout_;
  std::optional<std::filesystem::path> descriptions_root_;
  std::mutex mutex_;
  std::map<std::string, std::unique_ptr<Entry>> cache_;
};

std::string repair_prompt(const std::string& original_prompt,
                          const std::string& sql, const std::string& error);

class Pipeline {
 public:
  explicit Pipeline(Gateway& gateway) : gateway_(gateway) {}

  EvalRecord run_greedy(const BenchmarkItem& item, const DatabaseHandle& db,
                        const SchemaContext& ctx, const PipelineConfig& cfg);

  std::vector<Candidate> run_generator(const BenchmarkItem& item,
                                       const SchemaContext& ctx,
                                       const PipelineConfig& cfg,
                                       std::vector<TraceEntry>* trace = nullptr);

  Candidate run_verifier(Candidate candidate, const BenchmarkItem& item,
                         const DatabaseHandle& db, const SchemaContext& ctx,
                         const PipelineConfig& cfg,
                         std::vector<TraceEntry>* trace = nullptr);

  std::optional<std::string> run_selector(const std::vector<Candidate>& candidates,
                                          const BenchmarkItem& item,
                                          const DatabaseHandle& db,
                                          const PipelineConfig& cfg,
                                          std::vector<TraceEntry>* trace = nullptr);

  EvalRecord run_sql_d1(const BenchmarkItem& item, ContextBuilder& contexts,
                        const PipelineConfig& cfg);

 private:
  EvalRecord finish(const BenchmarkItem& item, const DatabaseHandle& db,
                    std::vector<Candidate> candidates,
                    std::optional<std::string> final_sql,
                    std::vector<TraceEntry> trace, const PipelineConfig& cfg);

  Gateway& gateway_;
};

}  // namespace nl2sql
