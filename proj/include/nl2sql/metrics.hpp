#pragma once

// Execution accuracy, pass@k / Maj@k curves, efficiency aggregates and
// report assembly.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nl2sql/diagnoser.hpp"
#include "nl2sql/pipeline.hpp"

namespace nl2sql {

// Throws MetricError on empty input.
double execution_accuracy(const std::vector<EvalRecord>& records);

// 1 - C(n-c, k) / C(n, k) by the product form. Throws MetricError unless
// 0 <= c <= n and 1 <= k <= n.
double pass_at_k(std::size_t n, std::size_t c, std::size_t k);

// Selector semantics over the first k pool entries of every record.
// Throws MetricError naming the first record whose pool is too small.
double majority_accuracy(const std::vector<EvalRecord>& records, std::size_t k);

// Mean pass@k over records, each from (pool size, correct in pool).
double mean_pass_at_k(const std::vector<EvalRecord>& records, std::size_t k);

struct EfficiencyStats {
  double mean_latency_seconds = 0.0;
  double mean_tokens = 0.0;
  // First candidate only, for single-pass trade-off plots.
  double single_pass_latency_seconds = 0.0;
};

EfficiencyStats efficiency_stats(const std::vector<EvalRecord>& records);

// correct/total as a percentage rounded half-up to one decimal: 587/1000 -> "58.7".
std::string format_percent(std::size_t correct, std::size_t total);
std::string format_percent(double fraction);
// "0.18 / 2.2K / 53.0": latency, thousands of tokens, EX.
std::string format_efficiency_row(double latency_seconds, double tokens,
                                  double ex_fraction);

struct Ratio {
  std::size_t correct = 0;
  std::size_t total = 0;
};

struct EvalReport {
  std::string strategy;
  std::size_t n_items = 0;
  Ratio ex_overall;
  std::map<Difficulty, Ratio> ex_by_difficulty;  // non-empty buckets only
  std::map<std::size_t, double> pass_at_k_curve;
  std::map<std::size_t, double> maj_at_k_curve;
  EfficiencyStats efficiency;
  bool tokens_approximate = false;
  bool classified = false;
  ErrorDistribution error_distribution;
  std::size_t backend_failures = 0;
  std::string manifest_hash;
};

// Curves cover k = 1 .. smallest pool size. With labels, the error
// distribution is filled; otherwise it is all zeros and classified=false.
EvalReport assemble_report(const std::vector<EvalRecord>& records,
                           const std::string& strategy,
                           const std::string& manifest_hash,
                           const std::vector<ErrorLabel>* labels = nullptr);

// Stable key order, percentages as one-decimal numbers.
std::string report_json(const EvalReport& report);
// strategy,k,metric,value rows, after a "# manifest <hash>" line.
std::string report_csv(const EvalReport& report);

}  // namespace nl2sql
