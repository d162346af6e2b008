#include "nl2sql/metrics.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>

#include "nl2sql/error.hpp"

namespace nl2sql {
namespace {

std::size_t tenths(std::size_t correct, std::size_t total) {
  // round(1000 * correct / total), half up, in integers.
  return (2000 * correct + total) / (2 * total);
}

std::string fixed(double value, int decimals) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.*f", decimals, value);
  return buffer;
}

double percent_value(const Ratio& ratio) {
  return ratio.total == 0 ? 0.0 : static_cast<double>(tenths(ratio.correct, ratio.total)) / 10.0;
}

double round_to(double value, int decimals) {
  return std::stod(fixed(value, decimals));
}

}  // namespace

double execution_accuracy(const std::vector<EvalRecord>& records) {
  if (records.empty()) throw MetricError("execution accuracy of an empty record set");
  std::size_t correct = 0;
  for (const auto& record : records) correct += record.correct ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(records.size());
}

double pass_at_k(std::size_t n, std::size_t c, std::size_t k) {
  if (c > n) throw MetricError("pass@k: c exceeds n");
  if (k == 0 || k > n) {
    throw MetricError("pass@k: k=" + std::to_string(k) + " outside 1.." + std::to_string(n));
  }
  if (n - c < k) return 1.0;
  double all_wrong = 1.0;
  for (std::size_t i = 0; i < k; ++i) {
    all_wrong *= static_cast<double>(n - c - i) / static_cast<double>(n - i);
  }
  return 1.0 - all_wrong;
}

double majority_accuracy(const std::vector<EvalRecord>& records, std::size_t k) {
  if (records.empty()) throw MetricError("Maj@k of an empty record set");
  if (k == 0) throw MetricError("Maj@k needs k >= 1");
  std::size_t correct = 0;
  for (const auto& record : records) {
    if (record.pool.size() < k) {
      throw MetricError("item " + record.item_id + " has a pool of " +
                        std::to_string(record.pool.size()) + ", fewer than k=" +
                        std::to_string(k));
    }
    const std::vector<PoolEntry> prefix(record.pool.begin(), record.pool.begin() + k);
    const auto chosen = choose_plurality(prefix);
    if (chosen && prefix[*chosen].correct) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(records.size());
}

double mean_pass_at_k(const std::vector<EvalRecord>& records, std::size_t k) {
  if (records.empty()) throw MetricError("pass@k of an empty record set");
  double sum = 0.0;
  for (const auto& record : records) {
    std::size_t c = 0;
    for (const auto& entry : record.pool) c += entry.correct ? 1 : 0;
    if (record.pool.size() < k) {
      throw MetricError("item " + record.item_id + " has a pool smaller than k=" +
                        std::to_string(k));
    }
    sum += pass_at_k(record.pool.size(), c, k);
  }
  return sum / static_cast<double>(records.size());
}

EfficiencyStats efficiency_stats(const std::vector<EvalRecord>& records) {
  EfficiencyStats stats;
  if (records.empty()) return stats;
  for (const auto& record : records) {
    stats.mean_latency_seconds += record.total_latency_seconds;
    stats.mean_tokens += static_cast<double>(record.total_tokens);
    if (!record.candidates.empty()) {
      stats.single_pass_latency_seconds += record.candidates.front().latency_seconds;
    }
  }
  const double n = static_cast<double>(records.size());
  stats.mean_latency_seconds /= n;
  stats.mean_tokens /= n;
  stats.single_pass_latency_seconds /= n;
  return stats;
}

std::string format_percent(std::size_t correct, std::size_t total) {
  if (total == 0) throw MetricError("percentage of zero items");
  const std::size_t t = tenths(correct, total);
  return std::to_string(t / 10) + "." + std::to_string(t % 10);
}

std::string format_percent(double fraction) { return fixed(fraction * 100.0, 1); }

std::string format_efficiency_row(double latency_seconds, double tokens,
                                  double ex_fraction) {
  return fixed(latency_seconds, 2) + " / " + fixed(tokens / 1000.0, 1) + "K / " +
         format_percent(ex_fraction);
}

EvalReport assemble_report(const std::vector<EvalRecord>& records,
                           const std::string& strategy,
                           const std::string& manifest_hash,
                           const std::vector<ErrorLabel>* labels) {
  EvalReport report;
  report.strategy = strategy;
  report.manifest_hash = manifest_hash;
  report.n_items = records.size();
  report.ex_overall.total = records.size();
  std::size_t min_pool = records.empty() ? 0 : SIZE_MAX;
  for (const auto& record : records) {
    report.ex_overall.correct += record.correct ? 1 : 0;
    report.tokens_approximate = report.tokens_approximate || record.tokens_approximate;
    report.backend_failures += record.backend_failed ? 1 : 0;
    min_pool = std::min(min_pool, record.pool.size());
  }
  for (const auto& record : records) {
    Ratio& bucket = report.ex_by_difficulty[record.difficulty];
    ++bucket.total;
    bucket.correct += record.correct ? 1 : 0;
  }
  for (std::size_t k = 1; k <= min_pool; ++k) {
    report.pass_at_k_curve[k] = mean_pass_at_k(records, k);
    report.maj_at_k_curve[k] = majority_accuracy(records, k);
  }
  report.efficiency = efficiency_stats(records);
  report.classified = labels != nullptr;
  report.error_distribution = error_distribution(labels ? *labels : std::vector<ErrorLabel>{});
  return report;
}

std::string report_json(const EvalReport& report) {
  nlohmann::ordered_json out;
  out["strategy"] = report.strategy;
  out["manifest"] = report.manifest_hash;
  out["n_items"] = report.n_items;
  out["n_correct"] = report.ex_overall.correct;
  out["ex_overall"] = percent_value(report.ex_overall);
  nlohmann::ordered_json by_difficulty = nlohmann::ordered_json::object();
  for (const auto& [difficulty, ratio] : report.ex_by_difficulty) {
    by_difficulty[std::string(to_string(difficulty))] = percent_value(ratio);
  }
  out["ex_by_difficulty"] = std::move(by_difficulty);
  nlohmann::ordered_json pass = nlohmann::ordered_json::object();
  for (const auto& [k, value] : report.pass_at_k_curve) {
    pass[std::to_string(k)] = round_to(value * 100.0, 1);
  }
  out["pass_at_k"] = std::move(pass);
  nlohmann::ordered_json maj = nlohmann::ordered_json::object();
  for (const auto& [k, value] : report.maj_at_k_curve) {
    maj[std::to_string(k)] = round_to(value * 100.0, 1);
  }
  out["maj_at_k"] = std::move(maj);
  out["mean_latency_seconds"] = round_to(report.efficiency.mean_latency_seconds, 3);
  out["single_pass_latency_seconds"] =
      round_to(report.efficiency.single_pass_latency_seconds, 3);
  out["mean_tokens"] = round_to(report.efficiency.mean_tokens, 1);
  out["tokens_approximate"] = report.tokens_approximate;
  out["backend_failures"] = report.backend_failures;
  out["classified"] = report.classified;
  nlohmann::ordered_json errors = nlohmann::ordered_json::object();
  for (const auto& [category, count] : report.error_distribution) {
    errors[std::string(to_string(category))] = count;
  }
  out["error_distribution"] = std::move(errors);
  return out.dump(2) + "\n";
}

std::string report_csv(const EvalReport& report) {
  const std::string k = std::to_string(
      report.pass_at_k_curve.empty() ? 1 : report.pass_at_k_curve.rbegin()->first);
  std::string out = "# manifest " + report.manifest_hash + "\n";
  out += "strategy,k,metric,value\n";
  const auto row = [&](const std::string& kk, const std::string& metric,
                       const std::string& value) {
    out += report.strategy + "," + kk + "," + metric + "," + value + "\n";
  };
  row(k, "ex", fixed(percent_value(report.ex_overall), 1));
  for (const auto& [difficulty, ratio] : report.ex_by_difficulty) {
    row(k, "ex_" + std::string(to_string(difficulty)), fixed(percent_value(ratio), 1));
  }
  for (const auto& [kk, value] : report.pass_at_k_curve) {
    row(std::to_string(kk), "pass_at_k", fixed(value * 100.0, 1));
  }
  for (const auto& [kk, value] : report.maj_at_k_curve) {
    row(std::to_string(kk), "maj_at_k", fixed(value * 100.0, 1));
  }
  row(k, "mean_latency_seconds", fixed(report.efficiency.mean_latency_seconds, 3));
  row(k, "mean_tokens", fixed(report.efficiency.mean_tokens, 1));
  for (const auto& [category, count] : report.error_distribution) {
    row(k, "errors_" + std::string(to_string(category)), std::to_string(count));
  }
  return out;
}

}  // namespace nl2sql
