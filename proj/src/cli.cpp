#include "nl2sql/cli.hpp"

#include <algorithm>
#include <charconv>
#include <atomic>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "nl2sql/corpus.hpp"
#include "nl2sql/diagnoser.hpp"
#include "nl2sql/digest.hpp"
#include "nl2sql/error.hpp"
#include "nl2sql/gateway.hpp"
#include "nl2sql/metrics.hpp"
#include "nl2sql/pipeline.hpp"
#include "nl2sql/records.hpp"

namespace nl2sql {
namespace {

namespace fs = std::filesystem;

constexpr const char* kManifestFile = "manifest.txt";
constexpr const char* kRecordsFile = "records.jsonl";
constexpr const char* kLabelsFile = "labels.jsonl";
constexpr const char* kReportJson = "report.json";
constexpr const char* kReportCsv = "report.csv";

struct EvalOptions {
  std::string benchmark;
  std::string format = "bird";
  std::string db_root;
  bool flat_db = false;
  std::string descriptions_root;
  std::string track = "greedy";
  std::size_t k = 0;  // 0 = track default
  std::string ablation = "a_r,a_g,a_v,a_s";
  std::size_t verifier_iters = 2;
  double timeout = kDefaultTimeoutSeconds;
  std::string backend = "mock";
  std::string mock_fixture;
  std::size_t workers = 0;
  std::int64_t seed = 0;
  double temperature = kSamplingTemperature;
  std::string out;
  bool resume = false;
};

struct ClassifyOptions {
  std::string run;
  std::string pred;
  std::string gold;
  std::string db;
  std::string out;
};

struct ReportOptions {
  std::vector<std::string> runs;
  std::string out;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

// Shortest text that reads back to the same double.
std::string format_number(double value) {
  char buffer[32];
  const auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, result.ptr);
}

std::unique_ptr<Backend> make_backend(const EvalOptions& options) {
  if (options.backend == "mock") {
    if (options.mock_fixture.empty()) {
      throw ConfigError("--backend mock requires --mock-fixture");
    }
    return std::make_unique<MockBackend>(MockBackend::from_file(options.mock_fixture));
  }
  if (options.backend == "remote") {
    return std::make_unique<RemoteBackend>(RemoteSettings::from_env());
  }
  throw ConfigError("unknown backend '" + options.backend + "'");
}

std::set<std::string> parse_ablation(const std::string& text) {
  std::set<std::string> flags;
  std::stringstream in(text);
  std::string flag;
  while (std::getline(in, flag, ',')) {
    flag.erase(std::remove_if(flag.begin(), flag.end(), ::isspace), flag.end());
    std::transform(flag.begin(), flag.end(), flag.begin(), ::tolower);
    if (flag.empty()) continue;
    if (flag != "a_r" && flag != "a_g" && flag != "a_v" && flag != "a_s") {
      throw ConfigError("unknown ablation component '" + flag + "'");
    }
    flags.insert(flag);
  }
  if (!flags.count("a_g")) throw ConfigError("--ablation must include a_g (the generator)");
  return flags;
}

struct TrackPlan {
  std::string strategy;
  PipelineConfig cfg;
  bool greedy = false;
};

TrackPlan plan_track(const EvalOptions& options) {
  TrackPlan plan;
  PipelineConfig& cfg = plan.cfg;
  cfg.verifier_max_iters = options.verifier_iters;
  cfg.timeout_seconds = options.timeout;
  cfg.sampling.temperature = options.temperature;
  cfg.sampling.seed = options.seed;
  if (options.track == "greedy") {
    plan.greedy = true;
    plan.strategy = "greedy";
    cfg.use_retriever = cfg.use_verifier = cfg.use_selector = false;
    cfg.k = 1;
    cfg.sampling.temperature = 0.0;
  } else if (options.track == "sample") {
    plan.strategy = "sample";
    cfg.use_retriever = cfg.use_verifier = cfg.use_selector = false;
    cfg.k = 1;
  } else if (options.track == "maj") {
    cfg.use_retriever = cfg.use_verifier = false;
    cfg.use_selector = true;
    cfg.k = options.k == 0 ? 8 : options.k;
    plan.strategy = "maj@" + std::to_string(cfg.k);
  } else if (options.track == "sql-d1") {
    const auto flags = parse_ablation(options.ablation);
    cfg.use_retriever = flags.count("a_r") > 0;
    cfg.use_verifier = flags.count("a_v") > 0;
    cfg.use_selector = flags.count("a_s") > 0;
    cfg.k = options.k == 0 ? (cfg.use_selector ? 8 : 1) : options.k;
    plan.strategy = "sql-d1";
    if (flags.size() < 4) {
      std::string joined;
      for (const auto& flag : flags) joined += (joined.empty() ? "" : "+") + flag;
      plan.strategy += "[" + joined + "]";
    }
    if (cfg.k > 1) plan.strategy += "@" + std::to_string(cfg.k);
  } else {
    throw ConfigError("unknown track '" + options.track + "'");
  }
  cfg.validate();
  return plan;
}

Manifest eval_manifest(const EvalOptions& options, const TrackPlan& plan,
                       const Backend& backend) {
  Manifest manifest;
  manifest.set("strategy", plan.strategy);
  manifest.set("track", options.track);
  manifest.set("benchmark", options.benchmark);
  manifest.set("benchmark_sha256", file_sha256_hex(options.benchmark));
  manifest.set("format", options.format);
  manifest.set("db_root", options.db_root);
  manifest.set("db_layout", options.flat_db ? "flat" : "nested");
  manifest.set("descriptions_root", options.descriptions_root);
  manifest.set("backend", backend.identity());
  manifest.set("seed", std::to_string(options.seed));
  manifest.set("k", std::to_string(plan.cfg.k));
  manifest.set("use_retriever", plan.cfg.use_retriever ? "true" : "false");
  manifest.set("use_verifier", plan.cfg.use_verifier ? "true" : "false");
  manifest.set("use_selector", plan.cfg.use_selector ? "true" : "false");
  manifest.set("verifier_max_iters", std::to_string(plan.cfg.verifier_max_iters));
  manifest.set("timeout_seconds", format_number(plan.cfg.timeout_seconds));
  manifest.set("temperature", format_number(plan.cfg.sampling.temperature));
  manifest.set("max_new_tokens", std::to_string(plan.cfg.sampling.max_new_tokens));
  manifest.set("retrieval_top_k", std::to_string(plan.cfg.retrieval_top_k));
  return manifest;
}

std::vector<ErrorLabel> read_labels(const fs::path& path) {
  std::vector<ErrorLabel> labels;
  std::ifstream in(path, std::ios::binary);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto json = nlohmann::json::parse(line);
    ErrorLabel label = make_label(parse_subtype(json.at("subtype").get<std::string>()),
                                  json.at("rationale").get<std::string>());
    labels.push_back(std::move(label));
  }
  return labels;
}

void write_run_report(const fs::path& dir, const Manifest& manifest) {
  const auto records = read_records(dir / kRecordsFile);
  std::optional<std::vector<ErrorLabel>> labels;
  if (fs::exists(dir / kLabelsFile)) labels = read_labels(dir / kLabelsFile);
  const EvalReport report = assemble_report(records, manifest.get("strategy"),
                                            manifest.hash(),
                                            labels ? &*labels : nullptr);
  write_text(dir / kReportJson, report_json(report));
  write_text(dir / kReportCsv, report_csv(report));
}

int cmd_eval(const EvalOptions& options, std::ostream& out, std::ostream& err) {
  const TrackPlan plan = plan_track(options);
  const BenchmarkFormat format = parse_format(options.format);
  const auto items = load_benchmark(options.benchmark, format);
  auto backend = make_backend(options);

  const fs::path dir = options.out;
  fs::create_directories(dir);
  const Manifest manifest = eval_manifest(options, plan, *backend);
  const fs::path manifest_path = dir / kManifestFile;
  const fs::path records_path = dir / kRecordsFile;

  std::set<std::string> done;
  if (options.resume && fs::exists(records_path)) {
    if (!fs::exists(manifest_path) || Manifest::load(manifest_path).hash() != manifest.hash()) {
      throw ConfigError("--resume: existing run in " + dir.string() +
                        " was produced with a different configuration");
    }
    // Rewrite without any truncated tail so appends start on a clean line.
    // Lines are kept verbatim: a parsed record no longer holds its rows.
    std::string clean;
    for (const auto& line : read_record_lines(records_path)) {
      done.insert(nlohmann::json::parse(line).at("item_id").get<std::string>());
      clean += line + "\n";
    }
    write_text(records_path, clean);
  }
  manifest.save(manifest_path);
  fs::remove(dir / kLabelsFile);

  ContextBuilder contexts(options.db_root,
                          options.flat_db ? DatabaseLayout::flat : DatabaseLayout::nested,
                          options.descriptions_root.empty()
                              ? std::nullopt
                              : std::optional<fs::path>(options.descriptions_root));
  Gateway gateway(*backend);
  Pipeline pipeline(gateway);
  OrderedRecordWriter writer(records_path, 0, options.resume, manifest.hash());

  std::size_t workers = options.workers;
  if (workers == 0) {
    workers = std::min<std::size_t>(8, std::max(1u, std::thread::hardware_concurrency()));
  }
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> item_failures{0};
  std::mutex err_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < items.size(); i = next++) {
      const BenchmarkItem& item = items[i];
      if (done.count(item.item_id)) {
        writer.skip(i);
        continue;
      }
      try {
        EvalRecord record;
        if (plan.greedy) {
          record = pipeline.run_greedy(item, contexts.database(item.db_id),
                                       contexts.plain(item.db_id, plan.cfg.render),
                                       plan.cfg);
        } else {
          record = pipeline.run_sql_d1(item, contexts, plan.cfg);
        }
        writer.submit(i, record);
      } catch (const std::exception& e) {
        ++item_failures;
        writer.skip(i);
        std::lock_guard lock(err_mutex);
        err << "error: item " << item.item_id << ": " << e.what() << "\n";
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < std::min(workers, items.size()); ++w) pool.emplace_back(work);
  work();
  for (auto& thread : pool) thread.join();

  write_run_report(dir, manifest);
  const auto records = read_records(records_path);
  const std::size_t backend_failures =
      std::count_if(records.begin(), records.end(),
                    [](const EvalRecord& r) { return r.backend_failed; });
  std::size_t correct = 0;
  for (const auto& record : records) correct += record.correct ? 1 : 0;
  out << plan.strategy << ": EX "
      << (records.empty() ? std::string("n/a") : format_percent(correct, records.size()))
      << " over " << records.size() << " items\n";
  if (item_failures > 0) return kExitFailure;
  if (backend_failures > 0) {
    err << "error: " << backend_failures << " item(s) had backend failures\n";
    return kExitBackend;
  }
  return kExitOk;
}

nlohmann::ordered_json label_json(const std::string& item_id, const ErrorLabel& label,
                                  const std::string& manifest_hash) {
  nlohmann::ordered_json json;
  if (!manifest_hash.empty()) json["manifest"] = manifest_hash;
  json["item_id"] = item_id;
  json["category"] = std::string(to_string(label.category));
  json["subtype"] = std::string(to_string(label.subtype));
  json["rationale"] = label.rationale;
  return json;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

int cmd_classify(const ClassifyOptions& options, std::ostream& out, std::ostream&) {
  std::string labels_text;
  if (!options.run.empty()) {
    const fs::path dir = options.run;
    const Manifest manifest = Manifest::load(dir / kManifestFile);
    const auto records = read_records(dir / kRecordsFile);
    ContextBuilder contexts(manifest.get("db_root"),
                            manifest.get("db_layout") == "flat" ? DatabaseLayout::flat
                                                                : DatabaseLayout::nested);
    for (const auto& record : records) {
      if (record.correct) continue;
      const SchemaContext schema = contexts.plain(record.db_id, RenderOptions{});
      const ErrorLabel label = classify_error(record.final_sql, record.gold_sql, schema,
                                              &record.outcome, &record.gold_outcome);
      labels_text += label_json(record.item_id, label, manifest.hash()).dump() + "\n";
    }
    write_text(dir / kLabelsFile, labels_text);
    write_run_report(dir, manifest);
    out << labels_text;
    return kExitOk;
  }
  if (options.pred.empty() || options.gold.empty() || options.db.empty()) {
    throw ConfigError("classify needs --run, or all of --pred, --gold and --db");
  }
  const auto preds = read_lines(options.pred);
  const auto golds = read_lines(options.gold);
  if (preds.size() > golds.size()) {
    throw ConfigError("more predictions than reference queries");
  }
  Manifest inputs;
  inputs.set("pred_sha256", file_sha256_hex(options.pred));
  inputs.set("gold_sha256", file_sha256_hex(options.gold));
  inputs.set("db_sha256", file_sha256_hex(options.db));
  const std::string inputs_hash = inputs.hash();
  const fs::path db_path = options.db;
  DatabaseHandle db{db_path.stem().string(), db_path, Dialect::sqlite};
  const SchemaContext schema = extract_schema(db);
  std::vector<ErrorLabel> labels;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    // BIRD gold files carry "<sql>\t<db_id>".
    const std::string gold = golds[i].substr(0, golds[i].find('\t'));
    std::optional<std::string> pred;
    if (i < preds.size()) {
      std::string line = preds[i].substr(0, preds[i].find('\t'));
      if (line.find_first_not_of(" \t;") != std::string::npos) pred = line;
    }
    const ExecutionOutcome gold_outcome = execute_sql(db, gold);
    const ExecutionOutcome pred_outcome = pred ? execute_sql(db, *pred) : ExecutionOutcome{};
    if (compare_results(pred_outcome, gold_outcome, is_order_sensitive(gold))) continue;
    const ErrorLabel label = classify_error(pred, gold, schema, &pred_outcome, &gold_outcome);
    labels.push_back(label);
    labels_text += label_json(std::to_string(i), label, inputs_hash).dump() + "\n";
  }
  if (!options.out.empty()) {
    fs::create_directories(options.out);
    write_text(fs::path(options.out) / kLabelsFile, labels_text);
  }
  out << labels_text;
  return kExitOk;
}

int cmd_report(const ReportOptions& options, std::ostream& out, std::ostream& err) {
  if (options.runs.empty()) throw ConfigError("report needs at least one --runs directory");
  std::vector<Manifest> manifests;
  for (const auto& run : options.runs) manifests.push_back(Manifest::load(fs::path(run) / kManifestFile));
  const std::string digest = manifests.front().get("benchmark_sha256");
  for (std::size_t i = 1; i < manifests.size(); ++i) {
    if (manifests[i].get("benchmark_sha256") != digest) {
      err << "error: " << options.runs[i] << " was evaluated on a different benchmark than "
          << options.runs.front() << "\n";
      return kExitConfig;
    }
  }
  std::string combined;
  for (const auto& manifest : manifests) combined += manifest.hash() + "\n";
  const std::string merged_hash = sha256_hex(combined);

  std::string curves = "# manifest " + merged_hash + "\nstrategy,k,metric,value\n";
  std::string scatter = "# manifest " + merged_hash +
                        "\nstrategy,k,mean_latency_seconds,mean_tokens,ex\n";
  for (std::size_t i = 0; i < options.runs.size(); ++i) {
    const fs::path dir = options.runs[i];
    const auto records = read_records(dir / kRecordsFile);
    const EvalReport report =
        assemble_report(records, manifests[i].get("strategy"), manifests[i].hash());
    char buffer[32];
    for (const auto& [k, value] : report.pass_at_k_curve) {
      std::snprintf(buffer, sizeof buffer, "%.1f", value * 100.0);
      curves += report.strategy + "," + std::to_string(k) + ",pass_at_k," + buffer + "\n";
    }
    for (const auto& [k, value] : report.maj_at_k_curve) {
      std::snprintf(buffer, sizeof buffer, "%.1f", value * 100.0);
      curves += report.strategy + "," + std::to_string(k) + ",maj_at_k," + buffer + "\n";
    }
    std::snprintf(buffer, sizeof buffer, "%.3f", report.efficiency.mean_latency_seconds);
    std::string row = report.strategy + "," + manifests[i].get("k") + "," + buffer + ",";
    std::snprintf(buffer, sizeof buffer, "%.1f", report.efficiency.mean_tokens);
    row += buffer;
    row += "," + (report.n_items ? format_percent(report.ex_overall.correct, report.n_items)
                                 : std::string("0.0"));
    scatter += row + "\n";
    out << report.strategy << ": EX "
        << (report.n_items ? format_percent(report.ex_overall.correct, report.n_items)
                           : std::string("n/a"))
        << " over " << report.n_items << " items\n";
  }
  const fs::path dir = options.out.empty() ? fs::path(options.runs.front()) : fs::path(options.out);
  fs::create_directories(dir);
  write_text(dir / "curves.csv", curves);
  write_text(dir / "scatter.csv", scatter);
  out << "wrote " << (dir / "curves.csv").string() << " and "
      << (dir / "scatter.csv").string() << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"NL2SQL evaluation harness and agentic pipeline", "sqld1"};
  app.require_subcommand(1);

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Run a track over a benchmark");
  eval_cmd->add_option("--benchmark", eval.benchmark, "Benchmark JSON file")->required();
  eval_cmd->add_option("--format", eval.format, "bird or spider");
  eval_cmd->add_option("--db-root", eval.db_root, "Directory holding the databases")->required();
  eval_cmd->add_flag("--flat-db", eval.flat_db, "Databases live at <root>/<db_id>.sqlite");
  eval_cmd->add_option("--descriptions-root", eval.descriptions_root,
                       "Root of <db_id>/database_description CSV folders");
  eval_cmd->add_option("--track", eval.track, "greedy, sample, maj or sql-d1");
  eval_cmd->add_option("--k", eval.k, "Candidates per item");
  eval_cmd->add_option("--ablation", eval.ablation, "Components for sql-d1, e.g. a_r,a_g,a_s");
  eval_cmd->add_option("--verifier-iters", eval.verifier_iters, "Repair attempts per candidate");
  eval_cmd->add_option("--timeout", eval.timeout, "Per-query execution limit in seconds");
  eval_cmd->add_option("--backend", eval.backend, "remote or mock");
  eval_cmd->add_option("--mock-fixture", eval.mock_fixture, "Scripted replies for the mock");
  eval_cmd->add_option("--workers", eval.workers, "Items evaluated in parallel");
  eval_cmd->add_option("--seed", eval.seed, "Sampling seed");
  eval_cmd->add_option("--temperature", eval.temperature, "Sampling temperature");
  eval_cmd->add_option("--out", eval.out, "Output directory")->required();
  eval_cmd->add_flag("--resume", eval.resume, "Skip items already in the records file");

  ClassifyOptions classify;
  auto* classify_cmd = app.add_subcommand("classify", "Label incorrect predictions");
  classify_cmd->add_option("--run", classify.run, "Run directory from eval");
  classify_cmd->add_option("--pred", classify.pred, "Predicted SQL, one per line");
  classify_cmd->add_option("--gold", classify.gold, "Reference SQL, one per line");
  classify_cmd->add_option("--db", classify.db, "SQLite database file");
  classify_cmd->add_option("--out", classify.out, "Directory for labels.jsonl");

  ReportOptions report;
  auto* report_cmd = app.add_subcommand("report", "Curves and trade-off data over runs");
  report_cmd->add_option("--runs", report.runs, "Run directories")->required();
  report_cmd->add_option("--out", report.out, "Output directory");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }
  try {
    if (eval_cmd->parsed()) return cmd_eval(eval, out, err);
    if (classify_cmd->parsed()) return cmd_classify(classify, out, err);
    return cmd_report(report, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace nl2sql
