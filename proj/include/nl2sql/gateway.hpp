#pragma once

// Generation backends (remote chat-completions service or scripted mock) and
// SQL extraction from raw model output.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace nl2sql {

inline constexpr double kSamplingTemperature = 0.8;

struct GenerationRequest {
  std::string prompt;
  double temperature = kSamplingTemperature;
  std::size_t max_new_tokens = 2048;
  std::size_t num_candidates = 1;
  // Forwarded verbatim to the backend (e.g. diffusion block or window size).
  std::vector<std::pair<std::string, std::string>> backend_params;
  std::optional<std::int64_t> seed;

  // Throws ConfigError when temperature or num_candidates is out of range.
  void validate() const;
};

struct Candidate {
  std::size_t trajectory_id = 0;
  std::string raw_text;
  std::optional<std::string> extracted_sql;
  double latency_seconds = 0.0;
  std::size_t token_count = 0;
  bool tokens_approximate = false;
  // Set when the backend call failed; raw_text is then empty.
  std::optional<std::string> failure;
};

struct BackendReply {
  std::string text;
  std::optional<std::size_t> usage_tokens;
  // Backends that simulate timing report it here instead of being measured.
  std::optional<double> latency_seconds;
};

class Backend {
 public:
  virtual ~Backend() = default;
  // One trajectory; throws BackendError on transport failure.
  virtual BackendReply complete(const GenerationRequest& request,
                                std::size_t trajectory_id) = 0;
  virtual std::string identity() const = 0;
};

// Table-driven scripted backend. Entries are tried in file order; the first
// one whose prompt pattern and trajectory id match supplies the reply.
class MockBackend : public Backend {
 public:
  enum class Match { exact, substring };

  struct Entry {
    Match match = Match::substring;
    std::string prompt;
    std::optional<std::size_t> trajectory_id;
    std::string reply;
    std::optional<std::size_t> usage_tokens;
    std::optional<double> latency_seconds;
  };

  MockBackend(std::vector<Entry> entries, std::string default_reply = {});
  MockBackend(MockBackend&& other) noexcept
      : entries_(std::move(other.entries_)),
        default_reply_(std::move(other.default_reply_)),
        calls_(other.calls_.load()),
        prompts_(std::move(other.prompts_)) {}

  // Accepts an array of entries or {"default_reply": ..., "entries": [...]}.
  static MockBackend from_json(const nlohmann::json& fixture);
  static MockBackend from_file(const std::filesystem::path& path);

  BackendReply complete(const GenerationRequest& request,
                        std::size_t trajectory_id) override;
  std::string identity() const override;

  std::size_t call_count() const { return calls_.load(); }
  // Prompts seen so far, in call order.
  std::vector<std::string> prompts() const;

 private:
  std::vector<Entry> entries_;
  std::string default_reply_;
  std::atomic<std::size_t> calls_{0};
  mutable std::mutex mutex_;
  std::vector<std::string> prompts_;
};

struct RemoteSettings {
  std::string url;  // base URL; requests go to <url>/chat/completions
  std::string api_key;
  std::string model;
  std::chrono::milliseconds timeout{120'000};
  std::size_t retries = 2;
  std::chrono::milliseconds backoff{500};

  // Reads BACKEND_URL, BACKEND_API_KEY and BACKEND_MODEL.
  static RemoteSettings from_env();
};

// Chat-completions client. Each trajectory is one request with n = 1.
class RemoteBackend : public Backend {
 public:
  explicit RemoteBackend(RemoteSettings settings);

  BackendReply complete(const GenerationRequest& request,
                        std::size_t trajectory_id) override;
  std::string identity() const override;

  // Request body for one trajectory, exposed for wire-format tests.
  nlohmann::json request_body(const GenerationRequest& request,
                              std::size_t trajectory_id) const;

 private:
  RemoteSettings settings_;
};

inline constexpr std::size_t kDefaultMaxInFlight = 8;

class Gateway {
 public:
  explicit Gateway(Backend& backend,
                   std::size_t max_in_flight = kDefaultMaxInFlight);

  // Exactly num_candidates candidates with ids 0..n-1. Never throws for
  // backend failures; those surface as Candidate::failure.
  std::vector<Candidate> generate(const GenerationRequest& request);

  Backend& backend() const { return backend_; }

 private:
  Candidate fetch(const GenerationRequest& request, std::size_t trajectory_id);

  Backend& backend_;
  std::counting_semaphore<1024> in_flight_;
};

std::optional<std::string> extract_sql(std::string_view raw_text);

// Backend usage when reported, otherwise a whitespace-token approximation.
std::size_t count_tokens(std::string_view raw_text,
                         std::optional<std::size_t> backend_usage);

}  // namespace nl2sql
