#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "nl2sql/error.hpp"
#include "nl2sql/gateway.hpp"

namespace nl2sql {
namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // without trailing slash
};

ParsedUrl parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("backend URL needs a scheme: '" + url + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl parsed;
  parsed.origin = url.substr(0, path_start);
  parsed.path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!parsed.path.empty() && parsed.path.back() == '/') parsed.path.pop_back();
  return parsed;
}

std::string env_or_empty(const char* name) {
  const char* value = std::getenv(name);
  return value ? value : "";
}

bool retryable_status(int status) { return status == 429 || status >= 500; }

}  // namespace

RemoteSettings RemoteSettings::from_env() {
  RemoteSettings settings;
  settings.url = env_or_empty("BACKEND_URL");
  settings.api_key = env_or_empty("BACKEND_API_KEY");
  settings.model = env_or_empty("BACKEND_MODEL");
  if (settings.url.empty()) {
    throw ConfigError("BACKEND_URL must be set for the remote backend");
  }
  return settings;
}

RemoteBackend::RemoteBackend(RemoteSettings settings)
    : settings_(std::move(settings)) {
  parse_url(settings_.url);
}

std::string RemoteBackend::identity() const {
  return "remote:" + settings_.url + "#" + settings_.model;
}

nlohmann::json RemoteBackend::request_body(const GenerationRequest& request,
                                           std::size_t trajectory_id) const {
  nlohmann::json body;
  if (!settings_.model.empty()) body["model"] = settings_.model;
  body["messages"] = nlohmann::json::array(
      {{{"role", "user"}, {"content", request.prompt}}});
  body["temperature"] = request.temperature;
  body["n"] = 1;
  body["max_tokens"] = request.max_new_tokens;
  if (request.seed) {
    body["seed"] = *request.seed + static_cast<std::int64_t>(trajectory_id);
  }
  for (const auto& [key, value] : request.backend_params) body[key] = value;
  return body;
}

BackendReply RemoteBackend::complete(const GenerationRequest& request,
                                     std::size_t trajectory_id) {
  const auto url = parse_url(settings_.url);
  const std::string payload = request_body(request, trajectory_id).dump();
  httplib::Headers headers;
  if (!settings_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + settings_.api_key);
  }

  std::string last_error;
  auto delay = settings_.backoff;
  for (std::size_t attempt = 0; attempt <= settings_.retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
    httplib::Client client(url.origin);
    const auto seconds = settings_.timeout.count() / 1000;
    const auto micros = (settings_.timeout.count() % 1000) * 1000;
    client.set_connection_timeout(seconds, micros);
    client.set_read_timeout(seconds, micros);
    client.set_write_timeout(seconds, micros);
    auto response = client.Post(url.path + "/chat/completions", headers,
                                payload, "application/json");
    if (!response) {
      last_error = "transport error: " + httplib::to_string(response.error());
      continue;
    }
    if (response->status != 200) {
      last_error = "HTTP " + std::to_string(response->status) + ": " +
                   response->body.substr(0, 200);
      if (retryable_status(response->status)) continue;
      throw BackendError(last_error);
    }
    try {
      const auto json = nlohmann::json::parse(response->body);
      BackendReply reply;
      const auto& content = json.at("choices").at(0).at("message").at("content");
      reply.text = content.is_string() ? content.get<std::string>() : "";
      if (json.contains("usage") && json["usage"].is_object()) {
        const auto& usage = json["usage"];
        if (usage.contains("completion_tokens")) {
          reply.usage_tokens = usage["completion_tokens"].get<std::size_t>();
        } else if (usage.contains("total_tokens")) {
          reply.usage_tokens = usage["total_tokens"].get<std::size_t>();
        }
      }
      return reply;
    } catch (const nlohmann::json::exception& e) {
      throw BackendError(std::string("malformed chat-completions response: ") +
                         e.what());
    }
  }
  throw BackendError("backend unreachable after " +
                     std::to_string(settings_.retries + 1) +
                     " attempts: " + last_error);
}

}  // namespace nl2sql
