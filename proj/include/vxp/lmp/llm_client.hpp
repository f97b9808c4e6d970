#pragma once

#include <atomic>
#include <chrono>
#include <map>
#include <cstdlib>
#include <memory>
#include <optional>
#include <string>

#include "httplib.h"
#include "json.hpp"
#include "vxp/common/error.hpp"
#include "vxp/lmp/fixtures.hpp"
#include "vxp/lmp/parser.hpp"
#include "vxp/lmp/source.hpp"

namespace vxp::lmp {

struct EndpointConfig {
  std::string base_url;
  std::string model;
  std::string api_key;
  double timeout_seconds = 60.0;
  int attempts = 3;
  double temperature = 0.0;

  /// Reads VXP_LLM_BASE_URL, VXP_LLM_MODEL, VXP_LLM_API_KEY and
  /// VXP_LLM_TIMEOUT (seconds).
  static EndpointConfig from_env() {
    EndpointConfig c;
    auto get = [](const char* k) -> std::string {
      const char* v = std::getenv(k);
      return v ? v : "";
    };
    c.base_url = get("VXP_LLM_BASE_URL");
    c.model = get("VXP_LLM_MODEL");
    c.api_key = get("VXP_LLM_API_KEY");
    if (const std::string t = get("VXP_LLM_TIMEOUT"); !t.empty()) c.timeout_seconds = std::stod(t);
    return c;
  }
};

/// Returns the first fenced code block, or the whole reply when unfenced.
inline std::string extract_code(const std::string& reply) {
  const auto open = reply.find("```");
  if (open == std::string::npos) return reply;
  auto start = reply.find('\n', open);
  if (start == std::string::npos) return {};
  ++start;
  const auto close = reply.find("```", start);
  return reply.substr(start, close == std::string::npos ? std::string::npos : close - start);
}

/// Builds a chat-completions request from a prompt bundle.
inline nlohmann::json chat_request(const EndpointConfig& cfg, const PromptBundle& bundle, const std::string& query) {
  nlohmann::json messages = nlohmann::json::array();
  messages.push_back({{"role", "system"}, {"content", bundle.preamble}});
  for (const auto& [q, p] : bundle.examples) {
    messages.push_back({{"role", "user"}, {"content", q}});
    messages.push_back({{"role", "assistant"}, {"content", "```\n" + p + "```"}});
  }
  messages.push_back({{"role", "user"}, {"content", query}});
  return {{"model", cfg.model}, {"messages", messages}, {"temperature", cfg.temperature}};
}

/// Minimal HTTP client for a chat-completions compatible endpoint.
class ChatClient {
 public:
  explicit ChatClient(EndpointConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.base_url.empty()) fail(ErrorKind::invalid_input, "endpoint mode needs VXP_LLM_BASE_URL");
  }

  const EndpointConfig& config() const { return cfg_; }

  /// One request; throws io on transport or HTTP errors.
  std::string complete(const PromptBundle& bundle, const std::string& query) const {
    auto [origin, prefix] = split_url(cfg_.base_url);
    httplib::Client cli(origin);
    const auto secs = std::chrono::duration<double>(cfg_.timeout_seconds);
    const auto us = std::chrono::duration_cast<std::chrono::microseconds>(secs);
    cli.set_connection_timeout(us);
    cli.set_read_timeout(us);
    cli.set_write_timeout(us);
    httplib::Headers headers;
    if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);
    const std::string body = chat_request(cfg_, bundle, query).dump();
    auto res = cli.Post(prefix + "/chat/completions", headers, body, "application/json");
    if (!res) fail(ErrorKind::io, "endpoint request failed: " + httplib::to_string(res.error()));
    if (res->status != 200) fail(ErrorKind::io, "endpoint returned HTTP " + std::to_string(res->status));
    const auto j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded()) fail(ErrorKind::io, "endpoint returned invalid JSON");
    try {
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception&) {
      fail(ErrorKind::io, "endpoint reply has no choices[0].message.content");
    }
  }

 private:
  EndpointConfig cfg_;

  static std::pair<std::string, std::string> split_url(const std::string& url) {
    const auto scheme = url.find("://");
    const auto path = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    std::string origin = path == std::string::npos ? url : url.substr(0, path);
    std::string prefix = path == std::string::npos ? "" : url.substr(path);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {origin, prefix};
  }
};

/// Endpoint-backed program source. A reply that is unreachable or does not
/// parse counts as a failed attempt.
class EndpointSource : public ProgramSource {
 public:
  EndpointSource(EndpointConfig cfg, std::map<LmpKind, PromptBundle> prompts)
      : client_(std::move(cfg)), prompts_(std::move(prompts)) {}

  std::string generate(LmpKind kind, const std::string& query, int sample) override {
    auto it = prompts_.find(kind);
    if (it == prompts_.end()) fail(ErrorKind::generation, "no prompt bundle for " + std::string(to_string(kind)));
    // Sampled alternatives are requested by tagging the query.
    const std::string q = sample > 0 ? query + " (alternative " + std::to_string(sample) + ")" : query;
    std::string last;
    const int attempts = std::max(1, client_.config().attempts);
    for (int a = 0; a < attempts; ++a) {
      try {
        ++calls_;
        std::string code = extract_code(client_.complete(it->second, q));
        parse_program(code);
        return code;
      } catch (const Error& e) {
        last = e.what();
      }
    }
    fail(ErrorKind::generation, "no valid " + std::string(to_string(kind)) + " program after " +
                                    std::to_string(attempts) + " attempts: " + last);
  }

  long endpoint_calls() const override { return calls_; }

 private:
  ChatClient client_;
  std::map<LmpKind, PromptBundle> prompts_;
  std::atomic<long> calls_{0};
};

}  // namespace vxp::lmp
