#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

namespace httplib {
class Server;
}

namespace extendattack::harness {

/// completion_tokens = base + per_token * min(tokens, plateau_tokens), where
/// `tokens` is the number of valid obfuscation tokens in the prompt.
struct AffineLength {
  long base = 0;
  long per_token = 0;
  std::optional<std::size_t> plateau_tokens;

  long evaluate(std::size_t tokens) const;
};

struct MockResponse {
  int status = 200;
  long completion_tokens = 0;
  std::optional<AffineLength> affine;  // overrides completion_tokens
  std::optional<std::string> content;  // default: completion_tokens words
};

struct MockRule {
  enum class Predicate {
    kAlways,
    kHasTokens,     // at least min_tokens valid obfuscation tokens
    kNoTokens,
    kContains,      // prompt contains `text`
    kContainsNote,  // prompt contains a built-in decoding note
  };
  Predicate predicate = Predicate::kAlways;
  std::size_t min_tokens = 1;
  std::string text;
  MockResponse response;
};

/// Canned behaviour for the mock endpoint. Rules are tried in order; the
/// first match answers. Without a match the fallback answers, or the request
/// is rejected with 400.
struct MockScenario {
  std::string name;
  std::vector<MockRule> rules;
  std::optional<MockResponse> fallback;
  std::chrono::milliseconds delay{0};  // per request, to exercise concurrency
  std::size_t fail_first = 0;          // first N requests answer 503
};

/// "case-study", "o3-humaneval", "affine" (300 + 40 per token, plateau
/// at 10 tokens). Throws Error(kConfiguration) for other names.
MockScenario builtin_scenario(std::string_view name);
std::vector<std::string> builtin_scenario_names();

/// Reads a scenario document:
/// {"name", "rules": [{"when": "always|has_tokens|no_tokens|contains|contains_note",
///   "min_tokens", "text", "status", "completion_tokens", "content",
///   "affine": {"base", "per_token", "plateau_tokens"}}], "fallback": {...},
///   "delay_ms", "fail_first"}
MockScenario scenario_from_json(const nlohmann::json& json);

/// Answers a chat-completions request body with (status, response body).
/// Pure apart from the scenario; used by the server and directly in tests.
std::pair<int, std::string> mock_reply(const MockScenario& scenario, std::string_view request_body);

/// Local chat-completions endpoint on 127.0.0.1 serving a scenario from a
/// background thread. Stops on destruction.
class MockServer {
 public:
  explicit MockServer(MockScenario scenario);
  ~MockServer();
  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  int port() const noexcept { return port_; }
  /// http://127.0.0.1:<port>/v1
  std::string base_url() const;

  std::size_t requests() const noexcept { return requests_.load(); }
  std::size_t max_in_flight() const noexcept { return max_in_flight_.load(); }

  void stop();

 private:
  MockScenario scenario_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<std::size_t> requests_{0};
  std::atomic<std::size_t> in_flight_{0};
  std::atomic<std::size_t> max_in_flight_{0};
};

}  // namespace extendattack::harness
