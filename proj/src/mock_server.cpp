#include "extendattack/mock_server.hpp"

#include <algorithm>

#include <httplib.h>

#include "extendattack/defense.hpp"
#include "extendattack/error.hpp"
#include "extendattack/harness.hpp"
#include "extendattack/transform.hpp"

namespace extendattack::harness {
namespace {

std::string filler_words(long count) {
  std::string out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0L)) * 4);
  for (long i = 0; i < count; ++i) {
    if (i > 0) out.push_back(' ');
    out += "tok";
  }
  return out;
}

bool contains_note(std::string_view prompt) {
  for (const std::string& note : transform::known_note_templates()) {
    if (prompt.find(note) != std::string_view::npos) return true;
  }
  return false;
}

std::string error_body(std::string_view message) {
  nlohmann::json body;
  body["error"] = {{"message", message}, {"type", "invalid_request_error"}};
  return body.dump();
}

MockRule::Predicate parse_predicate(std::string_view when) {
  if (when == "always") return MockRule::Predicate::kAlways;
  if (when == "has_tokens") return MockRule::Predicate::kHasTokens;
  if (when == "no_tokens") return MockRule::Predicate::kNoTokens;
  if (when == "contains") return MockRule::Predicate::kContains;
  if (when == "contains_note") return MockRule::Predicate::kContainsNote;
  throw Error(ErrorCode::kConfiguration, "unknown mock predicate '" + std::string(when) + "'");
}

MockResponse parse_response(const nlohmann::json& json) {
  MockResponse response;
  response.status = json.value("status", 200);
  response.completion_tokens = json.value("completion_tokens", 0L);
  if (json.contains("content")) response.content = json["content"].get<std::string>();
  if (json.contains("affine")) {
    const auto& a = json["affine"];
    AffineLength affine;
    affine.base = a.value("base", 0L);
    affine.per_token = a.value("per_token", 0L);
    if (a.contains("plateau_tokens")) affine.plateau_tokens = a["plateau_tokens"].get<std::size_t>();
    response.affine = affine;
  }
  return response;
}

MockResponse fixed(long tokens) {
  MockResponse r;
  r.completion_tokens = tokens;
  return r;
}

MockScenario clean_vs_obfuscated(std::string name, long clean_tokens, long attack_tokens) {
  MockScenario s;
  s.name = std::move(name);
  s.rules.push_back({MockRule::Predicate::kHasTokens, 1, {}, fixed(attack_tokens)});
  s.rules.push_back({MockRule::Predicate::kAlways, 1, {}, fixed(clean_tokens)});
  return s;
}

}  // namespace

long AffineLength::evaluate(std::size_t tokens) const {
  const std::size_t effective = plateau_tokens ? std::min(tokens, *plateau_tokens) : tokens;
  return base + per_token * static_cast<long>(effective);
}

MockScenario builtin_scenario(std::string_view name) {
  // Response lengths of the strlen case study and of o3 on HumanEval.
  if (name == "case-study" || name == "appendixB") return clean_vs_obfuscated("case-study", 331, 1508);
  if (name == "o3-humaneval" || name == "table1-o3-humaneval") {
    return clean_vs_obfuscated("o3-humaneval", 757, 1928);
  }
  if (name == "affine") {
    MockScenario s;
    s.name = "affine";
    MockResponse r;
    r.affine = AffineLength{300, 40, 10};
    s.rules.push_back({MockRule::Predicate::kAlways, 1, {}, r});
    return s;
  }
  throw Error(ErrorCode::kConfiguration, "unknown mock scenario '" + std::string(name) + "'");
}

std::vector<std::string> builtin_scenario_names() { return {"case-study", "o3-humaneval", "affine"}; }

MockScenario scenario_from_json(const nlohmann::json& json) {
  try {
    MockScenario s;
    s.name = json.value("name", "custom");
    for (const auto& rule_json : json.value("rules", nlohmann::json::array())) {
      MockRule rule;
      rule.predicate = parse_predicate(rule_json.value("when", "always"));
      rule.min_tokens = rule_json.value("min_tokens", std::size_t{1});
      rule.text = rule_json.value("text", "");
      rule.response = parse_response(rule_json);
      s.rules.push_back(std::move(rule));
    }
    if (json.contains("fallback")) s.fallback = parse_response(json["fallback"]);
    s.delay = std::chrono::milliseconds(json.value("delay_ms", 0L));
    s.fail_first = json.value("fail_first", std::size_t{0});
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfiguration, std::string("malformed mock scenario: ") + e.what());
  }
}

std::pair<int, std::string> mock_reply(const MockScenario& scenario, std::string_view request_body) {
  const nlohmann::json request = nlohmann::json::parse(request_body, nullptr, false);
  if (request.is_discarded() || !request.is_object()) return {400, error_body("request body is not JSON")};
  if (!request.contains("model") || !request["model"].is_string() || !request.contains("messages") ||
      !request["messages"].is_array() || request["messages"].empty()) {
    return {400, error_body("request needs \"model\" and a non-empty \"messages\" array")};
  }
  std::string prompt;
  for (const auto& message : request["messages"]) {
    if (message.value("role", "") == "user" && message.contains("content") && message["content"].is_string()) {
      prompt = message["content"].get<std::string>();
    }
  }
  const std::size_t tokens = defense::detect(prompt).token_count;

  const MockResponse* chosen = nullptr;
  for (const MockRule& rule : scenario.rules) {
    bool match = false;
    switch (rule.predicate) {
      case MockRule::Predicate::kAlways: match = true; break;
      case MockRule::Predicate::kHasTokens: match = tokens >= rule.min_tokens; break;
      case MockRule::Predicate::kNoTokens: match = tokens == 0; break;
      case MockRule::Predicate::kContains: match = prompt.find(rule.text) != std::string::npos; break;
      case MockRule::Predicate::kContainsNote: match = contains_note(prompt); break;
    }
    if (match) {
      chosen = &rule.response;
      break;
    }
  }
  if (chosen == nullptr && scenario.fallback) chosen = &*scenario.fallback;
  if (chosen == nullptr) return {400, error_body("no scenario rule matches the request")};
  if (chosen->status != 200) return {chosen->status, error_body("scenario status " + std::to_string(chosen->status))};

  const long completion = chosen->affine ? chosen->affine->evaluate(tokens) : chosen->completion_tokens;
  const long prompt_tokens = static_cast<long>(whitespace_token_count(prompt));
  nlohmann::ordered_json body;
  body["id"] = "chatcmpl-mock";
  body["object"] = "chat.completion";
  body["model"] = request["model"];
  nlohmann::ordered_json message;
  message["role"] = "assistant";
  message["content"] = chosen->content.value_or(filler_words(completion));
  nlohmann::ordered_json choice;
  choice["index"] = 0;
  choice["message"] = std::move(message);
  choice["finish_reason"] = "stop";
  body["choices"] = nlohmann::ordered_json::array({std::move(choice)});
  body["usage"] = {{"prompt_tokens", prompt_tokens},
                   {"completion_tokens", completion},
                   {"total_tokens", prompt_tokens + completion}};
  return {200, body.dump()};
}

MockServer::MockServer(MockScenario scenario)
    : scenario_(std::move(scenario)), server_(std::make_unique<httplib::Server>()) {
  server_->new_task_queue = [] { return new httplib::ThreadPool(64); };
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    const std::size_t index = requests_++;
    const std::size_t now = ++in_flight_;
    std::size_t seen = max_in_flight_.load();
    while (now > seen && !max_in_flight_.compare_exchange_weak(seen, now)) {
    }
    if (scenario_.delay.count() > 0) std::this_thread::sleep_for(scenario_.delay);
    if (index < scenario_.fail_first) {
      res.status = 503;
      res.set_content(error_body("simulated overload"), "application/json");
    } else {
      auto [status, body] = mock_reply(scenario_, req.body);
      res.status = status;
      res.set_content(body, "application/json");
    }
    --in_flight_;
  };
  server_->Post("/v1/chat/completions", handler);
  server_->Post("/chat/completions", handler);
  port_ = server_->bind_to_any_port("127.0.0.1");
  if (port_ <= 0) throw Error(ErrorCode::kIo, "mock server could not bind a port");
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

MockServer::~MockServer() { stop(); }

void MockServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::string MockServer::base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

}  // namespace extendattack::harness
