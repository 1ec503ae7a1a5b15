#include <cstdlib>
#include <regex>

#include <httplib.h>

#include "extendattack/error.hpp"
#include "extendattack/harness.hpp"

namespace extendattack::harness {

nlohmann::json to_wire(const ChatRequest& request) {
  nlohmann::json body;
  body["model"] = request.model;
  body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}});
  body["temperature"] = request.temperature;
  body["top_p"] = request.top_p;
  if (request.max_tokens) body["max_tokens"] = *request.max_tokens;
  return body;
}

ChatResponse from_wire(int status, std::string_view body) {
  ChatResponse response;
  response.status = status;
  nlohmann::json json = nlohmann::json::parse(body, nullptr, false);
  if (status != 200) {
    if (!json.is_discarded() && json.contains("error")) {
      const auto& err = json["error"];
      response.error = err.is_object() ? err.value("message", err.dump()) : err.dump();
    } else {
      response.error = std::string(body.substr(0, 200));
    }
    if (response.error.empty()) response.error = "HTTP error";
    return response;
  }
  if (json.is_discarded()) {
    response.error = "response is not JSON";
    return response;
  }
  try {
    response.content = json.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    response.error = "response has no choices[0].message.content";
    return response;
  }
  if (json.contains("usage") && json["usage"].is_object()) {
    const auto& usage = json["usage"];
    if (usage.contains("completion_tokens") && usage["completion_tokens"].is_number_integer()) {
      response.completion_tokens = usage["completion_tokens"].get<long>();
    }
  }
  return response;
}

HttpChatClient::HttpChatClient(EndpointConfig config) : config_(std::move(config)) {
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(config_.base_url, m, kUrl)) {
    throw Error(ErrorCode::kConfiguration, "base URL '" + config_.base_url + "' is not http(s)://host[:port][/path]");
  }
  scheme_host_port_ = m.str(1);
  path_ = m.str(2);
  while (!path_.empty() && path_.back() == '/') path_.pop_back();
  path_ += "/chat/completions";
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
  }
}

ChatResponse HttpChatClient::complete(const ChatRequest& request) {
  httplib::Client client(scheme_host_port_);
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - seconds);
  client.set_connection_timeout(seconds.count(), micros.count());
  client.set_read_timeout(seconds.count(), micros.count());
  client.set_write_timeout(seconds.count(), micros.count());
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  auto result = client.Post(path_, headers, to_wire(request).dump(), "application/json");
  if (!result) {
    ChatResponse response;
    response.error = "transport error: " + httplib::to_string(result.error());
    return response;
  }
  return from_wire(result->status, result->body);
}

}  // namespace extendattack::harness
