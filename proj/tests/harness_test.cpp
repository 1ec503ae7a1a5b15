#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include "extendattack/error.hpp"
#include "extendattack/harness.hpp"
#include "extendattack/mock_server.hpp"

using namespace extendattack;
using namespace extendattack::harness;

namespace {

std::vector<DatasetItem> items(std::size_t n) {
  std::vector<DatasetItem> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({"item-" + std::to_string(i), "def f" + std::to_string(i) + "(x):\n    return x\n", "ok"});
  }
  return out;
}

transform::ObfuscationConfig attack_config(double ratio = 0.5) {
  transform::ObfuscationConfig c;
  c.ratio = ratio;
  c.seed = 17;
  return c;
}

RunOptions fast_options() {
  RunOptions o;
  o.retry.initial_backoff = std::chrono::milliseconds(1);
  return o;
}

CompletionResult result(const std::string& id, long length, bool error = false, const std::string& output = "") {
  CompletionResult r;
  r.item_id = id;
  r.response_length = length;
  r.output_text = output;
  if (error) r.error = "boom";
  return r;
}

// Backend answering from a table, counting calls per prompt.
class ScriptedBackend final : public ChatBackend {
 public:
  std::vector<ChatResponse> script;
  std::atomic<int> calls{0};
  ChatResponse complete(const ChatRequest&) override {
    const int i = calls++;
    return script[std::min<std::size_t>(i, script.size() - 1)];
  }
};

}  // namespace

TEST_CASE("dataset parsing") {
  std::istringstream ok(R"({"id": "a", "prompt": "p"}

{"id": 3, "prompt": "q", "reference": "r"})");
  const auto parsed = parse_dataset(ok);
  REQUIRE(parsed.size() == 2);
  CHECK(parsed[1].id == "3");
  CHECK(parsed[1].reference == "r");

  std::istringstream dup("{\"id\": \"a\", \"prompt\": \"p\"}\n{\"id\": \"a\", \"prompt\": \"q\"}\n");
  try {
    parse_dataset(dup);
    FAIL("expected duplicate id");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDuplicateId);
  }
  std::istringstream bad("{\"id\": \"a\", \"prompt\": \"p\"}\n{broken\n");
  try {
    parse_dataset(bad);
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kParseError);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(load_dataset("/nonexistent/data.jsonl"), Error);
}

TEST_CASE("wire format") {
  ChatRequest req{"o3", "hi", 0.6, 0.95, 128};
  const auto wire = to_wire(req);
  CHECK(wire["model"] == "o3");
  CHECK(wire["messages"][0]["role"] == "user");
  CHECK(wire["messages"][0]["content"] == "hi");
  CHECK(wire["max_tokens"] == 128);
  const auto resp = from_wire(200, R"({"choices":[{"message":{"content":"x y"}}],"usage":{"completion_tokens":9}})");
  CHECK(resp.ok());
  CHECK(resp.content == "x y");
  CHECK(resp.completion_tokens == 9);
  CHECK_FALSE(from_wire(200, "not json").ok());
  CHECK(from_wire(503, "").transient());
  CHECK(from_wire(429, "").transient());
  CHECK_FALSE(from_wire(400, "").transient());
  CHECK(whitespace_token_count("  a b\n c\t") == 3);
}

TEST_CASE("mock replies follow the scenario") {
  const auto s = builtin_scenario("case-study");
  const auto clean = nlohmann::json::parse(mock_reply(s, to_wire({"m", "plain prompt"}).dump()).second);
  CHECK(clean["usage"]["completion_tokens"] == 331);
  const auto attacked = nlohmann::json::parse(mock_reply(s, to_wire({"m", "x<(4)1210>"}).dump()).second);
  CHECK(attacked["usage"]["completion_tokens"] == 1508);
  CHECK(whitespace_token_count(attacked["choices"][0]["message"]["content"].get<std::string>()) == 1508);
  CHECK(mock_reply(s, "garbage").first == 400);

  const auto affine = builtin_scenario("affine");
  std::string prompt;
  for (int i = 0; i < 15; ++i) prompt += "<(2)1100001>";
  CHECK(nlohmann::json::parse(mock_reply(affine, to_wire({"m", prompt}).dump()).second)["usage"]["completion_tokens"] ==
        700);
  CHECK_THROWS_AS(builtin_scenario("nope"), Error);

  const auto custom = scenario_from_json(nlohmann::json::parse(
      R"({"name": "c", "rules": [{"when": "contains", "text": "magic", "completion_tokens": 5}], "fallback": {"status": 500}})"));
  CHECK(mock_reply(custom, to_wire({"m", "a magic word"}).dump()).first == 200);
  CHECK(mock_reply(custom, to_wire({"m", "other"}).dump()).first == 500);
}

TEST_CASE("end-to-end against the mock server") {
  auto scenario = builtin_scenario("o3-humaneval");
  scenario.delay = std::chrono::milliseconds(20);
  MockServer server(scenario);
  HttpChatClient client({server.base_url(), "", std::chrono::milliseconds(5000)});
  const auto data = items(12);
  RunOptions options = fast_options();
  options.concurrency = 3;
  const auto da = run_condition(data, Condition::direct(), client, options);
  const auto ea = run_condition(data, Condition::extend_attack(attack_config()), client, options);
  CHECK(server.requests() == 24);
  CHECK(server.max_in_flight() <= 3);
  CHECK(server.max_in_flight() >= 2);
  REQUIRE(da.size() == 12);
  for (std::size_t i = 0; i < da.size(); ++i) {
    CHECK(da[i].item_id == data[i].id);
    CHECK(da[i].response_length == 757);
    CHECK(ea[i].response_length == 1928);
    CHECK(ea[i].length_source == LengthSource::kProviderUsage);
    CHECK(ea[i].prompt == condition_prompt(data[i], Condition::extend_attack(attack_config())));
    CHECK(ea[i].obfuscated_tokens > 0);
  }
  const auto report = compute_metrics(da, ea);
  CHECK(report.aggregates.included == 12);
  CHECK(report.aggregates.mean_amplification == doctest::Approx(1928.0 / 757.0));
  CHECK(report.aggregates.ratio_of_means == doctest::Approx(1928.0 / 757.0));
}

TEST_CASE("transient failures are retried") {
  auto scenario = builtin_scenario("case-study");
  scenario.fail_first = 2;
  MockServer server(scenario);
  HttpChatClient client({server.base_url(), "", std::chrono::milliseconds(5000)});
  RunOptions options = fast_options();
  options.concurrency = 1;
  const auto results = run_condition(items(1), Condition::direct(), client, options);
  REQUIRE(results.size() == 1);
  CHECK_FALSE(results[0].error);
  CHECK(results[0].attempts == 3);
  CHECK(server.requests() == 3);
}

TEST_CASE("retry stops at the attempt limit and skips permanent errors") {
  ScriptedBackend transient;
  transient.script = {{503, "", std::nullopt, "unavailable"}};
  RunOptions options = fast_options();
  auto r = run_condition(items(1), Condition::direct(), transient, options);
  CHECK(r[0].error);
  CHECK(r[0].attempts == 3);
  CHECK(transient.calls == 3);

  ScriptedBackend permanent;
  permanent.script = {{400, "", std::nullopt, "bad request"}};
  r = run_condition(items(1), Condition::direct(), permanent, options);
  CHECK(r[0].error);
  CHECK(permanent.calls == 1);

  ScriptedBackend no_usage;
  no_usage.script = {{200, "one two three", std::nullopt, ""}};
  r = run_condition(items(1), Condition::direct(), no_usage, options);
  CHECK(r[0].response_length == 3);
  CHECK(r[0].length_source == LengthSource::kWhitespaceApprox);

  options.concurrency = 0;
  CHECK_THROWS_AS(run_condition(items(1), Condition::direct(), no_usage, options), Error);
}

TEST_CASE("metrics exclusion and pairing") {
  std::vector<CompletionResult> base = {result("a", 100), result("b", 200), result("c", 50), result("d", 10)};
  std::vector<CompletionResult> attack = {result("a", 300), result("b", 200, true), result("c", 150),
                                          result("e", 1)};
  const auto report = compute_metrics(base, attack);
  CHECK(report.aggregates.items == 3);
  CHECK(report.aggregates.included == 2);
  CHECK(report.aggregates.excluded == 1);
  CHECK(report.aggregates.unmatched == 2);
  CHECK(report.aggregates.mean_baseline_length == doctest::Approx(75.0));
  CHECK(report.aggregates.mean_attack_length == doctest::Approx(225.0));
  CHECK(report.aggregates.mean_amplification == doctest::Approx(3.0));
  CHECK(report.aggregates.ratio_of_means == doctest::Approx(3.0));
  for (const auto& row : report.rows) {
    if (row.id == "b") CHECK(row.excluded);
  }
  std::vector<CompletionResult> other = {result("z", 1)};
  CHECK_THROWS_AS(compute_metrics(base, other), Error);
}

TEST_CASE("metrics average repeated samples and grade") {
  std::vector<DatasetItem> data = {{"a", "p", "42"}};
  std::vector<CompletionResult> base = {result("a", 100, false, "42"), result("a", 300, false, "41")};
  base[1].sample = 1;
  std::vector<CompletionResult> attack = {result("a", 800, false, " 42\n"), result("a", 400, false, "42")};
  attack[1].sample = 1;
  ExactMatchGrader grader;
  const auto report = compute_metrics(base, attack, &grader, data);
  REQUIRE(report.rows.size() == 1);
  CHECK(*report.rows[0].baseline_length == doctest::Approx(200.0));
  CHECK(*report.rows[0].attack_length == doctest::Approx(600.0));
  CHECK(*report.rows[0].amplification == doctest::Approx(3.0));
  CHECK(*report.aggregates.baseline_accuracy == doctest::Approx(0.5));
  CHECK(*report.aggregates.attack_accuracy == doctest::Approx(1.0));
}

TEST_CASE("command grader") {
  DatasetItem item{"a", "p", "hello"};
  CommandGrader cmp("cmp -s");
  CHECK(cmp.grade(item, "hello"));
  CHECK_FALSE(cmp.grade(item, "bye"));
}

TEST_CASE("rho sweep against an affine mock") {
  MockServer server(builtin_scenario("affine"));
  HttpChatClient client({server.base_url(), "", std::chrono::milliseconds(5000)});
  std::vector<DatasetItem> data = {{"q", "import numpy as np\ndef solve(values):\n    return sum(values)\n", {}}};
  std::vector<double> rhos;
  for (int i = 0; i <= 10; ++i) rhos.push_back(i / 10.0);
  const auto table = sweep_rho(data, rhos, attack_config(), client, fast_options());
  REQUIRE(table.rows.size() == 11);
  CHECK(table.rows[0].report.aggregates.mean_attack_length == doctest::Approx(300.0));
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    CHECK(table.rows[i].report.aggregates.mean_attack_length >=
          table.rows[i - 1].report.aggregates.mean_attack_length);
  }
  CHECK(table.rows.back().report.aggregates.mean_attack_length == doctest::Approx(700.0));
  std::ostringstream csv;
  write_sweep_csv(table, csv);
  CHECK(csv.str().rfind("rho,mean_response_length,mean_baseline_length,mean_amplification,accuracy,excluded\n", 0) == 0);
  std::vector<double> bad = {1.5};
  CHECK_THROWS_AS(sweep_rho(data, bad, attack_config(), client, fast_options()), Error);
}
