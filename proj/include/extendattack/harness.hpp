#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "extendattack/transform.hpp"

namespace extendattack::harness {

struct DatasetItem {
  std::string id;
  std::string prompt;
  std::optional<std::string> reference;
};

/// JSONL, one {id, prompt[, reference]} object per line; blank lines are
/// skipped. Numeric ids are accepted and kept in their JSON text form.
/// Throws Error(kParseError) naming the line, or Error(kDuplicateId).
std::vector<DatasetItem> parse_dataset(std::istream& in);
/// Throws Error(kIo) if the file cannot be opened.
std::vector<DatasetItem> load_dataset(const std::string& path);

// ---------------------------------------------------------------------------
// Chat completions

struct ChatRequest {
  std::string model;
  std::string prompt;  // sent as the single user message
  double temperature = 0.6;
  double top_p = 0.95;
  std::optional<int> max_tokens;
};

struct ChatResponse {
  int status = 0;  // HTTP status, 0 for transport failure
  std::string content;
  std::optional<long> completion_tokens;
  std::string error;

  bool ok() const noexcept { return status == 200 && error.empty(); }
  /// Transport failures, 429 and 5xx.
  bool transient() const noexcept { return status == 0 || status == 429 || status >= 500; }
};

/// One attempt at a chat completion. Implementations must be safe to call
/// from several threads at once.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
};

/// Request body in the chat-completions wire format.
nlohmann::json to_wire(const ChatRequest& request);
/// Parses choices[0].message.content and usage.completion_tokens.
ChatResponse from_wire(int status, std::string_view body);

struct EndpointConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key_env = "OPENAI_API_KEY";
  std::chrono::milliseconds timeout{120000};
};

/// OpenAI-compatible client: POST {base_url}/chat/completions with a bearer
/// token read from the environment variable named in the config.
class HttpChatClient final : public ChatBackend {
 public:
  /// Throws Error(kConfiguration) for a malformed base URL.
  explicit HttpChatClient(EndpointConfig config);
  ChatResponse complete(const ChatRequest& request) override;

 private:
  EndpointConfig config_;
  std::string scheme_host_port_;
  std::string path_;
  std::string api_key_;
};

// ---------------------------------------------------------------------------
// Runs

enum class LengthSource { kProviderUsage, kWhitespaceApprox };
std::string_view to_string(LengthSource source);

/// Whitespace-separated word count, used when the provider reports no usage.
std::size_t whitespace_token_count(std::string_view text);

struct Condition {
  enum class Kind { kDirectAnswer, kExtendAttack };
  Kind kind = Kind::kDirectAnswer;
  transform::ObfuscationConfig attack;  // kExtendAttack only; seed is the master seed

  static Condition direct() { return {}; }
  static Condition extend_attack(transform::ObfuscationConfig config) {
    return {Kind::kExtendAttack, std::move(config)};
  }
  std::string label() const { return kind == Kind::kDirectAnswer ? "DA" : "ExtendAttack"; }
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};  // doubled after each failure
};

struct RunOptions {
  std::string model = "o3";
  double temperature = 0.6;
  double top_p = 0.95;
  std::optional<int> max_tokens;
  std::size_t concurrency = 4;
  int repeat = 1;  // samples per item
  RetryPolicy retry;
};

struct CompletionResult {
  std::string item_id;
  int sample = 0;
  std::string condition;  // "DA" or "ExtendAttack"
  std::string prompt;     // exactly what was sent
  std::size_t obfuscated_tokens = 0;
  std::string output_text;
  long response_length = 0;
  LengthSource length_source = LengthSource::kWhitespaceApprox;
  double latency_ms = 0.0;
  int attempts = 0;
  std::optional<std::string> error;
};

/// Sends every item (repeat times) under `condition` with at most
/// options.concurrency requests in flight. Results come back in dataset
/// order, samples adjacent. Per-item failures are recorded in the result;
/// invalid options throw Error(kConfiguration) before any request is made.
std::vector<CompletionResult> run_condition(std::span<const DatasetItem> items, const Condition& condition,
                                            ChatBackend& backend, const RunOptions& options);

/// The prompt run_condition sends for an item.
std::string condition_prompt(const DatasetItem& item, const Condition& condition,
                             std::size_t* obfuscated_tokens = nullptr);

// ---------------------------------------------------------------------------
// Grading and metrics

class Grader {
 public:
  virtual ~Grader() = default;
  virtual bool grade(const DatasetItem& item, std::string_view output) const = 0;
};

/// Correct iff the output equals the reference after trimming surrounding
/// whitespace. Items without a reference are graded incorrect.
class ExactMatchGrader final : public Grader {
 public:
  bool grade(const DatasetItem& item, std::string_view output) const override;
};

/// Runs `command <output-file> <reference-file>` through the shell; exit
/// status 0 means correct. The command is expected to do its own sandboxing.
class CommandGrader final : public Grader {
 public:
  explicit CommandGrader(std::string command) : command_(std::move(command)) {}
  bool grade(const DatasetItem& item, std::string_view output) const override;

 private:
  std::string command_;
};

struct ItemRow {
  std::string id;
  std::optional<double> baseline_length;  // mean over samples
  std::optional<double> attack_length;
  std::optional<double> amplification;  // attack / baseline, baseline > 0
  std::optional<double> baseline_accuracy;
  std::optional<double> attack_accuracy;
  bool excluded = false;
  std::string exclusion_reason;
};

struct Aggregates {
  std::size_t items = 0;  // ids present in both conditions
  std::size_t included = 0;
  std::size_t excluded = 0;
  std::size_t unmatched = 0;  // ids present in only one condition
  double mean_baseline_length = 0.0;
  double mean_attack_length = 0.0;
  double mean_amplification = 0.0;  // over rows with a defined amplification
  double ratio_of_means = 0.0;
  std::optional<double> baseline_accuracy;  // over graded samples
  std::optional<double> attack_accuracy;
  std::size_t provider_usage_lengths = 0;
  std::size_t approximate_lengths = 0;
};

struct RunReport {
  std::vector<ItemRow> rows;  // baseline order
  Aggregates aggregates;
  nlohmann::ordered_json metadata = nlohmann::ordered_json::object();
};

/// Pairs results by item id. Items with an error in any sample of either
/// condition are excluded from the aggregates and counted. Throws
/// Error(kDisjointIds) when the two sets share no id.
RunReport compute_metrics(std::span<const CompletionResult> baseline, std::span<const CompletionResult> attack,
                          const Grader* grader = nullptr, std::span<const DatasetItem> items = {});

nlohmann::ordered_json to_json(const ItemRow& row);
nlohmann::ordered_json to_json(const Aggregates& aggregates);
/// {metadata, aggregates}
nlohmann::ordered_json report_json(const RunReport& report);
void write_rows_jsonl(const RunReport& report, std::ostream& out);
nlohmann::ordered_json to_json(const CompletionResult& result);

struct SweepRow {
  double rho = 0.0;
  RunReport report;
};

struct SweepTable {
  std::vector<SweepRow> rows;  // input order
};

/// Runs the baseline once, then the attack template once per rho value.
/// Throws Error(kConfiguration) for an empty list or a rho outside [0, 1].
SweepTable sweep_rho(std::span<const DatasetItem> items, std::span<const double> rhos,
                     const transform::ObfuscationConfig& attack_template, ChatBackend& backend,
                     const RunOptions& options, const Grader* grader = nullptr);

/// rho,mean_response_length,mean_baseline_length,mean_amplification,accuracy,excluded
void write_sweep_csv(const SweepTable& table, std::ostream& out);
nlohmann::ordered_json to_json(const SweepTable& table);

}  // namespace extendattack::harness
