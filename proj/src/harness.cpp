#include "extendattack/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <thread>
#include <unordered_map>

#include <unistd.h>

#include "extendattack/error.hpp"

namespace extendattack::harness {
namespace {

std::string format_number(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double mean(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

template <typename T>
nlohmann::ordered_json optional_json(const std::optional<T>& value) {
  return value ? nlohmann::ordered_json(*value) : nlohmann::ordered_json(nullptr);
}

}  // namespace

std::vector<DatasetItem> parse_dataset(std::istream& in) {
  std::vector<DatasetItem> items;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::kParseError, where + e.what());
    }
    if (!record.is_object()) throw Error(ErrorCode::kParseError, where + "expected a JSON object");
    if (!record.contains("id") || !(record["id"].is_string() || record["id"].is_number_integer())) {
      throw Error(ErrorCode::kParseError, where + "missing \"id\"");
    }
    if (!record.contains("prompt") || !record["prompt"].is_string()) {
      throw Error(ErrorCode::kParseError, where + "missing \"prompt\"");
    }
    DatasetItem item;
    item.id = record["id"].is_string() ? record["id"].get<std::string>() : record["id"].dump();
    item.prompt = record["prompt"].get<std::string>();
    if (record.contains("reference") && !record["reference"].is_null()) {
      const auto& ref = record["reference"];
      item.reference = ref.is_string() ? ref.get<std::string>() : ref.dump();
    }
    if (!seen.insert(item.id).second) {
      throw Error(ErrorCode::kDuplicateId, where + "duplicate id '" + item.id + "'");
    }
    items.push_back(std::move(item));
  }
  return items;
}

std::vector<DatasetItem> load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open dataset '" + path + "'");
  return parse_dataset(in);
}

std::string_view to_string(LengthSource source) {
  return source == LengthSource::kProviderUsage ? "provider-usage" : "whitespace-approx";
}

std::size_t whitespace_token_count(std::string_view text) {
  std::size_t count = 0;
  bool in_word = false;
  for (char c : text) {
    const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
    if (!space && !in_word) ++count;
    in_word = !space;
  }
  return count;
}

std::string condition_prompt(const DatasetItem& item, const Condition& condition, std::size_t* obfuscated_tokens) {
  if (obfuscated_tokens != nullptr) *obfuscated_tokens = 0;
  if (condition.kind == Condition::Kind::kDirectAnswer) return item.prompt;
  transform::ObfuscationConfig config = condition.attack;
  config.seed = derive_item_seed(condition.attack.seed, item.id);
  transform::AdversarialPrompt prompt = transform::obfuscate(item.prompt, config);
  if (obfuscated_tokens != nullptr) *obfuscated_tokens = prompt.ledger.size();
  return std::move(prompt.full_text);
}

std::vector<CompletionResult> run_condition(std::span<const DatasetItem> items, const Condition& condition,
                                            ChatBackend& backend, const RunOptions& options) {
  if (options.concurrency == 0) throw Error(ErrorCode::kConfiguration, "concurrency must be at least 1");
  if (options.repeat < 1) throw Error(ErrorCode::kConfiguration, "repeat must be at least 1");
  if (options.retry.max_attempts < 1) throw Error(ErrorCode::kConfiguration, "max attempts must be at least 1");
  if (condition.kind == Condition::Kind::kExtendAttack &&
      !(condition.attack.ratio >= 0.0 && condition.attack.ratio <= 1.0)) {
    throw Error(ErrorCode::kConfiguration, "obfuscation ratio must lie in [0, 1]");
  }

  const auto repeat = static_cast<std::size_t>(options.repeat);
  std::vector<CompletionResult> results(items.size() * repeat);
  for (std::size_t i = 0; i < items.size(); ++i) {
    CompletionResult prepared;
    prepared.item_id = items[i].id;
    prepared.condition = condition.label();
    try {
      prepared.prompt = condition_prompt(items[i], condition, &prepared.obfuscated_tokens);
    } catch (const Error& e) {
      prepared.error = std::string(to_string(e.code())) + ": " + e.what();
    }
    for (std::size_t s = 0; s < repeat; ++s) {
      results[i * repeat + s] = prepared;
      results[i * repeat + s].sample = static_cast<int>(s);
    }
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t task = next++; task < results.size(); task = next++) {
      CompletionResult& result = results[task];
      if (result.error) continue;
      ChatRequest request{options.model, result.prompt, options.temperature, options.top_p, options.max_tokens};
      const auto started = std::chrono::steady_clock::now();
      ChatResponse response;
      for (int attempt = 1; attempt <= options.retry.max_attempts; ++attempt) {
        result.attempts = attempt;
        response = backend.complete(request);
        if (response.ok() || !response.transient() || attempt == options.retry.max_attempts) break;
        std::this_thread::sleep_for(options.retry.initial_backoff * (1 << (attempt - 1)));
      }
      result.latency_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
      if (!response.ok()) {
        result.error = "HTTP " + std::to_string(response.status) + ": " +
                       (response.error.empty() ? std::string("request failed") : response.error);
        continue;
      }
      result.output_text = std::move(response.content);
      if (response.completion_tokens) {
        result.response_length = *response.completion_tokens;
        result.length_source = LengthSource::kProviderUsage;
      } else {
        result.response_length = static_cast<long>(whitespace_token_count(result.output_text));
        result.length_source = LengthSource::kWhitespaceApprox;
      }
    }
  };

  const std::size_t workers = std::min(options.concurrency, std::max<std::size_t>(results.size(), 1));
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  pool.clear();  // joins
  return results;
}

bool ExactMatchGrader::grade(const DatasetItem& item, std::string_view output) const {
  return item.reference && trim(*item.reference) == trim(output);
}

bool CommandGrader::grade(const DatasetItem& item, std::string_view output) const {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path();
  static std::atomic<unsigned> counter{0};
  const std::string stem = "extendattack-grade-" + std::to_string(::getpid()) + "-" + std::to_string(counter++);
  const fs::path output_file = dir / (stem + ".out");
  const fs::path reference_file = dir / (stem + ".ref");
  {
    std::ofstream(output_file, std::ios::binary) << output;
    std::ofstream(reference_file, std::ios::binary) << item.reference.value_or("");
  }
  const std::string command = command_ + " '" + output_file.string() + "' '" + reference_file.string() + "'";
  const int status = std::system(command.c_str());
  std::error_code ignored;
  fs::remove(output_file, ignored);
  fs::remove(reference_file, ignored);
  return status == 0;
}

RunReport compute_metrics(std::span<const CompletionResult> baseline, std::span<const CompletionResult> attack,
                          const Grader* grader, std::span<const DatasetItem> items) {
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<const CompletionResult*>> base_by_id;
  std::unordered_map<std::string, std::vector<const CompletionResult*>> attack_by_id;
  for (const CompletionResult& r : baseline) {
    auto& bucket = base_by_id[r.item_id];
    if (bucket.empty()) order.push_back(r.item_id);
    bucket.push_back(&r);
  }
  for (const CompletionResult& r : attack) attack_by_id[r.item_id].push_back(&r);

  std::unordered_map<std::string, const DatasetItem*> item_by_id;
  for (const DatasetItem& item : items) item_by_id.emplace(item.id, &item);

  RunReport report;
  Aggregates& agg = report.aggregates;
  for (const auto& [id, _] : attack_by_id) {
    if (!base_by_id.contains(id)) ++agg.unmatched;
  }

  std::vector<double> base_lengths;
  std::vector<double> attack_lengths;
  std::vector<double> amplifications;
  std::size_t base_graded = 0, base_correct = 0, attack_graded = 0, attack_correct = 0;

  // Mean length and (optionally) accuracy over a sample bucket with no errors.
  auto summarize = [&](const std::vector<const CompletionResult*>& samples, std::size_t& graded,
                       std::size_t& correct, std::optional<double>& accuracy) {
    double sum = 0.0;
    std::size_t local_correct = 0;
    for (const CompletionResult* r : samples) {
      sum += static_cast<double>(r->response_length);
      if (r->length_source == LengthSource::kProviderUsage) ++agg.provider_usage_lengths;
      else ++agg.approximate_lengths;
      if (grader != nullptr) {
        const auto it = item_by_id.find(r->item_id);
        const DatasetItem fallback{r->item_id, {}, std::nullopt};
        if (grader->grade(it != item_by_id.end() ? *it->second : fallback, r->output_text)) ++local_correct;
      }
    }
    if (grader != nullptr) {
      graded += samples.size();
      correct += local_correct;
      accuracy = static_cast<double>(local_correct) / static_cast<double>(samples.size());
    }
    return sum / static_cast<double>(samples.size());
  };

  for (const std::string& id : order) {
    const auto other = attack_by_id.find(id);
    if (other == attack_by_id.end()) {
      ++agg.unmatched;
      continue;
    }
    ++agg.items;
    ItemRow row;
    row.id = id;
    const auto errored = [](const std::vector<const CompletionResult*>& samples) {
      return std::find_if(samples.begin(), samples.end(), [](const CompletionResult* r) { return r->error; });
    };
    const auto& base_samples = base_by_id[id];
    const auto& attack_samples = other->second;
    if (auto it = errored(base_samples); it != base_samples.end()) {
      row.excluded = true;
      row.exclusion_reason = "DA: " + *(*it)->error;
    } else if (auto jt = errored(attack_samples); jt != attack_samples.end()) {
      row.excluded = true;
      row.exclusion_reason = "ExtendAttack: " + *(*jt)->error;
    }
    if (row.excluded) {
      ++agg.excluded;
      report.rows.push_back(std::move(row));
      continue;
    }
    ++agg.included;
    row.baseline_length = summarize(base_samples, base_graded, base_correct, row.baseline_accuracy);
    row.attack_length = summarize(attack_samples, attack_graded, attack_correct, row.attack_accuracy);
    base_lengths.push_back(*row.baseline_length);
    attack_lengths.push_back(*row.attack_length);
    if (*row.baseline_length > 0.0) {
      row.amplification = *row.attack_length / *row.baseline_length;
      amplifications.push_back(*row.amplification);
    }
    report.rows.push_back(std::move(row));
  }
  if (agg.items == 0) throw Error(ErrorCode::kDisjointIds, "baseline and attack results share no item id");

  agg.mean_baseline_length = mean(base_lengths);
  agg.mean_attack_length = mean(attack_lengths);
  agg.mean_amplification = mean(amplifications);
  agg.ratio_of_means = agg.mean_baseline_length > 0.0 ? agg.mean_attack_length / agg.mean_baseline_length : 0.0;
  if (grader != nullptr) {
    if (base_graded > 0) agg.baseline_accuracy = static_cast<double>(base_correct) / static_cast<double>(base_graded);
    if (attack_graded > 0) {
      agg.attack_accuracy = static_cast<double>(attack_correct) / static_cast<double>(attack_graded);
    }
  }
  return report;
}

nlohmann::ordered_json to_json(const ItemRow& row) {
  nlohmann::ordered_json out;
  out["id"] = row.id;
  out["baseline_length"] = optional_json(row.baseline_length);
  out["attack_length"] = optional_json(row.attack_length);
  out["amplification"] = optional_json(row.amplification);
  if (row.baseline_accuracy || row.attack_accuracy) {
    out["baseline_accuracy"] = optional_json(row.baseline_accuracy);
    out["attack_accuracy"] = optional_json(row.attack_accuracy);
  }
  out["excluded"] = row.excluded;
  if (row.excluded) out["exclusion_reason"] = row.exclusion_reason;
  return out;
}

nlohmann::ordered_json to_json(const Aggregates& a) {
  nlohmann::ordered_json out;
  out["items"] = a.items;
  out["included"] = a.included;
  out["excluded"] = a.excluded;
  out["unmatched"] = a.unmatched;
  out["mean_baseline_length"] = a.mean_baseline_length;
  out["mean_attack_length"] = a.mean_attack_length;
  out["mean_amplification"] = a.mean_amplification;
  out["ratio_of_means"] = a.ratio_of_means;
  out["baseline_accuracy"] = optional_json(a.baseline_accuracy);
  out["attack_accuracy"] = optional_json(a.attack_accuracy);
  out["length_sources"] = {{"provider-usage", a.provider_usage_lengths},
                           {"whitespace-approx", a.approximate_lengths}};
  return out;
}

nlohmann::ordered_json report_json(const RunReport& report) {
  nlohmann::ordered_json out;
  out["metadata"] = report.metadata;
  out["aggregates"] = to_json(report.aggregates);
  return out;
}

void write_rows_jsonl(const RunReport& report, std::ostream& out) {
  for (const ItemRow& row : report.rows) out << to_json(row).dump() << '\n';
}

nlohmann::ordered_json to_json(const CompletionResult& r) {
  nlohmann::ordered_json out;
  out["item_id"] = r.item_id;
  out["sample"] = r.sample;
  out["condition"] = r.condition;
  out["obfuscated_tokens"] = r.obfuscated_tokens;
  out["response_length"] = r.response_length;
  out["length_source"] = std::string(to_string(r.length_source));
  out["attempts"] = r.attempts;
  out["latency_ms"] = r.latency_ms;
  out["error"] = optional_json(r.error);
  out["output_text"] = r.output_text;
  return out;
}

SweepTable sweep_rho(std::span<const DatasetItem> items, std::span<const double> rhos,
                     const transform::ObfuscationConfig& attack_template, ChatBackend& backend,
                     const RunOptions& options, const Grader* grader) {
  if (rhos.empty()) throw Error(ErrorCode::kConfiguration, "rho list is empty");
  for (double rho : rhos) {
    if (!(rho >= 0.0 && rho <= 1.0)) {
      throw Error(ErrorCode::kConfiguration, "rho " + format_number(rho) + " is outside [0, 1]");
    }
  }
  const std::vector<CompletionResult> baseline = run_condition(items, Condition::direct(), backend, options);
  SweepTable table;
  for (double rho : rhos) {
    transform::ObfuscationConfig config = attack_template;
    config.ratio = rho;
    const std::vector<CompletionResult> attacked =
        run_condition(items, Condition::extend_attack(config), backend, options);
    RunReport report = compute_metrics(baseline, attacked, grader, items);
    report.metadata["rho"] = rho;
    table.rows.push_back({rho, std::move(report)});
  }
  return table;
}

void write_sweep_csv(const SweepTable& table, std::ostream& out) {
  out << "rho,mean_response_length,mean_baseline_length,mean_amplification,accuracy,excluded\n";
  for (const SweepRow& row : table.rows) {
    const Aggregates& a = row.report.aggregates;
    out << format_number(row.rho) << ',' << format_number(a.mean_attack_length) << ','
        << format_number(a.mean_baseline_length) << ',' << format_number(a.mean_amplification) << ','
        << (a.attack_accuracy ? format_number(*a.attack_accuracy) : std::string()) << ',' << a.excluded << '\n';
  }
}

nlohmann::ordered_json to_json(const SweepTable& table) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const SweepRow& row : table.rows) {
    nlohmann::ordered_json r;
    r["rho"] = row.rho;
    r["aggregates"] = to_json(row.report.aggregates);
    rows.push_back(std::move(r));
  }
  nlohmann::ordered_json out;
  out["rows"] = std::move(rows);
  return out;
}

}  // namespace extendattack::harness
