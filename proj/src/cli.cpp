#include "extendattack/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "extendattack/defense.hpp"
#include "extendattack/error.hpp"
#include "extendattack/harness.hpp"
#include "extendattack/mock_server.hpp"
#include "extendattack/ngram.hpp"
#include "extendattack/presets.hpp"
#include "extendattack/transform.hpp"

namespace extendattack::cli {
namespace {

namespace fs = std::filesystem;
using Settings = std::map<std::string, std::string>;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string read_input(const std::string& path, std::istream& in) {
  if (path.empty() || path == "-") {
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
  }
  return read_file(path);
}

void write_file(const fs::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path.string() + "'");
  out << content;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfiguration:
    case ErrorCode::kRatioOutOfRange:
    case ErrorCode::kIo:
      return kConfigError;
    default:
      return kProcessingError;
  }
}

// Options shared by commands that build attack prompts. Values land in the
// flag layer of the settings only when given on the command line.
struct SettingsOptions {
  Settings flags;
  std::string config_path;
  std::string note_file;

  void add_obfuscation(CLI::App* app) {
    app->add_option("--config", config_path, "Flat key = value config file (flags take precedence)");
    add(app, "--preset", "preset", "Benchmark/model preset, e.g. humaneval-o3 (see `presets`)");
    add(app, "--rule", "rule", "Selection rule (all-alpha, whitespace, function-name, import, requirements, "
                               "joined with '+') or a preset name");
    add(app, "--rho", "rho", "Obfuscation ratio in [0, 1]");
    add(app, "--seed", "seed", "Seed for target and base sampling");
    add(app, "--note", "note", "Note variant: standard, ambiguous or custom");
    app->add_option("--note-file", note_file, "File holding a custom note (implies --note custom)");
    add(app, "--placement", "placement", "Note placement: prefix or suffix");
  }

  void add_endpoint(CLI::App* app) {
    add(app, "--base-url", "base_url", "Chat-completions base URL");
    add(app, "--api-key-env", "api_key_env", "Environment variable holding the API key");
    add(app, "--model", "model", "Model name sent with each request");
    add(app, "--temperature", "temperature", "Sampling temperature (default 0.6)");
    add(app, "--top-p", "top_p", "Nucleus sampling top-p (default 0.95)");
    add(app, "--max-tokens", "max_tokens", "Completion token cap");
    add(app, "--concurrency", "concurrency", "Maximum requests in flight (default 4)");
    add(app, "--repeat", "repeat", "Samples per item (default 1)");
    add(app, "--timeout", "timeout_s", "Per-request timeout in seconds (default 120)");
    add(app, "--max-attempts", "max_attempts", "Attempts per request on transient failure (default 3)");
    add(app, "--backoff-ms", "backoff_ms", "Initial retry backoff in milliseconds (default 1000)");
  }

  presets::RunConfig resolve() {
    Settings file;
    if (!config_path.empty()) file = presets::load_config(config_path);
    if (!note_file.empty()) {
      flags["note_text"] = read_file(note_file);
      if (!flags.contains("note")) flags["note"] = "custom";
    }
    return presets::resolve(file, flags);
  }

 private:
  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    app->add_option_function<std::string>(flag, [this, key](const std::string& v) { flags[key] = v; }, help)
        ->type_name("TEXT");
  }
};

// --- encode -----------------------------------------------------------------

struct EncodeCommand {
  SettingsOptions settings;
  std::string input;
  std::string text;
  std::string output;
  std::string ledger;
  bool jsonl = false;

  void attach(CLI::App* app) {
    app->add_option("input", input, "Input file (default: stdin)");
    app->add_option("--text", text, "Encode this text instead of reading input");
    app->add_option("-o,--output", output, "Write the prompt here instead of stdout");
    app->add_option("--ledger", ledger, "Write the transform ledger as JSON to this file");
    app->add_flag("--jsonl", jsonl, "Input is JSONL {id, prompt}; output one obfuscated record per line");
    settings.add_obfuscation(app);
  }

  int execute(std::istream& in, std::ostream& out) {
    const presets::RunConfig config = settings.resolve();
    const transform::ObfuscationConfig obfuscation = config.obfuscation();
    std::ostringstream buffer;
    if (jsonl) {
      std::istringstream records(text.empty() ? read_input(input, in) : text);
      transform::obfuscate_jsonl(records, buffer, obfuscation);
    } else {
      const std::string query = text.empty() ? read_input(input, in) : text;
      const transform::AdversarialPrompt prompt = transform::obfuscate(query, obfuscation);
      buffer << prompt.full_text;
      if (!ledger.empty()) {
        nlohmann::ordered_json doc;
        doc["config"] = config.to_json();
        doc["ledger"] = transform::ledger_to_json(prompt.ledger);
        doc["warnings"] = prompt.warnings;
        write_file(ledger, doc.dump(2) + "\n");
      }
    }
    if (output.empty()) {
      out << buffer.str();
    } else {
      write_file(output, buffer.str());
    }
    return kOk;
  }
};

// --- decode / purify ----------------------------------------------------------

struct PurifyCommand {
  std::string input;
  std::string report;
  std::string lookalikes;
  std::vector<std::string> note_files;
  bool keep_note = false;
  bool json = false;

  void attach(CLI::App* app) {
    app->add_option("input", input, "Input file (default: stdin)");
    app->add_option("--report", report, "Write the JSON purification report to this file");
    app->add_flag("--json", json, "Print {text, report} as one JSON document instead of plain text");
    app->add_flag("--keep-note", keep_note, "Do not strip known decoding notes");
    app->add_option("--note-file", note_files, "Extra note template to strip (repeatable)");
    app->add_option("--lookalikes", lookalikes, "JSON list of {name, pattern} lookalike formats to flag");
  }

  int execute(std::istream& in, std::ostream& out) {
    defense::PurifyOptions options;
    options.strip_notes = !keep_note;
    for (const std::string& path : note_files) options.extra_note_templates.push_back(read_file(path));
    if (!lookalikes.empty()) options.lookalikes = load_lookalikes(lookalikes);
    const defense::PurifiedPrompt purified = defense::purify(read_input(input, in), options);
    const nlohmann::ordered_json report_json = defense::to_json(purified);
    if (!report.empty()) write_file(report, report_json.dump(2) + "\n");
    if (json) {
      nlohmann::ordered_json doc;
      doc["text"] = purified.text;
      doc["report"] = report_json;
      out << doc.dump(2) << '\n';
    } else {
      out << purified.text;
    }
    return kOk;
  }

  static std::vector<defense::LookalikePattern> load_lookalikes(const std::string& path) {
    const auto json = nlohmann::json::parse(read_file(path), nullptr, false);
    if (json.is_discarded()) throw Error(ErrorCode::kConfiguration, "lookalike file is not JSON");
    return defense::lookalikes_from_json(json);
  }
};

// --- detect -----------------------------------------------------------------

struct DetectCommand {
  std::string input;
  std::string lookalikes;

  void attach(CLI::App* app) {
    app->add_option("input", input, "Input file (default: stdin)");
    app->add_option("--lookalikes", lookalikes, "JSON list of {name, pattern} lookalike formats (replaces defaults)");
  }

  int execute(std::istream& in, std::ostream& out) {
    const defense::Detector detector = lookalikes.empty()
                                           ? defense::Detector()
                                           : defense::Detector(PurifyCommand::load_lookalikes(lookalikes));
    const defense::DetectionReport report = detector.detect(read_input(input, in));
    out << defense::to_json(report).dump(2) << '\n';
    switch (report.decision) {
      case defense::Decision::kClean: return kOk;
      case defense::Decision::kAttack: return kAttackDetected;
      case defense::Decision::kSuspicious: return kSuspicious;
    }
    return kOk;
  }
};

// --- run / sweep ------------------------------------------------------------

struct Endpoint {
  std::unique_ptr<harness::MockServer> mock;
  std::unique_ptr<harness::HttpChatClient> client;
  std::string label;
};

Endpoint open_endpoint(const presets::RunConfig& config, const std::string& mock_name, const std::string& mock_file) {
  Endpoint endpoint;
  harness::EndpointConfig endpoint_config;
  endpoint_config.base_url = config.base_url;
  endpoint_config.api_key_env = config.api_key_env;
  endpoint_config.timeout = std::chrono::seconds(config.timeout_s);
  endpoint.label = config.base_url;
  if (!mock_name.empty() || !mock_file.empty()) {
    harness::MockScenario scenario;
    if (!mock_file.empty()) {
      const auto json = nlohmann::json::parse(read_file(mock_file), nullptr, false);
      if (json.is_discarded()) throw Error(ErrorCode::kConfiguration, "mock scenario file is not JSON");
      scenario = harness::scenario_from_json(json);
    } else {
      scenario = harness::builtin_scenario(mock_name);
    }
    endpoint.label = "mock:" + scenario.name;
    endpoint.mock = std::make_unique<harness::MockServer>(std::move(scenario));
    endpoint_config.base_url = endpoint.mock->base_url();
    endpoint_config.api_key_env.clear();
  }
  endpoint.client = std::make_unique<harness::HttpChatClient>(endpoint_config);
  return endpoint;
}

harness::RunOptions run_options(const presets::RunConfig& config) {
  harness::RunOptions options;
  options.model = config.model;
  options.temperature = config.temperature;
  options.top_p = config.top_p;
  options.max_tokens = config.max_tokens;
  options.concurrency = config.concurrency;
  options.repeat = config.repeat;
  options.retry.max_attempts = config.max_attempts;
  options.retry.initial_backoff = std::chrono::milliseconds(config.backoff_ms);
  return options;
}

std::unique_ptr<harness::Grader> make_grader(const std::string& grader, const std::string& command) {
  if (!command.empty()) return std::make_unique<harness::CommandGrader>(command);
  if (grader.empty() || grader == "none") return nullptr;
  if (grader == "exact") return std::make_unique<harness::ExactMatchGrader>();
  throw Error(ErrorCode::kConfiguration, "grader must be none or exact (or use --grader-cmd)");
}

std::string iso_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

struct RunCommand {
  SettingsOptions settings;
  std::string dataset;
  std::string conditions = "da,extend";
  std::string mock;
  std::string mock_file;
  std::string out_dir;
  std::string grader;
  std::string grader_cmd;
  bool timing = false;

  void attach(CLI::App* app) {
    app->add_option("--dataset", dataset, "JSONL dataset of {id, prompt[, reference]}")->required();
    app->add_option("--conditions", conditions, "Comma-separated conditions: da, extend");
    app->add_option("--mock", mock, "Serve a built-in mock scenario locally instead of calling --base-url");
    app->add_option("--mock-file", mock_file, "Serve a mock scenario read from a JSON file");
    app->add_option("--out-dir", out_dir, "Write report.json, rows.jsonl and per-condition results here");
    app->add_option("--grader", grader, "Accuracy grader: none or exact");
    app->add_option("--grader-cmd", grader_cmd, "Grade with `CMD <output-file> <reference-file>` (exit 0 = correct)");
    app->add_flag("--timing", timing, "Record timestamps and latencies (reports are then not reproducible)");
    settings.add_obfuscation(app);
    settings.add_endpoint(app);
  }

  int execute(std::ostream& out) {
    const presets::RunConfig config = settings.resolve();
    bool run_da = false;
    bool run_extend = false;
    std::stringstream list(conditions);
    for (std::string name; std::getline(list, name, ',');) {
      if (name == "da") run_da = true;
      else if (name == "extend") run_extend = true;
      else throw Error(ErrorCode::kConfiguration, "unknown condition '" + name + "'");
    }
    if (!run_da && !run_extend) throw Error(ErrorCode::kConfiguration, "no condition selected");
    const std::unique_ptr<harness::Grader> grader_impl = make_grader(grader, grader_cmd);
    const std::vector<harness::DatasetItem> items = harness::load_dataset(dataset);

    Endpoint endpoint = open_endpoint(config, mock, mock_file);
    const harness::RunOptions options = run_options(config);
    const std::string started = iso_now();
    std::vector<harness::CompletionResult> da;
    std::vector<harness::CompletionResult> extend;
    if (run_da) da = harness::run_condition(items, harness::Condition::direct(), *endpoint.client, options);
    if (run_extend) {
      extend = harness::run_condition(items, harness::Condition::extend_attack(config.obfuscation()),
                                      *endpoint.client, options);
    }

    nlohmann::ordered_json metadata;
    metadata["config"] = config.to_json();
    metadata["config"]["base_url"] = endpoint.label;
    metadata["dataset"] = fs::path(dataset).filename().string();
    metadata["items"] = items.size();
    metadata["conditions"] = conditions;
    if (timing) {
      metadata["started_at"] = started;
      metadata["finished_at"] = iso_now();
    }

    nlohmann::ordered_json summary;
    std::optional<harness::RunReport> report;
    if (run_da && run_extend) {
      report = harness::compute_metrics(da, extend, grader_impl.get(), items);
      report->metadata = metadata;
      summary = harness::report_json(*report);
    } else {
      summary["metadata"] = metadata;
    }

    if (!out_dir.empty()) {
      fs::create_directories(out_dir);
      write_file(fs::path(out_dir) / "report.json", summary.dump(2) + "\n");
      if (report) {
        std::ostringstream rows;
        harness::write_rows_jsonl(*report, rows);
        write_file(fs::path(out_dir) / "rows.jsonl", rows.str());
      }
      if (run_da) write_file(fs::path(out_dir) / "results_da.jsonl", results_jsonl(da));
      if (run_extend) write_file(fs::path(out_dir) / "results_extend.jsonl", results_jsonl(extend));
    }
    out << summary.dump(2) << '\n';
    return kOk;
  }

  std::string results_jsonl(const std::vector<harness::CompletionResult>& results) const {
    std::ostringstream buffer;
    for (const harness::CompletionResult& r : results) {
      nlohmann::ordered_json json = harness::to_json(r);
      if (!timing) json.erase("latency_ms");
      buffer << json.dump() << '\n';
    }
    return buffer.str();
  }
};

/// "start:stop:step" (inclusive stop) or a comma-separated list.
std::vector<double> parse_rho_range(const std::string& text) {
  auto number = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kConfiguration, "invalid rho value '" + s + "'");
    }
  };
  std::vector<double> values;
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
    if (parts.size() != 3) throw Error(ErrorCode::kConfiguration, "rho range must be start:stop:step");
    const double start = number(parts[0]);
    const double stop = number(parts[1]);
    const double step = number(parts[2]);
    if (!(step > 0.0) || start > stop) throw Error(ErrorCode::kConfiguration, "empty or invalid rho range");
    for (int i = 0;; ++i) {
      // Rounded to 12 places so 0.1 steps land on 0.3 rather than 0.30000000000000004.
      const double v = std::round((start + i * step) * 1e12) / 1e12;
      if (v > stop + 1e-9) break;
      values.push_back(v);
    }
  } else {
    std::stringstream ss(text);
    for (std::string part; std::getline(ss, part, ',');) values.push_back(number(part));
  }
  if (values.empty()) throw Error(ErrorCode::kConfiguration, "rho list is empty");
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::kConfiguration, "rho values must lie in [0, 1]");
  }
  return values;
}

struct SweepCommand {
  SettingsOptions settings;
  std::string dataset;
  std::string rhos = "0:1:0.1";
  std::string mock;
  std::string mock_file;
  std::string output;
  std::string json_output;
  std::string grader;
  std::string grader_cmd;

  void attach(CLI::App* app) {
    app->add_option("--dataset", dataset, "JSONL dataset of {id, prompt[, reference]}")->required();
    app->add_option("--rhos", rhos, "Ratios as start:stop:step or a comma list (default 0:1:0.1)");
    app->add_option("--mock", mock, "Serve a built-in mock scenario locally instead of calling --base-url");
    app->add_option("--mock-file", mock_file, "Serve a mock scenario read from a JSON file");
    app->add_option("-o,--output", output, "Write the CSV table here instead of stdout");
    app->add_option("--json", json_output, "Also write the sweep as JSON to this file");
    app->add_option("--grader", grader, "Accuracy grader: none or exact");
    app->add_option("--grader-cmd", grader_cmd, "Grade with `CMD <output-file> <reference-file>` (exit 0 = correct)");
    settings.add_obfuscation(app);
    settings.add_endpoint(app);
  }

  int execute(std::ostream& out) {
    const std::vector<double> values = parse_rho_range(rhos);
    const presets::RunConfig config = settings.resolve();
    const std::unique_ptr<harness::Grader> grader_impl = make_grader(grader, grader_cmd);
    const std::vector<harness::DatasetItem> items = harness::load_dataset(dataset);
    Endpoint endpoint = open_endpoint(config, mock, mock_file);
    const harness::SweepTable table = harness::sweep_rho(items, values, config.obfuscation(), *endpoint.client,
                                                         run_options(config), grader_impl.get());
    std::ostringstream csv;
    harness::write_sweep_csv(table, csv);
    if (output.empty()) out << csv.str();
    else write_file(output, csv.str());
    if (!json_output.empty()) {
      nlohmann::ordered_json doc = harness::to_json(table);
      nlohmann::ordered_json metadata;
      metadata["config"] = config.to_json();
      metadata["config"]["base_url"] = endpoint.label;
      metadata["dataset"] = fs::path(dataset).filename().string();
      doc["metadata"] = std::move(metadata);
      write_file(json_output, doc.dump(2) + "\n");
    }
    return kOk;
  }
};

// --- presets ----------------------------------------------------------------

int list_presets(std::ostream& out) {
  out << "name                 rule                        rho  placement\n";
  for (const presets::Preset& p : presets::all()) {
    std::ostringstream line;
    line << std::left << std::setw(21) << p.name << std::setw(28) << p.rule.name() << std::setw(5) << p.rho
         << transform::to_string(p.placement);
    out << line.str() << '\n';
  }
  for (const auto& [alias, target] : presets::aliases()) out << alias << " -> " << target << '\n';
  return kOk;
}

// --- ppl --------------------------------------------------------------------

std::vector<std::string> read_corpus(const std::string& path) {
  std::vector<std::string> docs;
  if (path.ends_with(".jsonl")) {
    for (harness::DatasetItem& item : harness::load_dataset(path)) docs.push_back(std::move(item.prompt));
    return docs;
  }
  std::istringstream in(read_file(path));
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) docs.push_back(line);
  }
  return docs;
}

defense::NgramModel load_model(const std::string& path) {
  std::istringstream in(read_file(path));
  return defense::NgramModel::load(in);
}

struct PplCommand {
  std::string corpus;
  std::string model_out;
  std::size_t order = defense::NgramModel::kDefaultOrder;
  double smoothing = defense::NgramModel::kDefaultSmoothing;
  std::string model_path;
  std::string input;
  double threshold = 0.0;
  std::string clean;
  std::string attack;

  CLI::App* train = nullptr;
  CLI::App* score = nullptr;
  CLI::App* sweep = nullptr;

  void attach(CLI::App* app) {
    app->require_subcommand(1);
    train = app->add_subcommand("train", "Train a character n-gram model on a clean corpus");
    train->add_option("--corpus", corpus, "Corpus: .jsonl dataset (prompt field) or one document per line")
        ->required();
    train->add_option("--order", order, "n-gram order (default 3)");
    train->add_option("--smoothing", smoothing, "Additive smoothing constant (default 0.1)");
    train->add_option("-o,--output", model_out, "Model file to write")->required();

    score = app->add_subcommand("score", "Score a prompt and apply a perplexity threshold");
    score->add_option("--model", model_path, "Model file")->required();
    score->add_option("input", input, "Input file (default: stdin)");
    score->add_option("--threshold", threshold, "Flag when the score exceeds this value")->required();

    sweep = app->add_subcommand("sweep", "False-positive and detection rates over all thresholds");
    sweep->add_option("--model", model_path, "Model file")->required();
    sweep->add_option("--clean", clean, "Clean prompts (.jsonl or one per line)")->required();
    sweep->add_option("--attack", attack, "Attacked prompts (.jsonl or one per line)")->required();
  }

  int execute(std::istream& in, std::ostream& out) {
    if (train->parsed()) {
      const defense::NgramModel model = defense::NgramModel::train(read_corpus(corpus), order, smoothing);
      std::ostringstream buffer;
      model.save(buffer);
      write_file(model_out, buffer.str());
      return kOk;
    }
    const defense::NgramModel model = load_model(model_path);
    if (score->parsed()) {
      const defense::FilterResult result = defense::ppl_filter(read_input(input, in), model, threshold);
      nlohmann::ordered_json doc;
      doc["score"] = result.score;
      doc["threshold"] = result.threshold;
      doc["decision"] = std::string(defense::to_string(result.decision));
      out << doc.dump(2) << '\n';
      return result.decision == defense::FilterDecision::kFlag ? kAttackDetected : kOk;
    }
    std::vector<double> clean_scores;
    std::vector<double> attack_scores;
    for (const std::string& doc : read_corpus(clean)) clean_scores.push_back(model.score(doc));
    for (const std::string& doc : read_corpus(attack)) attack_scores.push_back(model.score(doc));
    out << defense::to_json(defense::threshold_sweep(clean_scores, attack_scores)).dump(2) << '\n';
    return kOk;
  }
};

}  // namespace

int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Poly-base ASCII prompt obfuscation, defenses and response-length benchmarking", "extendattack"};
  app.require_subcommand(1);

  EncodeCommand encode;
  PurifyCommand purify;
  DetectCommand detect;
  RunCommand run_cmd;
  SweepCommand sweep;
  PplCommand ppl;

  CLI::App* encode_app = app.add_subcommand("encode", "Obfuscate a prompt into an attack prompt");
  encode.attach(encode_app);
  CLI::App* decode_app = app.add_subcommand("decode", "Decode obfuscation tokens and strip known notes");
  decode_app->alias("purify");
  purify.attach(decode_app);
  CLI::App* detect_app = app.add_subcommand("detect", "Scan for obfuscation tokens (exit 0 clean, 3 attack, 4 suspicious)");
  detect.attach(detect_app);
  CLI::App* run_app = app.add_subcommand("run", "Run DA and ExtendAttack conditions and report amplification");
  run_cmd.attach(run_app);
  CLI::App* sweep_app = app.add_subcommand("sweep", "Sweep the obfuscation ratio and tabulate response length");
  sweep.attach(sweep_app);
  CLI::App* presets_app = app.add_subcommand("presets", "List benchmark/model presets");
  CLI::App* ppl_app = app.add_subcommand("ppl", "Perplexity filter: train, score, threshold sweep");
  ppl.attach(ppl_app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kConfigError;
  }

  try {
    if (encode_app->parsed()) return encode.execute(in, out);
    if (decode_app->parsed()) return purify.execute(in, out);
    if (detect_app->parsed()) return detect.execute(in, out);
    if (run_app->parsed()) return run_cmd.execute(out);
    if (sweep_app->parsed()) return sweep.execute(out);
    if (presets_app->parsed()) return list_presets(out);
    if (ppl_app->parsed()) return ppl.execute(in, out);
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kProcessingError;
  }
  return kConfigError;
}

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("extendattack");
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), in, out, err);
}

}  // namespace extendattack::cli
