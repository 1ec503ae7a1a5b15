#include "extendattack/presets.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "extendattack/error.hpp"

namespace extendattack::presets {
namespace {

using selection::RuleKind;
using selection::SelectionRule;
using transform::Placement;

SelectionRule union_of(std::initializer_list<RuleKind> kinds) {
  return SelectionRule::union_of(std::vector<RuleKind>(kinds));
}

std::vector<Preset> build_presets() {
  const SelectionRule alpha(RuleKind::kAllAlphabetic);
  const SelectionRule space(RuleKind::kWhitespaceOnly);
  const SelectionRule humaneval = union_of({RuleKind::kFunctionNameAlphabetic, RuleKind::kImportStatementAlphabetic});
  const SelectionRule bcb =
      union_of({RuleKind::kImportStatementAlphabetic, RuleKind::kRequirementsDocstringAlphabetic});

  struct Row {
    const char* benchmark;
    std::array<double, 4> rho;  // o3, o3-mini, qwq-32b, qwen3-32b
  };
  const std::array<Row, 4> rows = {{
      {"aime24", {0.2, 0.1, 0.5, 0.5}},
      {"aime25", {0.2, 0.1, 0.2, 0.2}},
      {"humaneval", {0.5, 0.5, 0.5, 0.5}},
      {"bcb", {0.3, 0.2, 0.1, 0.1}},
  }};
  const std::array<const char*, 4> models = {"o3", "o3-mini", "qwq-32b", "qwen3-32b"};

  std::vector<Preset> out;
  for (const Row& row : rows) {
    const std::string benchmark = row.benchmark;
    for (std::size_t m = 0; m < models.size(); ++m) {
      const bool aime = benchmark.starts_with("aime");
      // The o3 family tolerates letter obfuscation on math; the Qwen models
      // only get whitespace.
      const SelectionRule rule = aime ? (m < 2 ? alpha : space) : (benchmark == "humaneval" ? humaneval : bcb);
      out.push_back({benchmark + "-" + models[m], benchmark, models[m], rule, row.rho[m],
                     aime ? Placement::kSuffix : Placement::kPrefix});
    }
  }
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string interpolate(std::string_view value) {
  std::string out;
  std::size_t pos = 0;
  while (pos < value.size()) {
    const auto open = value.find("${", pos);
    if (open == std::string_view::npos) {
      out.append(value.substr(pos));
      break;
    }
    out.append(value.substr(pos, open - pos));
    const auto close = value.find('}', open + 2);
    if (close == std::string_view::npos) throw Error(ErrorCode::kConfiguration, "unterminated ${ in config value");
    const std::string name(value.substr(open + 2, close - open - 2));
    if (const char* env = std::getenv(name.c_str())) out += env;
    pos = close + 1;
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::kConfiguration, "invalid value '" + text + "' for " + key);
  }
  return value;
}

}  // namespace

const std::vector<Preset>& all() {
  static const std::vector<Preset> presets = build_presets();
  return presets;
}

const std::map<std::string, std::string, std::less<>>& aliases() {
  static const std::map<std::string, std::string, std::less<>> table = {
      {"aime-o3", "aime24-o3"},     {"aime-qwen", "aime24-qwen3-32b"}, {"aime24-qwen", "aime24-qwen3-32b"},
      {"aime25-qwen", "aime25-qwen3-32b"}, {"humaneval", "humaneval-o3"}, {"bcb-complete", "bcb-o3"},
  };
  return table;
}

std::optional<Preset> find(std::string_view name) {
  std::string_view target = name;
  if (const auto it = aliases().find(name); it != aliases().end()) target = it->second;
  const auto& presets = all();
  const auto it = std::find_if(presets.begin(), presets.end(), [&](const Preset& p) { return p.name == target; });
  if (it == presets.end()) return std::nullopt;
  return *it;
}

SelectionRule resolve_rule(std::string_view text) {
  if (auto preset = find(text)) return preset->rule;
  return SelectionRule::parse(text);
}

std::map<std::string, std::string> parse_config(std::string_view text) {
  std::map<std::string, std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kConfiguration, "config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(stripped).substr(0, eq));
    std::string value = trim(std::string_view(stripped).substr(eq + 1));
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front()) {
      value = value.substr(1, value.size() - 2);
    }
    out[key] = interpolate(value);
  }
  return out;
}

std::map<std::string, std::string> load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfiguration, "cannot read config file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "preset",     "rule",    "rho",         "seed",     "note",         "placement",   "note_text",
      "base_url",   "api_key_env", "model",   "temperature", "top_p",      "max_tokens",  "concurrency",
      "repeat",     "timeout_s", "max_attempts", "backoff_ms"};
  return keys;
}

transform::ObfuscationConfig RunConfig::obfuscation() const {
  transform::ObfuscationConfig config;
  config.rule = rule;
  config.ratio = rho;
  config.seed = seed;
  switch (note) {
    case transform::NoteKind::kStandard: config.note = transform::NoteVariant::standard(placement); break;
    case transform::NoteKind::kAmbiguous: config.note = transform::NoteVariant::ambiguous(placement); break;
    case transform::NoteKind::kCustom: config.note = transform::NoteVariant::custom(note_text, placement); break;
  }
  return config;
}

nlohmann::ordered_json RunConfig::to_json() const {
  nlohmann::ordered_json out;
  out["preset"] = preset ? nlohmann::ordered_json(*preset) : nlohmann::ordered_json(nullptr);
  out["rule"] = rule.name();
  out["rho"] = rho;
  out["seed"] = seed;
  out["note"] = std::string(transform::to_string(note));
  out["note_template"] = std::string(transform::kNoteTemplateVersion);
  out["placement"] = std::string(transform::to_string(placement));
  out["base_url"] = base_url;
  out["model"] = model;
  out["temperature"] = temperature;
  out["top_p"] = top_p;
  out["max_tokens"] = max_tokens ? nlohmann::ordered_json(*max_tokens) : nlohmann::ordered_json(nullptr);
  out["concurrency"] = concurrency;
  out["repeat"] = repeat;
  return out;
}

RunConfig resolve(const std::map<std::string, std::string>& file, const std::map<std::string, std::string>& flags) {
  std::map<std::string, std::string> merged = file;
  for (const auto& [key, value] : flags) merged[key] = value;
  const auto& keys = config_keys();
  for (const auto& [key, _] : merged) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw Error(ErrorCode::kConfiguration, "unknown setting '" + key + "'");
    }
  }
  auto get = [&](const std::string& key) -> const std::string* {
    const auto it = merged.find(key);
    return it == merged.end() ? nullptr : &it->second;
  };

  RunConfig config;
  if (const auto* name = get("preset")) {
    const auto preset = find(*name);
    if (!preset) throw Error(ErrorCode::kConfiguration, "unknown preset '" + *name + "'");
    config.preset = preset->name;
    config.rule = preset->rule;
    config.rho = preset->rho;
    config.placement = preset->placement;
  }
  if (const auto* rule = get("rule")) {
    if (const auto preset = find(*rule); preset && !get("preset")) {
      // A preset named as the rule brings its rho and placement too, unless
      // they are set explicitly below.
      config.preset = preset->name;
      config.rho = preset->rho;
      config.placement = preset->placement;
    }
    config.rule = resolve_rule(*rule);
  }
  if (const auto* v = get("rho")) {
    config.rho = parse_number<double>("rho", *v);
    if (!(config.rho >= 0.0 && config.rho <= 1.0)) {
      throw Error(ErrorCode::kConfiguration, "rho " + *v + " is outside [0, 1]");
    }
  }
  if (const auto* v = get("seed")) config.seed = parse_number<std::uint64_t>("seed", *v);
  if (const auto* v = get("note")) {
    if (*v == "standard") config.note = transform::NoteKind::kStandard;
    else if (*v == "ambiguous") config.note = transform::NoteKind::kAmbiguous;
    else if (*v == "custom") config.note = transform::NoteKind::kCustom;
    else throw Error(ErrorCode::kConfiguration, "note must be standard, ambiguous or custom");
  }
  if (const auto* v = get("note_text")) {
    config.note_text = *v;
    if (!get("note")) config.note = transform::NoteKind::kCustom;
  }
  if (config.note == transform::NoteKind::kCustom && config.note_text.empty()) {
    throw Error(ErrorCode::kConfiguration, "a custom note needs note text");
  }
  if (const auto* v = get("placement")) {
    if (*v == "prefix") config.placement = transform::Placement::kPrefix;
    else if (*v == "suffix") config.placement = transform::Placement::kSuffix;
    else throw Error(ErrorCode::kConfiguration, "placement must be prefix or suffix");
  }
  if (const auto* v = get("base_url")) config.base_url = *v;
  if (const auto* v = get("api_key_env")) config.api_key_env = *v;
  if (const auto* v = get("model")) config.model = *v;
  if (const auto* v = get("temperature")) config.temperature = parse_number<double>("temperature", *v);
  if (const auto* v = get("top_p")) config.top_p = parse_number<double>("top_p", *v);
  if (const auto* v = get("max_tokens")) config.max_tokens = parse_number<int>("max_tokens", *v);
  if (const auto* v = get("concurrency")) config.concurrency = parse_number<std::size_t>("concurrency", *v);
  if (const auto* v = get("repeat")) config.repeat = parse_number<int>("repeat", *v);
  if (const auto* v = get("timeout_s")) config.timeout_s = parse_number<int>("timeout_s", *v);
  if (const auto* v = get("max_attempts")) config.max_attempts = parse_number<int>("max_attempts", *v);
  if (const auto* v = get("backoff_ms")) config.backoff_ms = parse_number<int>("backoff_ms", *v);
  if (config.concurrency == 0) throw Error(ErrorCode::kConfiguration, "concurrency must be at least 1");
  if (config.repeat < 1) throw Error(ErrorCode::kConfiguration, "repeat must be at least 1");
  if (config.max_attempts < 1) throw Error(ErrorCode::kConfiguration, "max_attempts must be at least 1");
  return config;
}

}  // namespace extendattack::presets
