#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "extendattack/selection.hpp"
#include "extendattack/transform.hpp"

namespace extendattack::presets {

/// A benchmark/model configuration: which characters may be transformed,
/// the obfuscation ratio, and where the note goes.
struct Preset {
  std::string name;
  std::string benchmark;
  std::string model;
  selection::SelectionRule rule;
  double rho;
  transform::Placement placement;
};

/// aime24-*, aime25-*, humaneval-*, bcb-* for the models o3, o3-mini,
/// qwq-32b and qwen3-32b.
const std::vector<Preset>& all();

/// Short names mapped to a full preset name (e.g. "humaneval" -> "humaneval-o3").
const std::map<std::string, std::string, std::less<>>& aliases();

/// Looks up a preset by full name or alias.
std::optional<Preset> find(std::string_view name);

/// A preset name (its rule is used) or a rule expression such as
/// "function-name+import". Throws Error(kConfiguration).
selection::SelectionRule resolve_rule(std::string_view text);

// ---------------------------------------------------------------------------
// Configuration files

/// Flat `key = value` document. '#' starts a comment line; values may be
/// quoted; ${NAME} is replaced by the environment variable NAME (empty when
/// unset). Throws Error(kConfiguration) on a line without '=' or an
/// unterminated ${.
std::map<std::string, std::string> parse_config(std::string_view text);

/// Throws Error(kConfiguration) if the file cannot be read or parsed.
std::map<std::string, std::string> load_config(const std::string& path);

/// Every setting the CLI can resolve, after applying defaults, config file,
/// preset and flags (flags win over the file, the file over defaults; an
/// explicit rule or rho wins over the preset's).
struct RunConfig {
  std::optional<std::string> preset;
  selection::SelectionRule rule{selection::RuleKind::kAllAlphabetic};
  double rho = 0.5;
  std::uint64_t seed = 0;
  transform::NoteKind note = transform::NoteKind::kStandard;
  transform::Placement placement = transform::Placement::kPrefix;
  std::string note_text;  // custom notes only
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key_env = "OPENAI_API_KEY";
  std::string model = "o3";
  double temperature = 0.6;
  double top_p = 0.95;
  std::optional<int> max_tokens;
  std::size_t concurrency = 4;
  int repeat = 1;
  int timeout_s = 120;
  int max_attempts = 3;
  int backoff_ms = 1000;

  transform::ObfuscationConfig obfuscation() const;
  nlohmann::ordered_json to_json() const;
};

/// Keys recognized in config files and as overrides.
const std::vector<std::string>& config_keys();

/// Builds a RunConfig from layered string settings. `file` holds config-file
/// values and `flags` explicit command-line values; both use config_keys().
/// Throws Error(kConfiguration) for unknown keys or bad values.
RunConfig resolve(const std::map<std::string, std::string>& file,
                  const std::map<std::string, std::string>& flags);

}  // namespace extendattack::presets
