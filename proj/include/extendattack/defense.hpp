#pragma once

#include <cstddef>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "extendattack/radix.hpp"

namespace extendattack::defense {

/// A non-canonical encoding format to watch for, e.g. `[base=n](val)`.
/// The first capture group is read as the base, the second as the digits.
struct LookalikePattern {
  std::string name;
  std::string pattern;
};

std::vector<LookalikePattern> default_lookalikes();

/// Reads `[{"name": ..., "pattern": ...}, ...]`. Throws Error(kConfiguration)
/// on malformed JSON or an invalid regular expression.
std::vector<LookalikePattern> lookalikes_from_json(const nlohmann::json& json);

enum class Decision { kClean, kSuspicious, kAttack };
std::string_view to_string(Decision decision);

enum class SpanKind { kToken, kLookalike };

struct DetectionSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  SpanKind kind = SpanKind::kToken;
  std::string text;
  int base_value = 0;
  std::string digits;
  radix::Validity validity = radix::Validity::kValid;
  std::optional<char> decoded;  // valid tokens only
  std::string pattern_name;     // lookalikes only
};

struct DetectionReport {
  std::vector<DetectionSpan> spans;  // sorted, non-overlapping
  std::size_t token_count = 0;       // valid tokens
  Decision decision = Decision::kClean;
  std::vector<std::string> reasons;
};

class Detector {
 public:
  Detector() : Detector(default_lookalikes()) {}
  /// Throws Error(kConfiguration) if a pattern does not compile.
  explicit Detector(std::vector<LookalikePattern> lookalikes);

  /// Valid tokens make the text an Attack; otherwise token-shaped text with
  /// an invalid base or digits, or a lookalike hit, makes it Suspicious.
  DetectionReport detect(std::string_view text) const;

  const std::vector<LookalikePattern>& lookalikes() const noexcept { return patterns_; }

 private:
  std::vector<LookalikePattern> patterns_;
  std::vector<std::regex> compiled_;
};

/// detect() with the default lookalike list.
DetectionReport detect(std::string_view text);

nlohmann::ordered_json to_json(const DetectionReport& report);

/// Extension point for rephrasing a prompt with a secondary model before it
/// reaches the target model. Implementations must return a semantically
/// equivalent, non-empty rewrite of non-empty input.
class Rewriter {
 public:
  virtual ~Rewriter() = default;
  virtual std::string rewrite(std::string_view text) const = 0;
};

class PassThroughRewriter final : public Rewriter {
 public:
  std::string rewrite(std::string_view text) const override { return std::string(text); }
};

struct PurifyOptions {
  bool strip_notes = true;
  /// Notes to strip besides the built-in templates.
  std::vector<std::string> extra_note_templates;
  std::vector<LookalikePattern> lookalikes = default_lookalikes();
  const Rewriter* rewriter = nullptr;  // applied last when set
};

struct PurifiedPrompt {
  std::string text;
  std::size_t replacements = 0;
  bool stripped_note = false;
  std::vector<std::string> residual_flags;
};

/// Decodes every valid token in place and, optionally, removes a known note
/// (exact match first, then a whitespace-insensitive match). Decoding repeats
/// until no valid token remains, so the result is a fixed point. Malformed
/// tokens and lookalikes are left in the text and listed in residual_flags.
PurifiedPrompt purify(std::string_view text, const PurifyOptions& options = {});

nlohmann::ordered_json to_json(const PurifiedPrompt& purified);

/// Scores text; lower means more natural.
class PerplexityModel {
 public:
  virtual ~PerplexityModel() = default;
  /// Mean negative log-likelihood per character, in nats.
  virtual double score(std::string_view text) const = 0;
};

enum class FilterDecision { kPass, kFlag };
std::string_view to_string(FilterDecision decision);

struct FilterResult {
  FilterDecision decision = FilterDecision::kPass;
  double score = 0.0;
  double threshold = 0.0;
};

/// Flag iff model.score(text) > threshold. Throws Error(kConfiguration)
/// unless threshold > 0.
FilterResult ppl_filter(std::string_view text, const PerplexityModel& model, double threshold);

struct SweepRow {
  double threshold = 0.0;
  std::size_t clean_flagged = 0;
  std::size_t attack_flagged = 0;
  double false_positive_rate = 0.0;  // clean_flagged / clean count
  double detection_rate = 0.0;       // attack_flagged / attack count
};

struct ThresholdSweep {
  std::size_t clean_count = 0;
  std::size_t attack_count = 0;
  std::vector<SweepRow> rows;  // ascending threshold
};

/// Detection and false-positive rates of the perplexity filter at each
/// threshold. With no thresholds given, every distinct observed score is
/// used, plus one threshold below all of them.
ThresholdSweep threshold_sweep(std::span<const double> clean_scores,
                               std::span<const double> attack_scores,
                               std::span<const double> thresholds = {});

nlohmann::ordered_json to_json(const ThresholdSweep& sweep);

}  // namespace extendattack::defense
