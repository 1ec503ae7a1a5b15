#include "extendattack/defense.hpp"

#include <algorithm>
#include <cctype>

#include "extendattack/error.hpp"
#include "extendattack/transform.hpp"

namespace extendattack::defense {
namespace {

std::string describe(const DetectionSpan& span) {
  std::string out = span.kind == SpanKind::kToken ? "token " : "lookalike '" + span.pattern_name + "' ";
  out += span.text + " at " + std::to_string(span.begin) + ": " + std::string(radix::to_string(span.validity));
  return out;
}

// Whitespace-collapsed copy of `text` plus, for every output byte, the
// offset of the input byte it came from.
struct Normalized {
  std::string text;
  std::vector<std::size_t> source;
};

Normalized normalize_whitespace(std::string_view text) {
  Normalized out;
  bool pending_space = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (std::isspace(static_cast<unsigned char>(text[i]))) {
      pending_space = !out.text.empty();
      continue;
    }
    if (pending_space) {
      out.text.push_back(' ');
      out.source.push_back(i - 1);
      pending_space = false;
    }
    out.text.push_back(text[i]);
    out.source.push_back(i);
  }
  return out;
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// Removes [begin, end) and the whitespace that joined it to the rest.
void erase_note(std::string& text, std::size_t begin, std::size_t end) {
  const bool at_start = std::all_of(text.begin(), text.begin() + begin, is_space);
  const bool at_end = std::all_of(text.begin() + end, text.end(), is_space);
  if (at_start) {
    while (end < text.size() && is_space(text[end])) ++end;
    begin = 0;
  } else if (at_end) {
    while (begin > 0 && is_space(text[begin - 1])) --begin;
    end = text.size();
  } else {
    // Mid-text note: drop it with the separator that follows it.
    if (text.compare(end, transform::kNoteSeparator.size(), transform::kNoteSeparator) == 0) {
      end += transform::kNoteSeparator.size();
    }
  }
  text.erase(begin, end - begin);
}

bool strip_note(std::string& text, std::string_view note) {
  if (note.empty()) return false;
  const std::string prefix = std::string(note) + std::string(transform::kNoteSeparator);
  const std::string suffix = std::string(transform::kNoteSeparator) + std::string(note);
  if (text.starts_with(prefix)) {
    text.erase(0, prefix.size());
    return true;
  }
  if (text.ends_with(suffix)) {
    text.erase(text.size() - suffix.size());
    return true;
  }
  if (const auto pos = text.find(note); pos != std::string::npos) {
    erase_note(text, pos, pos + note.size());
    return true;
  }
  const Normalized hay = normalize_whitespace(text);
  const Normalized needle = normalize_whitespace(note);
  if (needle.text.empty()) return false;
  const auto pos = hay.text.find(needle.text);
  if (pos == std::string::npos) return false;
  erase_note(text, hay.source[pos], hay.source[pos + needle.text.size() - 1] + 1);
  return true;
}

// One left-to-right pass replacing every strictly valid token.
std::size_t decode_pass(std::string& text) {
  std::string out;
  out.reserve(text.size());
  std::size_t replaced = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    if (text[pos] == '<') {
      if (auto match = radix::parse_token(text, pos, radix::ParseMode::kStrict)) {
        out.push_back(radix::decode_token(*match->token));
        pos = match->end;
        ++replaced;
        continue;
      }
    }
    out.push_back(text[pos++]);
  }
  text = std::move(out);
  return replaced;
}

// Cue phrases of an instructional note; used to flag notes that were not
// stripped because they match no known template.
bool looks_like_note(std::string_view text) {
  for (std::string_view cue : {"angle brackets", "ASCII encoding", "decode", "Decode"}) {
    if (text.find(cue) != std::string_view::npos) return true;
  }
  return false;
}

}  // namespace

std::vector<LookalikePattern> default_lookalikes() {
  return {{"bracket-base", R"(\[base=(\d{1,3})\]\(([0-9A-Za-z]{1,64})\))"}};
}

std::vector<LookalikePattern> lookalikes_from_json(const nlohmann::json& json) {
  if (!json.is_array()) throw Error(ErrorCode::kConfiguration, "lookalike list must be a JSON array");
  std::vector<LookalikePattern> out;
  for (const auto& entry : json) {
    if (!entry.is_object() || !entry.contains("pattern") || !entry["pattern"].is_string()) {
      throw Error(ErrorCode::kConfiguration, "lookalike entries need a string \"pattern\"");
    }
    out.push_back({entry.value("name", "lookalike-" + std::to_string(out.size())),
                   entry["pattern"].get<std::string>()});
  }
  static_cast<void>(Detector{out});  // throws on a pattern that does not compile
  return out;
}

std::string_view to_string(Decision decision) {
  switch (decision) {
    case Decision::kClean: return "Clean";
    case Decision::kSuspicious: return "Suspicious";
    case Decision::kAttack: return "Attack";
  }
  return "Unknown";
}

Detector::Detector(std::vector<LookalikePattern> lookalikes) : patterns_(std::move(lookalikes)) {
  compiled_.reserve(patterns_.size());
  for (const LookalikePattern& p : patterns_) {
    try {
      compiled_.emplace_back(p.pattern, std::regex::ECMAScript);
    } catch (const std::regex_error& e) {
      throw Error(ErrorCode::kConfiguration, "lookalike '" + p.name + "': " + e.what());
    }
  }
}

DetectionReport Detector::detect(std::string_view text) const {
  DetectionReport report;
  for (std::size_t pos = text.find('<'); pos != std::string_view::npos; pos = text.find('<', pos)) {
    auto match = radix::parse_token(text, pos, radix::ParseMode::kTolerant);
    if (!match) {
      ++pos;
      continue;
    }
    DetectionSpan span;
    span.begin = match->begin;
    span.end = match->end;
    span.text = std::string(text.substr(match->begin, match->end - match->begin));
    span.base_value = match->base_value;
    span.digits = match->digits;
    span.validity = match->validity;
    if (match->token) span.decoded = radix::decode_token(*match->token);
    report.spans.push_back(std::move(span));
    pos = match->end;
  }

  const std::string haystack(text);
  for (std::size_t i = 0; i < compiled_.size(); ++i) {
    for (auto it = std::sregex_iterator(haystack.begin(), haystack.end(), compiled_[i]);
         it != std::sregex_iterator(); ++it) {
      const std::smatch& m = *it;
      if (m.length(0) == 0) continue;
      const auto begin = static_cast<std::size_t>(m.position(0));
      const std::size_t end = begin + static_cast<std::size_t>(m.length(0));
      const bool overlaps = std::any_of(report.spans.begin(), report.spans.end(),
                                        [&](const DetectionSpan& s) { return begin < s.end && s.begin < end; });
      if (overlaps) continue;
      DetectionSpan span;
      span.begin = begin;
      span.end = end;
      span.kind = SpanKind::kLookalike;
      span.text = m.str(0);
      span.pattern_name = patterns_[i].name;
      if (m.size() > 2) {
        const std::string base = m.str(1);
        span.digits = m.str(2);
        const bool numeric = !base.empty() && base.size() <= 3 &&
                             std::all_of(base.begin(), base.end(), [](char c) { return c >= '0' && c <= '9'; });
        span.base_value = numeric ? std::stoi(base) : 0;
        span.validity = radix::validate(span.base_value, span.digits);
      } else {
        span.validity = radix::Validity::kInvalidBase;
      }
      report.spans.push_back(std::move(span));
    }
  }
  std::sort(report.spans.begin(), report.spans.end(),
            [](const DetectionSpan& a, const DetectionSpan& b) { return a.begin < b.begin; });

  bool suspicious = false;
  for (const DetectionSpan& span : report.spans) {
    if (span.kind == SpanKind::kToken && span.validity == radix::Validity::kValid) {
      ++report.token_count;
    } else {
      suspicious = true;
      report.reasons.push_back(describe(span));
    }
  }
  if (report.token_count > 0) {
    report.decision = Decision::kAttack;
    report.reasons.insert(report.reasons.begin(),
                          std::to_string(report.token_count) + " valid obfuscation token(s)");
  } else if (suspicious) {
    report.decision = Decision::kSuspicious;
  }
  return report;
}

DetectionReport detect(std::string_view text) {
  static const Detector detector;
  return detector.detect(text);
}

nlohmann::ordered_json to_json(const DetectionReport& report) {
  nlohmann::ordered_json out;
  out["decision"] = std::string(to_string(report.decision));
  out["token_count"] = report.token_count;
  nlohmann::ordered_json spans = nlohmann::ordered_json::array();
  for (const DetectionSpan& span : report.spans) {
    nlohmann::ordered_json s;
    s["start"] = span.begin;
    s["end"] = span.end;
    s["kind"] = span.kind == SpanKind::kToken ? "token" : "lookalike";
    s["text"] = span.text;
    s["base"] = span.base_value;
    s["digits"] = span.digits;
    s["validity"] = std::string(radix::to_string(span.validity));
    if (span.decoded) s["decoded"] = std::string(1, *span.decoded);
    if (!span.pattern_name.empty()) s["pattern"] = span.pattern_name;
    spans.push_back(std::move(s));
  }
  out["spans"] = std::move(spans);
  out["reasons"] = report.reasons;
  return out;
}

PurifiedPrompt purify(std::string_view text, const PurifyOptions& options) {
  PurifiedPrompt result;
  result.text = std::string(text);

  std::vector<std::string> notes;
  if (options.strip_notes) {
    notes = transform::known_note_templates();
    notes.insert(notes.end(), options.extra_note_templates.begin(), options.extra_note_templates.end());
  }
  // Each decode pass shortens the text, so this terminates.
  for (;;) {
    const std::size_t replaced = decode_pass(result.text);
    result.replacements += replaced;
    bool stripped = false;
    for (const std::string& note : notes) {
      if (strip_note(result.text, note)) {
        stripped = true;
        break;
      }
    }
    result.stripped_note = result.stripped_note || stripped;
    if (replaced == 0 && !stripped) break;
  }

  if (options.rewriter != nullptr) result.text = options.rewriter->rewrite(result.text);

  const DetectionReport residual = Detector(options.lookalikes).detect(result.text);
  for (const DetectionSpan& span : residual.spans) result.residual_flags.push_back(describe(span));
  if (options.strip_notes && !result.stripped_note && result.replacements > 0 && looks_like_note(result.text)) {
    result.residual_flags.push_back("note-not-recognized: instructional text left in place");
  }
  return result;
}

nlohmann::ordered_json to_json(const PurifiedPrompt& purified) {
  nlohmann::ordered_json out;
  out["replacements"] = purified.replacements;
  out["stripped_note"] = purified.stripped_note;
  out["residual_flags"] = purified.residual_flags;
  return out;
}

std::string_view to_string(FilterDecision decision) {
  return decision == FilterDecision::kPass ? "Pass" : "Flag";
}

FilterResult ppl_filter(std::string_view text, const PerplexityModel& model, double threshold) {
  if (!(threshold > 0.0)) throw Error(ErrorCode::kConfiguration, "perplexity threshold must be positive");
  FilterResult result;
  result.score = model.score(text);
  result.threshold = threshold;
  result.decision = result.score > threshold ? FilterDecision::kFlag : FilterDecision::kPass;
  return result;
}

ThresholdSweep threshold_sweep(std::span<const double> clean_scores, std::span<const double> attack_scores,
                               std::span<const double> thresholds) {
  std::vector<double> grid(thresholds.begin(), thresholds.end());
  if (grid.empty()) {
    grid.insert(grid.end(), clean_scores.begin(), clean_scores.end());
    grid.insert(grid.end(), attack_scores.begin(), attack_scores.end());
    if (!grid.empty()) grid.push_back(*std::min_element(grid.begin(), grid.end()) - 1.0);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  ThresholdSweep sweep;
  sweep.clean_count = clean_scores.size();
  sweep.attack_count = attack_scores.size();
  for (double t : grid) {
    SweepRow row;
    row.threshold = t;
    row.clean_flagged = static_cast<std::size_t>(
        std::count_if(clean_scores.begin(), clean_scores.end(), [t](double s) { return s > t; }));
    row.attack_flagged = static_cast<std::size_t>(
        std::count_if(attack_scores.begin(), attack_scores.end(), [t](double s) { return s > t; }));
    row.false_positive_rate =
        sweep.clean_count ? static_cast<double>(row.clean_flagged) / static_cast<double>(sweep.clean_count) : 0.0;
    row.detection_rate =
        sweep.attack_count ? static_cast<double>(row.attack_flagged) / static_cast<double>(sweep.attack_count) : 0.0;
    sweep.rows.push_back(row);
  }
  return sweep;
}

nlohmann::ordered_json to_json(const ThresholdSweep& sweep) {
  nlohmann::ordered_json out;
  out["clean_count"] = sweep.clean_count;
  out["attack_count"] = sweep.attack_count;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const SweepRow& row : sweep.rows) {
    nlohmann::ordered_json r;
    r["threshold"] = row.threshold;
    r["clean_flagged"] = row.clean_flagged;
    r["attack_flagged"] = row.attack_flagged;
    r["false_positive_rate"] = row.false_positive_rate;
    r["detection_rate"] = row.detection_rate;
    rows.push_back(std::move(r));
  }
  out["rows"] = std::move(rows);
  return out;
}

}  // namespace extendattack::defense
