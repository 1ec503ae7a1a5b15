#include "extendattack/selection.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <utility>

#include "extendattack/error.hpp"

namespace extendattack::selection {

std::size_t utf8_char_length(std::string_view s, std::size_t pos) {
  const auto lead = static_cast<unsigned char>(s[pos]);
  std::size_t len = 1;
  if (lead >= 0xF0 && lead <= 0xF4) len = 4;
  else if (lead >= 0xE0) len = 3;
  else if (lead >= 0xC2 && lead <= 0xDF) len = 2;
  if (lead >= 0xF5) len = 1;
  if (pos + len > s.size()) return 1;
  for (std::size_t i = 1; i < len; ++i) {
    if ((static_cast<unsigned char>(s[pos + i]) & 0xC0) != 0x80) return 1;
  }
  return len;
}

namespace {

bool is_alpha(char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z'); }
bool is_ident_start(char c) { return is_alpha(c) || c == '_'; }
bool is_ident(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }
bool is_blank(char c) { return c == ' ' || c == '\t'; }

// A line of the sequence, flattened to one byte per character. Non-ASCII
// characters become '\x01' so that byte i of `text` is character first + i.
struct Line {
  std::size_t first = 0;
  std::string text;
};

std::vector<Line> split_lines(const CharSequence& seq) {
  std::vector<Line> lines;
  Line current;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const char c = seq.ascii_at(i);
    if (c == '\n') {
      lines.push_back(std::move(current));
      current = Line{i + 1, {}};
      continue;
    }
    current.text.push_back(c == '\0' ? '\x01' : c);
  }
  lines.push_back(std::move(current));
  return lines;
}

std::size_t skip_blanks(std::string_view s, std::size_t pos) {
  while (pos < s.size() && is_blank(s[pos])) ++pos;
  return pos;
}

// If `s` has `word` at `pos` followed by at least one blank, the position
// after the blanks.
std::optional<std::size_t> keyword(std::string_view s, std::size_t pos, std::string_view word) {
  if (s.substr(pos, word.size()) != word) return std::nullopt;
  const std::size_t after = pos + word.size();
  if (after >= s.size() || !is_blank(s[after])) return std::nullopt;
  return skip_blanks(s, after);
}

void add_alpha(const Line& line, std::size_t from, std::size_t to, std::vector<std::size_t>& out) {
  for (std::size_t i = from; i < to && i < line.text.size(); ++i) {
    if (is_alpha(line.text[i])) out.push_back(line.first + i);
  }
}

constexpr std::array<std::string_view, 5> kDefinitionKeywords = {"async def", "def", "function",
                                                                 "func", "fn"};

bool function_names(const std::vector<Line>& lines, std::vector<std::size_t>& out) {
  bool found = false;
  for (const Line& line : lines) {
    const std::string_view text = line.text;
    const std::size_t start = skip_blanks(text, 0);
    for (std::string_view kw : kDefinitionKeywords) {
      const auto name_pos = keyword(text, start, kw);
      if (!name_pos || *name_pos >= text.size() || !is_ident_start(text[*name_pos])) continue;
      std::size_t end = *name_pos;
      while (end < text.size() && is_ident(text[end])) ++end;
      add_alpha(line, *name_pos, end, out);
      found = true;
      break;
    }
  }
  return found;
}

bool import_lines(const std::vector<Line>& lines, std::vector<std::size_t>& out) {
  bool found = false;
  for (const Line& line : lines) {
    const std::string_view text = line.text;
    const std::size_t start = skip_blanks(text, 0);
    const bool is_import =
        keyword(text, start, "import").has_value() ||
        (keyword(text, start, "from").has_value() && text.find(" import ", start) != std::string_view::npos);
    if (!is_import) continue;
    add_alpha(line, start, text.size(), out);
    found = true;
  }
  return found;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// "Word:" or "Some Words:" alone on a line.
bool is_heading(std::string_view line) {
  const std::string_view t = trim(line);
  if (t.size() < 2 || t.back() != ':' || !is_alpha(t.front())) return false;
  return std::all_of(t.begin(), t.end() - 1,
                     [](char c) { return is_alpha(c) || c == ' ' || c == '_' || c == '-'; });
}

std::size_t count_triple_quotes(std::string_view s) {
  std::size_t n = 0;
  for (std::string_view q : {std::string_view("\"\"\""), std::string_view("'''")}) {
    for (std::size_t pos = s.find(q); pos != std::string_view::npos; pos = s.find(q, pos + 3)) ++n;
  }
  return n;
}

bool requirements_section(const std::vector<Line>& lines, std::vector<std::size_t>& out) {
  bool found = false;
  bool in_docstring = false;
  bool in_section = false;
  for (const Line& line : lines) {
    const std::string_view text = line.text;
    const std::size_t quotes = count_triple_quotes(text);
    if (in_section) {
      if (quotes > 0 || is_heading(text)) {
        in_section = false;
      } else {
        add_alpha(line, 0, text.size(), out);
      }
    }
    if (in_docstring && !in_section && quotes == 0 && is_heading(text) &&
        text.find("Requirements") != std::string_view::npos) {
      in_section = true;
      found = true;
    }
    if (quotes % 2 == 1) in_docstring = !in_docstring;
  }
  return found;
}

}  // namespace

std::string_view CharSequence::at(std::size_t index) const {
  const std::size_t begin = offsets_.at(index);
  return std::string_view(source_).substr(begin, offsets_.at(index + 1) - begin);
}

char CharSequence::ascii_at(std::size_t index) const {
  const std::string_view c = at(index);
  return c.size() == 1 && static_cast<unsigned char>(c[0]) < 0x80 ? c[0] : '\0';
}

CharSequence segment(std::string_view query) {
  if (query.empty()) throw Error(ErrorCode::kEmptyQuery, "query is empty");
  CharSequence seq;
  seq.source_ = std::string(query);
  seq.offsets_.reserve(query.size() + 1);
  for (std::size_t pos = 0; pos < query.size(); pos += utf8_char_length(query, pos)) {
    seq.offsets_.push_back(pos);
  }
  seq.offsets_.push_back(query.size());
  return seq;
}

namespace {
constexpr std::array<std::pair<RuleKind, std::string_view>, 5> kRuleNames = {{
    {RuleKind::kAllAlphabetic, "all-alpha"},
    {RuleKind::kWhitespaceOnly, "whitespace"},
    {RuleKind::kFunctionNameAlphabetic, "function-name"},
    {RuleKind::kImportStatementAlphabetic, "import"},
    {RuleKind::kRequirementsDocstringAlphabetic, "requirements"},
}};
}  // namespace

std::string_view to_string(RuleKind kind) {
  for (const auto& [k, name] : kRuleNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

SelectionRule SelectionRule::union_of(std::span<const RuleKind> parts) {
  if (parts.empty()) throw Error(ErrorCode::kConfiguration, "a rule union needs at least one rule");
  SelectionRule rule;
  for (RuleKind kind : parts) {
    if (std::find(rule.parts_.begin(), rule.parts_.end(), kind) == rule.parts_.end()) {
      rule.parts_.push_back(kind);
    }
  }
  return rule;
}

std::string SelectionRule::name() const {
  std::string out;
  for (RuleKind kind : parts_) {
    if (!out.empty()) out += '+';
    out += to_string(kind);
  }
  return out;
}

SelectionRule SelectionRule::parse(std::string_view text) {
  std::vector<RuleKind> kinds;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t plus = std::min(text.find('+', pos), text.size());
    const std::string_view piece = trim(text.substr(pos, plus - pos));
    const auto it = std::find_if(kRuleNames.begin(), kRuleNames.end(),
                                 [&](const auto& entry) { return entry.second == piece; });
    if (it == kRuleNames.end()) {
      throw Error(ErrorCode::kConfiguration, "unknown selection rule '" + std::string(piece) + "'");
    }
    kinds.push_back(it->first);
    pos = plus + 1;
  }
  return union_of(kinds);
}

ValidSet valid_set(const CharSequence& seq, const SelectionRule& rule) {
  ValidSet result;
  std::vector<Line> lines;
  for (RuleKind kind : rule.parts()) {
    switch (kind) {
      case RuleKind::kAllAlphabetic:
        for (std::size_t i = 0; i < seq.size(); ++i) {
          if (is_alpha(seq.ascii_at(i))) result.indices.push_back(i);
        }
        break;
      case RuleKind::kWhitespaceOnly:
        for (std::size_t i = 0; i < seq.size(); ++i) {
          if (seq.ascii_at(i) == ' ') result.indices.push_back(i);
        }
        break;
      case RuleKind::kFunctionNameAlphabetic:
      case RuleKind::kImportStatementAlphabetic:
      case RuleKind::kRequirementsDocstringAlphabetic: {
        if (lines.empty()) lines = split_lines(seq);
        bool found = false;
        if (kind == RuleKind::kFunctionNameAlphabetic) found = function_names(lines, result.indices);
        if (kind == RuleKind::kImportStatementAlphabetic) found = import_lines(lines, result.indices);
        if (kind == RuleKind::kRequirementsDocstringAlphabetic) {
          found = requirements_section(lines, result.indices);
        }
        if (!found) result.warnings.push_back(std::string(to_string(kind)) + ": no matching region");
        break;
      }
    }
  }
  std::sort(result.indices.begin(), result.indices.end());
  result.indices.erase(std::unique(result.indices.begin(), result.indices.end()), result.indices.end());
  return result;
}

std::size_t target_count(std::size_t valid_count, double ratio) {
  const double product = static_cast<double>(valid_count) * ratio;
  const double nearest = std::round(product);
  if (std::abs(product - nearest) <= 1e-9 * std::max(1.0, product)) {
    return static_cast<std::size_t>(nearest);
  }
  return static_cast<std::size_t>(std::ceil(product));
}

TargetSet choose_targets(std::span<const std::size_t> valid, double ratio, Rng& rng) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) {
    throw Error(ErrorCode::kRatioOutOfRange, "obfuscation ratio must lie in [0, 1]");
  }
  const std::size_t k = target_count(valid.size(), ratio);
  std::vector<std::size_t> pool(valid.begin(), valid.end());
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return TargetSet{std::move(pool), ratio, 0};
}

TargetSet choose_targets(std::span<const std::size_t> valid, double ratio, std::uint64_t seed) {
  Rng rng(seed);
  TargetSet targets = choose_targets(valid, ratio, rng);
  targets.seed = seed;
  return targets;
}

}  // namespace extendattack::selection
