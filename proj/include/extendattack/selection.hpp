#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "extendattack/rng.hpp"

namespace extendattack::selection {

/// A query split into characters (UTF-8 code points; a stray byte that is
/// not valid UTF-8 counts as one character). Concatenating every character
/// reproduces the source byte-for-byte.
class CharSequence {
 public:
  const std::string& source() const noexcept { return source_; }
  std::size_t size() const noexcept { return offsets_.size() - 1; }
  std::string_view at(std::size_t index) const;
  std::size_t byte_offset(std::size_t index) const { return offsets_.at(index); }

  /// The character at `index` if it is a single ASCII byte, else '\0'.
  char ascii_at(std::size_t index) const;

 private:
  friend CharSequence segment(std::string_view query);
  std::string source_;
  std::vector<std::size_t> offsets_;  // size() + 1 entries
};

/// Byte length of the UTF-8 character starting at `pos` (1 for a byte that
/// does not start a well-formed sequence).
std::size_t utf8_char_length(std::string_view text, std::size_t pos);

/// Throws Error(kEmptyQuery) on empty input.
CharSequence segment(std::string_view query);

enum class RuleKind {
  kAllAlphabetic,
  kWhitespaceOnly,
  kFunctionNameAlphabetic,
  kImportStatementAlphabetic,
  kRequirementsDocstringAlphabetic,
};

std::string_view to_string(RuleKind kind);

/// One rule, or the union of several. Parts are kept in the order given and
/// duplicates are dropped.
class SelectionRule {
 public:
  explicit SelectionRule(RuleKind kind) : parts_{kind} {}
  /// Throws Error(kConfiguration) when `parts` is empty.
  static SelectionRule union_of(std::span<const RuleKind> parts);

  const std::vector<RuleKind>& parts() const noexcept { return parts_; }
  bool is_union() const noexcept { return parts_.size() > 1; }

  /// Canonical name: kind names joined by '+', e.g. "function-name+import".
  std::string name() const;

  /// Inverse of name(). Throws Error(kConfiguration) for unknown kinds.
  static SelectionRule parse(std::string_view text);

  friend bool operator==(const SelectionRule&, const SelectionRule&) = default;

 private:
  SelectionRule() = default;
  std::vector<RuleKind> parts_;
};

struct ValidSet {
  std::vector<std::size_t> indices;  // ascending
  /// One entry per code-structure rule that found no matching region.
  std::vector<std::string> warnings;

  bool rule_not_applicable() const noexcept { return !warnings.empty(); }
};

/// Character positions a rule allows to be transformed.
///
/// - all-alpha:     every [A-Za-z]
/// - whitespace:    every ' ' (tabs and newlines are never selected)
/// - function-name: letters of the identifier after `def`, `async def`, `fn`,
///                  `func` or `function` at the start of a line
/// - import:        letters on lines starting with `import`, or `from` with a
///                  later ` import `
/// - requirements:  letters on the lines after a docstring heading such as
///                  "Requirements:", up to the next heading or the end of the
///                  docstring
ValidSet valid_set(const CharSequence& seq, const SelectionRule& rule);

struct TargetSet {
  std::vector<std::size_t> indices;  // ascending, distinct
  double ratio = 0.0;
  std::uint64_t seed = 0;
};

/// ceil(valid_count * ratio). Products within 1e-9 of an integer are snapped
/// to it first, so 10 * 0.3 yields 3 rather than 4.
std::size_t target_count(std::size_t valid_count, double ratio);

/// Samples exactly target_count(valid.size(), ratio) indices without
/// replacement with a partial Fisher-Yates shuffle over `valid` in the order
/// given. Throws Error(kRatioOutOfRange) unless 0 <= ratio <= 1.
TargetSet choose_targets(std::span<const std::size_t> valid, double ratio, std::uint64_t seed);

/// Same, continuing an existing stream. TargetSet::seed is left at 0.
TargetSet choose_targets(std::span<const std::size_t> valid, double ratio, Rng& rng);

}  // namespace extendattack::selection
