#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "extendattack/radix.hpp"
#include "extendattack/selection.hpp"

namespace extendattack::transform {

enum class NoteKind { kStandard, kAmbiguous, kCustom };
enum class Placement { kPrefix, kSuffix };

std::string_view to_string(NoteKind kind);
std::string_view to_string(Placement placement);

struct NoteVariant {
  NoteKind kind = NoteKind::kStandard;
  Placement placement = Placement::kPrefix;
  std::string custom_text;  // kCustom only, must be non-empty

  static NoteVariant standard(Placement placement = Placement::kPrefix) {
    return {NoteKind::kStandard, placement, {}};
  }
  static NoteVariant ambiguous(Placement placement = Placement::kPrefix) {
    return {NoteKind::kAmbiguous, placement, {}};
  }
  /// Throws Error(kConfiguration) for empty text.
  static NoteVariant custom(std::string text, Placement placement = Placement::kPrefix);
};

/// Version tag of the built-in note wording. The decoding instruction is a
/// reconstruction (the published note is elided); bump this whenever any
/// template sentence changes so recorded experiments stay attributable.
inline constexpr std::string_view kNoteTemplateVersion = "note-v1";

/// Text between the note and the body.
inline constexpr std::string_view kNoteSeparator = "\n\n";

/// The note for `variant`. A task preamble, when given, replaces the generic
/// decoding sentence (e.g. "You are an expert Python programmer. Your task is
/// to first decode and then complete the Python program and pass all tests.").
/// Custom notes are returned verbatim and ignore the preamble.
std::string note_text(const NoteVariant& variant,
                      std::optional<std::string_view> task_preamble = std::nullopt);

/// Every built-in note without a preamble, in a fixed order.
std::vector<std::string> known_note_templates();

struct TransformRecord {
  std::size_t index = 0;  // character position in the original query
  char original = 0;
  radix::Base base{2};
  std::string digits;

  friend bool operator==(const TransformRecord&, const TransformRecord&) = default;
};

struct ObfuscationConfig {
  selection::SelectionRule rule{selection::RuleKind::kAllAlphabetic};
  double ratio = 0.5;
  std::uint64_t seed = 0;
  NoteVariant note;
};

struct AdversarialPrompt {
  std::string body;
  NoteVariant note;
  std::string full_text;
  std::vector<TransformRecord> ledger;  // ascending by index
  ObfuscationConfig config;
  std::vector<std::string> warnings;  // from the selection rule
};

struct Reassembled {
  std::string text;
  std::vector<TransformRecord> ledger;
};

/// Replaces the character at each target position with the matching token
/// (tokens[i] belongs to targets.indices[i]) and copies everything else.
/// Throws Error(kLedgerMismatch) if the counts differ or a token does not
/// decode to the character it replaces.
Reassembled reassemble(const selection::CharSequence& seq, const selection::TargetSet& targets,
                       std::span<const radix::ObfuscatedToken> tokens);

/// Joins body and note according to the note's placement.
std::string attach_note(std::string_view body, const NoteVariant& note);

/// Segments the query, selects targets, draws one base per target and
/// assembles Q'. A single Rng seeded with config.seed drives, in order, the
/// target shuffle and then one base draw per target in ascending position.
///
/// Throws Error with kEmptyQuery or kRatioOutOfRange.
AdversarialPrompt obfuscate(std::string_view query, const ObfuscationConfig& config);

/// Assembly with caller-chosen targets and bases (bases[i] for
/// targets.indices[i]); used to reproduce fixed cases.
AdversarialPrompt build_prompt(const selection::CharSequence& seq,
                               const selection::TargetSet& targets,
                               std::span<const radix::Base> bases, const ObfuscationConfig& config);

/// Undoes a body using its ledger: each recorded token is replaced by the
/// original character. Throws Error(kLedgerMismatch) if the body does not
/// hold the recorded token at the expected place.
std::string invert_ledger(std::string_view body, std::span<const TransformRecord> ledger);

/// [{index, original, base, digits}, ...]
nlohmann::ordered_json ledger_to_json(std::span<const TransformRecord> ledger);

/// Inverse of ledger_to_json. Throws Error(kParseError) on malformed input.
std::vector<TransformRecord> ledger_from_json(const nlohmann::json& json);

/// Reads {id, prompt} JSONL records and writes one obfuscated record per
/// line: {id, prompt, original_prompt, rule, rho, seed, master_seed, ledger}.
/// Each item uses derive_item_seed(config.seed, id). Returns the number of
/// records written. Throws Error(kParseError) with the 1-based line number.
std::size_t obfuscate_jsonl(std::istream& in, std::ostream& out, const ObfuscationConfig& config);

}  // namespace extendattack::transform
