#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "extendattack/rng.hpp"

namespace extendattack::radix {

inline constexpr int kMinPrintable = 32;
inline constexpr int kMaxPrintable = 126;

/// The numeral systems a character may be written in: 2..9 and 11..36.
/// Base 10 is excluded so a token never shows the plain decimal ASCII code.
inline constexpr std::array<int, 34> kBases = {
    2,  3,  4,  5,  6,  7,  8,  9,  11, 12, 13, 14, 15, 16, 17, 18, 19,
    20, 21, 22, 23, 24, 25, 26, 27, 28, 29, 30, 31, 32, 33, 34, 35, 36};

constexpr bool is_valid_base(int value) noexcept {
  return value >= 2 && value <= 36 && value != 10;
}

class Base {
 public:
  /// Throws Error(kInvalidBase) for anything outside kBases.
  explicit Base(int value);

  int value() const noexcept { return value_; }

  friend bool operator==(Base, Base) = default;
  friend auto operator<=>(Base, Base) = default;

 private:
  int value_;
};

/// One encoded character: a base and the digits of the character's code in
/// that base. Digits are stored in canonical upper case.
class ObfuscatedToken {
 public:
  /// Validates the digit alphabet, leading zeros and the printable range.
  /// Throws Error with kInvalidDigit or kValueOutOfRange.
  ObfuscatedToken(Base base, std::string_view digits);

  Base base() const noexcept { return base_; }
  const std::string& digits() const noexcept { return digits_; }

  friend bool operator==(const ObfuscatedToken&, const ObfuscatedToken&) = default;

 private:
  Base base_;
  std::string digits_;
};

/// Value of a single digit character (0-9, A-Z, a-z), or -1.
int digit_value(char c) noexcept;

std::string to_base(std::uint64_t value, Base base);

/// Positional evaluation; case-insensitive. Throws Error(kInvalidDigit) on an
/// empty string, a foreign character or a digit >= base, and
/// Error(kValueOutOfRange) if the value overflows 64 bits.
std::uint64_t from_base(std::string_view digits, Base base);

/// Throws Error(kNonAsciiInput) outside [32, 126].
ObfuscatedToken encode_char(char c, Base base);

char decode_token(const ObfuscatedToken& token);

/// `<(` base `)` digits `>`
std::string render_token(const ObfuscatedToken& token);

enum class Validity {
  kValid,
  kInvalidBase,      // base is 10, or outside 2..36
  kInvalidDigit,     // some digit >= base
  kLeadingZero,      // digits start with '0' and are longer than one digit
  kValueOutOfRange,  // decodes outside printable ASCII
};

std::string_view to_string(Validity validity);

/// Verdict for a base and digit string read from text. Digits must be
/// alphanumeric.
Validity validate(int base_value, std::string_view digits);

enum class ParseMode {
  kStrict,    // only fully valid tokens match
  kTolerant,  // any `<(d+)[0-9A-Za-z]+>` matches, with a validity verdict
};

struct TokenMatch {
  std::size_t begin = 0;
  std::size_t end = 0;  // one past the closing '>'
  int base_value = 0;
  std::string digits;  // as written in the text
  Validity validity = Validity::kValid;
  std::optional<ObfuscatedToken> token;  // set iff validity == kValid
};

/// Recognizes the token grammar starting exactly at `offset`. Returns
/// nullopt when the text there does not have the token shape (or, in strict
/// mode, has it but is not a valid token).
std::optional<TokenMatch> parse_token(std::string_view text, std::size_t offset,
                                      ParseMode mode = ParseMode::kStrict);

/// Uniform draw from kBases; consumes one or more values from `rng`.
Base sample_base(Rng& rng);

}  // namespace extendattack::radix
