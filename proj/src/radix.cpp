#include "extendattack/radix.hpp"

#include <algorithm>
#include <limits>

#include "extendattack/error.hpp"

namespace extendattack::radix {
namespace {

constexpr std::string_view kDigitChars = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ";

// Longest base / digit runs the recognizer will consume. Anything longer is
// not token-shaped; it also bounds the work per '<' in the scanners.
constexpr std::size_t kMaxBaseChars = 3;
constexpr std::size_t kMaxDigitChars = 64;

bool is_ascii_digit(char c) { return c >= '0' && c <= '9'; }

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](char c) {
    return (c >= 'a' && c <= 'z') ? static_cast<char>(c - 'a' + 'A') : c;
  });
  return out;
}

}  // namespace

Validity validate(int base_value, std::string_view digits) {
  if (!is_valid_base(base_value)) return Validity::kInvalidBase;
  if (digits.empty()) return Validity::kInvalidDigit;
  for (char c : digits) {
    const int d = digit_value(c);
    if (d < 0 || d >= base_value) return Validity::kInvalidDigit;
  }
  if (digits.size() > 1 && digits.front() == '0') return Validity::kLeadingZero;
  // Anything longer than 7 digits is >= 2^7 in every base, so out of range.
  if (digits.size() > 7) return Validity::kValueOutOfRange;
  std::uint64_t value = 0;
  for (char c : digits) value = value * base_value + digit_value(c);
  if (value < kMinPrintable || value > kMaxPrintable) return Validity::kValueOutOfRange;
  return Validity::kValid;
}

Base::Base(int value) : value_(value) {
  if (!is_valid_base(value)) {
    throw Error(ErrorCode::kInvalidBase,
                "base " + std::to_string(value) + " is not in {2..9, 11..36}");
  }
}

ObfuscatedToken::ObfuscatedToken(Base base, std::string_view digits)
    : base_(base), digits_(upper(digits)) {
  const std::uint64_t value = from_base(digits_, base_);
  if (digits_.size() > 1 && digits_.front() == '0') {
    throw Error(ErrorCode::kInvalidDigit, "leading zero in token digits '" + digits_ + "'");
  }
  if (value < kMinPrintable || value > kMaxPrintable) {
    throw Error(ErrorCode::kValueOutOfRange,
                "token value " + std::to_string(value) + " is not printable ASCII");
  }
}

int digit_value(char c) noexcept {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'A' && c <= 'Z') return c - 'A' + 10;
  if (c >= 'a' && c <= 'z') return c - 'a' + 10;
  return -1;
}

std::string to_base(std::uint64_t value, Base base) {
  if (value == 0) return "0";
  const auto n = static_cast<std::uint64_t>(base.value());
  std::string out;
  while (value > 0) {
    out.push_back(kDigitChars[value % n]);
    value /= n;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::uint64_t from_base(std::string_view digits, Base base) {
  if (digits.empty()) throw Error(ErrorCode::kInvalidDigit, "empty digit string");
  const auto n = static_cast<std::uint64_t>(base.value());
  std::uint64_t value = 0;
  for (char c : digits) {
    const int d = digit_value(c);
    if (d < 0 || d >= base.value()) {
      throw Error(ErrorCode::kInvalidDigit, std::string("digit '") + c + "' is not valid in base " +
                                                std::to_string(base.value()));
    }
    if (value > (std::numeric_limits<std::uint64_t>::max() - d) / n) {
      throw Error(ErrorCode::kValueOutOfRange, "digit string overflows 64 bits");
    }
    value = value * n + static_cast<std::uint64_t>(d);
  }
  return value;
}

ObfuscatedToken encode_char(char c, Base base) {
  const int code = static_cast<unsigned char>(c);
  if (code < kMinPrintable || code > kMaxPrintable) {
    throw Error(ErrorCode::kNonAsciiInput,
                "character code " + std::to_string(code) + " is not printable ASCII");
  }
  return ObfuscatedToken(base, to_base(static_cast<std::uint64_t>(code), base));
}

char decode_token(const ObfuscatedToken& token) {
  const std::uint64_t value = from_base(token.digits(), token.base());
  if (value < kMinPrintable || value > kMaxPrintable) {
    throw Error(ErrorCode::kValueOutOfRange,
                "token value " + std::to_string(value) + " is not printable ASCII");
  }
  return static_cast<char>(value);
}

std::string render_token(const ObfuscatedToken& token) {
  std::string out = "<(";
  out += std::to_string(token.base().value());
  out += ')';
  out += token.digits();
  out += '>';
  return out;
}

std::string_view to_string(Validity validity) {
  switch (validity) {
    case Validity::kValid: return "valid";
    case Validity::kInvalidBase: return "invalid-base";
    case Validity::kInvalidDigit: return "invalid-digit";
    case Validity::kLeadingZero: return "leading-zero";
    case Validity::kValueOutOfRange: return "value-out-of-range";
  }
  return "unknown";
}

std::optional<TokenMatch> parse_token(std::string_view text, std::size_t offset, ParseMode mode) {
  std::size_t pos = offset;
  if (pos + 1 >= text.size() || text[pos] != '<' || text[pos + 1] != '(') return std::nullopt;
  pos += 2;

  const std::size_t base_begin = pos;
  while (pos < text.size() && is_ascii_digit(text[pos]) && pos - base_begin < kMaxBaseChars + 1) ++pos;
  const std::size_t base_len = pos - base_begin;
  if (base_len == 0 || base_len > kMaxBaseChars) return std::nullopt;
  if (pos >= text.size() || text[pos] != ')') return std::nullopt;
  int base_value = 0;
  for (std::size_t i = base_begin; i < pos; ++i) base_value = base_value * 10 + (text[i] - '0');
  ++pos;

  const std::size_t digits_begin = pos;
  while (pos < text.size() && digit_value(text[pos]) >= 0 && pos - digits_begin < kMaxDigitChars + 1) {
    ++pos;
  }
  const std::size_t digits_len = pos - digits_begin;
  if (digits_len == 0 || digits_len > kMaxDigitChars) return std::nullopt;
  if (pos >= text.size() || text[pos] != '>') return std::nullopt;
  ++pos;

  TokenMatch match;
  match.begin = offset;
  match.end = pos;
  match.base_value = base_value;
  match.digits = std::string(text.substr(digits_begin, digits_len));
  // A zero-padded base such as "(04)" is never rendered, so it is not valid.
  match.validity = text[base_begin] == '0' && base_len > 1 ? Validity::kInvalidBase
                                                           : validate(base_value, match.digits);
  if (match.validity == Validity::kValid) {
    match.token.emplace(Base(base_value), match.digits);
  } else if (mode == ParseMode::kStrict) {
    return std::nullopt;
  }
  return match;
}

Base sample_base(Rng& rng) {
  return Base(kBases[rng.below(kBases.size())]);
}

}  // namespace extendattack::radix
