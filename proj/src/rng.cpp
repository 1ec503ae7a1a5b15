#include "extendattack/rng.hpp"

#include "extendattack/error.hpp"

namespace extendattack {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidDigit: return "InvalidDigit";
    case ErrorCode::kNonAsciiInput: return "NonAsciiInput";
    case ErrorCode::kValueOutOfRange: return "ValueOutOfRange";
    case ErrorCode::kInvalidBase: return "InvalidBase";
    case ErrorCode::kEmptyQuery: return "EmptyQuery";
    case ErrorCode::kRatioOutOfRange: return "RatioOutOfRange";
    case ErrorCode::kLedgerMismatch: return "LedgerMismatch";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kDisjointIds: return "DisjointIds";
    case ErrorCode::kConfiguration: return "ConfigurationError";
    case ErrorCode::kIo: return "IoError";
  }
  return "Unknown";
}

std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t Rng::next() noexcept {
  state_ += 0x9E3779B97F4A7C15ULL;
  return mix64(state_);
}

std::uint64_t Rng::below(std::uint64_t bound) noexcept {
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t draw = next();
    if (draw >= threshold) return draw % bound;
  }
}

std::uint64_t fnv1a64(std::string_view text) noexcept {
  std::uint64_t hash = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001B3ULL;
  }
  return hash;
}

std::uint64_t derive_item_seed(std::uint64_t master_seed, std::string_view item_id) noexcept {
  return mix64(master_seed ^ fnv1a64(item_id));
}

}  // namespace extendattack
