#pragma once

#include <cstdint>
#include <string_view>

namespace extendattack {

/// Deterministic 64-bit generator (SplitMix64).
///
/// The algorithm is fixed so that seeds produce the same streams on every
/// platform and in every reimplementation:
///
///   state += 0x9E3779B97F4A7C15
///   z = state
///   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   return z ^ (z >> 31)
///
/// The initial state is the user seed itself.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept;
  std::uint64_t operator()() noexcept { return next(); }

  /// Uniform integer in [0, bound) by rejection: draws below
  /// (2^64 - bound) % bound are discarded, the rest are reduced mod bound.
  /// `bound` must be positive.
  std::uint64_t below(std::uint64_t bound) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

 private:
  std::uint64_t state_;
};

/// The SplitMix64 output finalizer applied to a single value.
std::uint64_t mix64(std::uint64_t value) noexcept;

/// 64-bit FNV-1a over the bytes of `text`.
std::uint64_t fnv1a64(std::string_view text) noexcept;

/// Per-item seed for batch work: mix64(master ^ fnv1a64(item_id)).
/// Depends on the item id rather than its position, so shuffling a dataset
/// does not change any item's attack prompt.
std::uint64_t derive_item_seed(std::uint64_t master_seed, std::string_view item_id) noexcept;

}  // namespace extendattack
