#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>

#include "extendattack/defense.hpp"

namespace extendattack::defense {

/// Character n-gram model with additive smoothing over bytes.
///
///   P(c | h) = (count(h c) + alpha) / (count(h) + alpha * V)
///
/// where h is the previous order-1 bytes (start-of-text padded with '\0') and
/// V is the number of distinct training bytes plus one bucket for every
/// unseen byte.
class NgramModel final : public PerplexityModel {
 public:
  static constexpr std::size_t kDefaultOrder = 3;
  static constexpr double kDefaultSmoothing = 0.1;

  /// Throws Error(kEmptyCorpus) when the corpus holds no characters and
  /// Error(kConfiguration) for order 0 or non-positive smoothing.
  static NgramModel train(std::span<const std::string> corpus, std::size_t order = kDefaultOrder,
                          double smoothing = kDefaultSmoothing);

  double score(std::string_view text) const override;

  /// -ln P(c | context) for a single step.
  double neg_log_prob(std::string_view context, unsigned char c) const;

  std::size_t order() const noexcept { return order_; }
  double smoothing() const noexcept { return smoothing_; }
  std::size_t vocabulary_size() const noexcept;

  /// Self-describing text format: header with order, smoothing and alphabet,
  /// then one line per context with its continuation counts.
  void save(std::ostream& out) const;
  /// Throws Error(kParseError) on malformed input.
  static NgramModel load(std::istream& in);

 private:
  struct ContextCounts {
    std::uint64_t total = 0;
    std::unordered_map<unsigned char, std::uint64_t> next;
  };

  NgramModel(std::size_t order, double smoothing) : order_(order), smoothing_(smoothing) {}

  std::size_t order_;
  double smoothing_;
  std::array<bool, 256> alphabet_{};
  std::unordered_map<std::string, ContextCounts> contexts_;
};

/// Trains the default (order 3) model.
NgramModel baseline_ngram_model(std::span<const std::string> corpus);

}  // namespace extendattack::defense
