#include "extendattack/ngram.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <vector>

#include "extendattack/error.hpp"

namespace extendattack::defense {
namespace {

constexpr std::string_view kMagic = "extendattack-ngram";
constexpr int kFormatVersion = 1;

std::string to_hex(std::string_view bytes) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (unsigned char c : bytes) {
    out.push_back(kHex[c >> 4]);
    out.push_back(kHex[c & 0xF]);
  }
  return out;
}

std::string from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw Error(ErrorCode::kParseError, "odd-length hex field in model file");
  std::string out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    unsigned value = 0;
    const auto [ptr, ec] = std::from_chars(hex.data() + i, hex.data() + i + 2, value, 16);
    if (ec != std::errc() || ptr != hex.data() + i + 2) {
      throw Error(ErrorCode::kParseError, "bad hex byte in model file");
    }
    out.push_back(static_cast<char>(value));
  }
  return out;
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

// "key value" line with the expected key.
std::string expect_field(std::istream& in, std::string_view key) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kParseError, "model file truncated before " + std::string(key));
  std::istringstream fields(line);
  std::string name;
  std::string value;
  fields >> name;
  std::getline(fields >> std::ws, value);
  if (name != key) throw Error(ErrorCode::kParseError, "expected '" + std::string(key) + "' in model file");
  return value;
}

}  // namespace

NgramModel NgramModel::train(std::span<const std::string> corpus, std::size_t order, double smoothing) {
  if (order == 0) throw Error(ErrorCode::kConfiguration, "n-gram order must be at least 1");
  if (!(smoothing > 0.0)) throw Error(ErrorCode::kConfiguration, "smoothing constant must be positive");
  const bool empty = std::all_of(corpus.begin(), corpus.end(), [](const std::string& s) { return s.empty(); });
  if (empty) throw Error(ErrorCode::kEmptyCorpus, "training corpus has no characters");

  NgramModel model(order, smoothing);
  for (const std::string& text : corpus) {
    std::string context(order - 1, '\0');
    for (unsigned char c : text) {
      model.alphabet_[c] = true;
      ContextCounts& counts = model.contexts_[context];
      ++counts.total;
      ++counts.next[c];
      if (!context.empty()) {
        context.erase(0, 1);
        context.push_back(static_cast<char>(c));
      }
    }
  }
  return model;
}

std::size_t NgramModel::vocabulary_size() const noexcept {
  return static_cast<std::size_t>(std::count(alphabet_.begin(), alphabet_.end(), true)) + 1;
}

double NgramModel::neg_log_prob(std::string_view context, unsigned char c) const {
  const double vocab = static_cast<double>(vocabulary_size());
  double count = 0.0;
  double total = 0.0;
  if (const auto it = contexts_.find(std::string(context)); it != contexts_.end()) {
    total = static_cast<double>(it->second.total);
    if (alphabet_[c]) {
      if (const auto next = it->second.next.find(c); next != it->second.next.end()) {
        count = static_cast<double>(next->second);
      }
    }
  }
  return -std::log((count + smoothing_) / (total + smoothing_ * vocab));
}

double NgramModel::score(std::string_view text) const {
  if (text.empty()) return 0.0;
  std::string context(order_ - 1, '\0');
  double sum = 0.0;
  for (unsigned char c : text) {
    sum += neg_log_prob(context, c);
    if (!context.empty()) {
      context.erase(0, 1);
      context.push_back(static_cast<char>(c));
    }
  }
  return sum / static_cast<double>(text.size());
}

void NgramModel::save(std::ostream& out) const {
  std::string alphabet;
  for (int c = 0; c < 256; ++c) {
    if (alphabet_[static_cast<std::size_t>(c)]) alphabet.push_back(static_cast<char>(c));
  }
  out << kMagic << ' ' << kFormatVersion << '\n';
  out << "order " << order_ << '\n';
  out << "smoothing " << format_double(smoothing_) << '\n';
  out << "alphabet " << to_hex(alphabet) << '\n';
  out << "contexts " << contexts_.size() << '\n';

  std::map<std::string, const ContextCounts*> sorted;
  for (const auto& [context, counts] : contexts_) sorted.emplace(context, &counts);
  for (const auto& [context, counts] : sorted) {
    std::map<unsigned char, std::uint64_t> next(counts->next.begin(), counts->next.end());
    out << (context.empty() ? "-" : to_hex(context)) << ' ' << counts->total;
    for (const auto& [c, n] : next) {
      out << ' ' << to_hex(std::string(1, static_cast<char>(c))) << ':' << n;
    }
    out << '\n';
  }
}

NgramModel NgramModel::load(std::istream& in) {
  std::string header;
  if (!std::getline(in, header) || header != std::string(kMagic) + " " + std::to_string(kFormatVersion)) {
    throw Error(ErrorCode::kParseError, "not an n-gram model file (bad header)");
  }
  std::size_t order = 0;
  double smoothing = 0.0;
  std::size_t context_count = 0;
  try {
    order = std::stoul(expect_field(in, "order"));
    smoothing = std::stod(expect_field(in, "smoothing"));
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::kParseError, "bad order or smoothing value in model file");
  }
  if (order == 0 || !(smoothing > 0.0)) throw Error(ErrorCode::kParseError, "invalid model parameters");
  NgramModel model(order, smoothing);
  for (unsigned char c : from_hex(expect_field(in, "alphabet"))) model.alphabet_[c] = true;
  try {
    context_count = std::stoul(expect_field(in, "contexts"));
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::kParseError, "bad context count in model file");
  }

  for (std::size_t i = 0; i < context_count; ++i) {
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::kParseError, "model file truncated in counts");
    std::istringstream fields(line);
    std::string context_hex;
    ContextCounts counts;
    if (!(fields >> context_hex >> counts.total)) throw Error(ErrorCode::kParseError, "bad context line");
    const std::string context = context_hex == "-" ? std::string() : from_hex(context_hex);
    if (context.size() != order - 1) throw Error(ErrorCode::kParseError, "context length does not match order");
    std::string entry;
    while (fields >> entry) {
      const auto colon = entry.find(':');
      if (colon != 2) throw Error(ErrorCode::kParseError, "bad count entry '" + entry + "'");
      const auto c = static_cast<unsigned char>(from_hex(entry.substr(0, 2))[0]);
      std::uint64_t n = 0;
      const auto [ptr, ec] = std::from_chars(entry.data() + 3, entry.data() + entry.size(), n);
      if (ec != std::errc() || ptr != entry.data() + entry.size()) {
        throw Error(ErrorCode::kParseError, "bad count entry '" + entry + "'");
      }
      counts.next[c] = n;
    }
    model.contexts_.emplace(context, std::move(counts));
  }
  return model;
}

NgramModel baseline_ngram_model(std::span<const std::string> corpus) {
  return NgramModel::train(corpus);
}

}  // namespace extendattack::defense
