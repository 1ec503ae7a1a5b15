#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "extendattack/error.hpp"
#include "extendattack/transform.hpp"

using namespace extendattack;
using namespace extendattack::transform;
using radix::Base;

namespace {

std::size_t count_tokens(std::string_view text) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (auto m = radix::parse_token(text, i)) {
      ++n;
      i = m->end - 1;
    }
  }
  return n;
}

}  // namespace

TEST_CASE("standard and ambiguous notes") {
  const std::string standard = note_text(NoteVariant::standard());
  CHECK(standard.rfind("Your task is to first decode", 0) == 0);
  CHECK(standard.find("angle brackets (< >)") != std::string::npos);
  CHECK(standard.ends_with("This corresponds to an ASCII encoding of a character."));
  const std::string ambiguous = note_text(NoteVariant::ambiguous());
  CHECK(ambiguous.find("original decimal number") != std::string::npos);
  const std::string preamble = note_text(NoteVariant::standard(), "You are an expert.");
  CHECK(preamble.rfind("You are an expert. The content", 0) == 0);
  CHECK(note_text(NoteVariant::custom("Decode first.")) == "Decode first.");
  CHECK_THROWS_AS(NoteVariant::custom(""), Error);
  CHECK(known_note_templates().size() == 2);
  CHECK(kNoteTemplateVersion == "note-v1");
}

TEST_CASE("note placement") {
  CHECK(attach_note("BODY", NoteVariant::custom("N", Placement::kPrefix)) == "N\n\nBODY");
  CHECK(attach_note("BODY", NoteVariant::custom("N", Placement::kSuffix)) == "BODY\n\nN");
}

TEST_CASE("case-study prompt assembly") {
  const std::string starter = testing::read_data_file("case_study/starter_code.py");
  auto seq = selection::segment(starter);
  selection::TargetSet targets{{0, 1, 2}, 1.0, 0};
  const std::array<Base, 3> bases = {Base(4), Base(11), Base(21)};
  ObfuscationConfig config;
  config.rule = selection::SelectionRule(selection::RuleKind::kFunctionNameAlphabetic);
  const AdversarialPrompt p = build_prompt(seq, targets, bases, config);
  CHECK(p.body.rfind("<(4)1210><(11)92><(21)4I> strlen(string: str) -> int:", 0) == 0);
  CHECK(p.ledger.size() == 3);
  CHECK(invert_ledger(p.body, p.ledger) == starter);
}

TEST_CASE("reassemble rejects inconsistent tokens") {
  auto seq = selection::segment("abc");
  selection::TargetSet targets{{0, 2}, 1.0, 0};
  std::vector<radix::ObfuscatedToken> ok = {radix::encode_char('a', Base(2)), radix::encode_char('c', Base(3))};
  CHECK(reassemble(seq, targets, ok).text == "<(2)1100001>b<(3)10200>");
  std::vector<radix::ObfuscatedToken> wrong = {radix::encode_char('a', Base(2)), radix::encode_char('d', Base(3))};
  CHECK_THROWS_AS(reassemble(seq, targets, wrong), Error);
  std::vector<radix::ObfuscatedToken> short_list = {radix::encode_char('a', Base(2))};
  CHECK_THROWS_AS(reassemble(seq, targets, short_list), Error);
}

TEST_CASE("obfuscate inverts through the ledger") {
  const auto corpus = testing::prompt_corpus(90, 11);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    ObfuscationConfig config;
    config.ratio = (i % 11) / 10.0;
    config.seed = i;
    const AdversarialPrompt p = obfuscate(corpus[i], config);
    CHECK(invert_ledger(p.body, p.ledger) == corpus[i]);
    CHECK(count_tokens(p.body) == p.ledger.size());
    CHECK(p.full_text == attach_note(p.body, p.config.note));
    for (const TransformRecord& r : p.ledger) {
      CHECK(std::stoi(r.digits, nullptr, r.base.value()) == static_cast<unsigned char>(r.original));
      CHECK(corpus[i][r.index] == r.original);  // ASCII corpus: index is a byte offset
    }
  }
}

TEST_CASE("obfuscate is deterministic and reports rule warnings") {
  ObfuscationConfig config;
  config.rule = selection::SelectionRule(selection::RuleKind::kFunctionNameAlphabetic);
  config.ratio = 1.0;
  config.seed = 99;
  const auto a = obfuscate("x = 1 + 2", config);
  CHECK(a.ledger.empty());
  CHECK(a.body == "x = 1 + 2");
  CHECK_FALSE(a.warnings.empty());
  config.rule = selection::SelectionRule(selection::RuleKind::kAllAlphabetic);
  const auto b = obfuscate("some text here", config);
  const auto c = obfuscate("some text here", config);
  CHECK(b.full_text == c.full_text);
  CHECK(b.ledger == c.ledger);
  CHECK_THROWS_AS(obfuscate("", config), Error);
  config.ratio = 2;
  CHECK_THROWS_AS(obfuscate("abc", config), Error);
}

TEST_CASE("bases of neighbouring targets are independent") {
  ObfuscationConfig config;
  config.ratio = 1.0;
  constexpr int kTrials = 34000;
  int same = 0;
  std::map<std::pair<int, int>, int> pairs;
  for (int s = 0; s < kTrials; ++s) {
    config.seed = s;
    const auto p = obfuscate("aa", config);
    REQUIRE(p.ledger.size() == 2);
    const int b1 = p.ledger[0].base.value();
    const int b2 = p.ledger[1].base.value();
    same += b1 == b2;
    ++pairs[{b1, b2}];
  }
  const double expected = kTrials / 34.0;  // P(equal) = 1/34
  const double sigma = std::sqrt(kTrials * (1.0 / 34) * (33.0 / 34));
  CHECK(std::abs(same - expected) < 4 * sigma);
  CHECK(pairs.size() > 1000);  // of 1156 possible pairs
}

TEST_CASE("ledger JSON round trip") {
  ObfuscationConfig config;
  config.seed = 5;
  const auto p = obfuscate("hello world", config);
  const auto json = ledger_to_json(p.ledger);
  CHECK(ledger_from_json(nlohmann::json::parse(json.dump())) == p.ledger);
  CHECK_THROWS_AS(ledger_from_json(nlohmann::json::parse(R"({"a":1})")), Error);
  CHECK_THROWS_AS(ledger_from_json(nlohmann::json::parse(R"([{"index":0}])")), Error);
  CHECK_THROWS_AS(invert_ledger("hello", p.ledger), Error);
}

TEST_CASE("batch obfuscation uses per-item seeds") {
  std::istringstream in(R"({"id": "a", "prompt": "alpha beta"}

{"id": 7, "prompt": "alpha beta"}
)");
  std::ostringstream out;
  ObfuscationConfig config;
  config.seed = 3;
  CHECK(obfuscate_jsonl(in, out, config) == 2);
  std::istringstream lines(out.str());
  std::string first, second;
  std::getline(lines, first);
  std::getline(lines, second);
  const auto r1 = nlohmann::json::parse(first);
  const auto r2 = nlohmann::json::parse(second);
  CHECK(r1["id"] == "a");
  CHECK(r2["id"] == 7);
  CHECK(r1["seed"].get<std::uint64_t>() == derive_item_seed(3, "a"));
  CHECK(r2["seed"].get<std::uint64_t>() == derive_item_seed(3, "7"));
  CHECK(r1["master_seed"] == 3);
  CHECK(r1["original_prompt"] == "alpha beta");
  ObfuscationConfig item = config;
  item.seed = derive_item_seed(3, "a");
  CHECK(r1["prompt"] == obfuscate("alpha beta", item).full_text);

  std::istringstream bad("{\"id\": 1}\n");
  try {
    obfuscate_jsonl(bad, out, config);
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kParseError);
    CHECK(std::string(e.what()).find("line 1") != std::string::npos);
  }
}
