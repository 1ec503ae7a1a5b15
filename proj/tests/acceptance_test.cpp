// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "extendattack/cli.hpp"
#include "extendattack/defense.hpp"
#include "extendattack/harness.hpp"
#include "extendattack/mock_server.hpp"
#include "extendattack/ngram.hpp"
#include "extendattack/presets.hpp"
#include "extendattack/radix.hpp"
#include "extendattack/selection.hpp"
#include "extendattack/transform.hpp"

namespace fs = std::filesystem;
using namespace extendattack;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::size_t count_substr(std::string_view text, std::string_view needle) {
  std::size_t n = 0;
  for (std::size_t pos = text.find(needle); pos != std::string_view::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

struct CliOutcome {
  int code;
  std::string out;
};

CliOutcome cli(const std::vector<std::string>& args) {
  std::istringstream in;
  std::ostringstream out, err;
  const int code = cli::run(args, in, out, err);
  return {code, out.str() + err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("extendattack_acceptance_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Prompt in the style of the preset's benchmark.
std::string prompt_for(const presets::Preset& preset, std::mt19937_64& gen) {
  if (preset.benchmark.rfind("aime", 0) == 0) return testing::aime_prompt(gen);
  if (preset.benchmark == "humaneval") return testing::humaneval_prompt(gen);
  return testing::bcb_prompt(gen);
}

transform::ObfuscationConfig config_for(const presets::Preset& preset, double rho, std::uint64_t seed) {
  transform::ObfuscationConfig c;
  c.rule = preset.rule;
  c.ratio = rho;
  c.seed = seed;
  c.note = transform::NoteVariant::standard(preset.placement);
  return c;
}

Verdict criterion1() {
  const auto start = std::chrono::steady_clock::now();
  int cases = 0;
  int failures = 0;
  for (int c = radix::kMinPrintable; c <= radix::kMaxPrintable; ++c) {
    for (int b : radix::kBases) {
      ++cases;
      const auto token = radix::encode_char(static_cast<char>(c), radix::Base(b));
      if (radix::decode_token(token) != static_cast<char>(c) || std::stoi(token.digits(), nullptr, b) != c) ++failures;
    }
  }
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return {cases == 3230 && failures == 0 && ms < 1000.0,
          std::to_string(cases) + " cases, " + std::to_string(failures) + " failures, " +
              std::to_string(static_cast<int>(ms)) + " ms"};
}

Verdict criterion2() {
  const std::string starter = testing::read_data_file("case_study/starter_code.py");
  const std::string attack = testing::read_data_file("case_study/attack_prompt.txt");
  const auto def = selection::segment("def");
  const std::array<radix::Base, 3> bases = {radix::Base(4), radix::Base(11), radix::Base(21)};
  const auto built = transform::build_prompt(def, {{0, 1, 2}, 1.0, 0}, bases, {});
  const bool tokens_ok = built.body == "<(4)1210><(11)92><(21)4I>";
  const auto purified = defense::purify(attack);
  const bool restored = purified.text.find(starter) != std::string::npos && purified.replacements == 3 &&
                        defense::detect(purified.text).token_count == 0;
  return {tokens_ok && restored, "rendered \"" + built.body + "\", starter code " +
                                     (restored ? "restored" : "NOT restored") + " after " +
                                     std::to_string(purified.replacements) + " replacements"};
}

Verdict criterion3() {
  std::mt19937_64 gen(3003);
  std::size_t checks = 0;
  std::size_t mismatches = 0;
  std::vector<std::string> corpus;
  for (int i = 0; i < 1000; ++i) corpus.push_back(testing::random_prompt(gen));
  for (const auto& preset : presets::all()) {
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      const std::size_t valid = selection::valid_set(selection::segment(corpus[i]), preset.rule).indices.size();
      for (int tenths = 0; tenths <= 10; ++tenths) {
        const auto p = transform::obfuscate(corpus[i], config_for(preset, tenths / 10.0, i));
        const std::size_t expected = (valid * tenths + 9) / 10;
        ++checks;
        if (p.ledger.size() != expected || count_substr(p.body, "<(") != expected) ++mismatches;
      }
    }
  }
  return {mismatches == 0, std::to_string(checks) + " (prompt, rho, preset) checks, " + std::to_string(mismatches) +
                               " mismatches"};
}

Verdict criterion4() {
  std::mt19937_64 gen(4004);
  std::vector<std::string> corpus;
  for (int i = 0; i < 500; ++i) corpus.push_back(testing::random_prompt(gen));
  std::size_t checks = 0;
  std::size_t mismatches = 0;
  for (const auto& preset : presets::all()) {
    for (const std::string& q : corpus) {
      for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto p = transform::obfuscate(q, config_for(preset, preset.rho, seed));
        ++checks;
        if (defense::purify(p.full_text).text != q) ++mismatches;
      }
    }
  }
  return {mismatches == 0, std::to_string(checks) + " prompts, " + std::to_string(mismatches) + " mismatches"};
}

Verdict criterion5() {
  std::mt19937_64 gen(5005);
  std::uniform_int_distribution<std::size_t> preset_pick(0, presets::all().size() - 1);
  std::size_t attack_hits = 0;
  for (int i = 0; i < 500; ++i) {
    const auto& preset = presets::all()[preset_pick(gen)];
    const auto p = transform::obfuscate(prompt_for(preset, gen), config_for(preset, preset.rho, i));
    if (defense::detect(p.full_text).decision == defense::Decision::kAttack) ++attack_hits;
  }
  std::size_t clean_attacks = 0;
  for (const auto& doc : testing::clean_code_corpus(500, 5006)) {
    if (defense::detect(doc).decision == defense::Decision::kAttack) ++clean_attacks;
  }
  std::size_t lookalikes = 0;
  std::size_t suspicious = 0;
  for (int c = radix::kMinPrintable; c <= radix::kMaxPrintable; ++c) {
    for (const std::string& text : {"x <(10)" + std::to_string(c) + "> y", "x [base=10](" + std::to_string(c) + ") y"}) {
      ++lookalikes;
      if (defense::detect(text).decision == defense::Decision::kSuspicious) ++suspicious;
    }
  }
  return {attack_hits == 500 && clean_attacks == 0 && suspicious == lookalikes,
          "attack recall " + std::to_string(attack_hits) + "/500, clean false attacks " + std::to_string(clean_attacks) +
              "/500, base-10 lookalikes suspicious " + std::to_string(suspicious) + "/" + std::to_string(lookalikes)};
}

double amplification(const std::string& scenario, const std::vector<harness::DatasetItem>& items,
                     const transform::ObfuscationConfig& attack) {
  harness::MockServer server(harness::builtin_scenario(scenario));
  harness::HttpChatClient client({server.base_url(), "", std::chrono::milliseconds(10000)});
  harness::RunOptions options;
  const auto da = harness::run_condition(items, harness::Condition::direct(), client, options);
  const auto ea = harness::run_condition(items, harness::Condition::extend_attack(attack), client, options);
  const auto report = harness::compute_metrics(da, ea);
  if (report.aggregates.included != items.size()) return -1;
  if (std::abs(report.aggregates.mean_amplification - report.aggregates.ratio_of_means) > 1e-12) return -1;
  return report.aggregates.mean_amplification;
}

Verdict criterion6() {
  const auto preset = *presets::find("humaneval-o3");
  const auto case_study = harness::load_dataset(std::string(EXTENDATTACK_DATA_DIR) + "/case_study.jsonl");
  const double a = amplification("case-study", case_study, config_for(preset, preset.rho, 1));
  std::mt19937_64 gen(6006);
  std::vector<harness::DatasetItem> humaneval;
  for (int i = 0; i < 40; ++i) humaneval.push_back({"HumanEval/" + std::to_string(i), testing::humaneval_prompt(gen), {}});
  const double b = amplification("o3-humaneval", humaneval, config_for(preset, preset.rho, 1));
  char buf[160];
  std::snprintf(buf, sizeof buf, "case study %.4f (target 4.556), o3/HumanEval stub %.4f (target 2.547)", a, b);
  return {std::abs(a - 4.556) <= 0.001 && std::abs(b - 2.547) <= 0.001, buf};
}

Verdict criterion7() {
  const std::string starter = std::string(EXTENDATTACK_DATA_DIR) + "/case_study/starter_code.py";
  const std::string dataset = std::string(EXTENDATTACK_DATA_DIR) + "/case_study.jsonl";
  const auto e1 = cli({"encode", starter, "--preset", "humaneval-o3", "--seed", "11"});
  const auto e2 = cli({"encode", starter, "--preset", "humaneval-o3", "--seed", "11"});
  const fs::path a = scratch("run_a");
  const fs::path b = scratch("run_b");
  const auto r1 = cli({"run", "--dataset", dataset, "--mock", "case-study", "--preset", "humaneval-o3", "--seed", "11",
                       "--out-dir", a.string()});
  const auto r2 = cli({"run", "--dataset", dataset, "--mock", "case-study", "--preset", "humaneval-o3", "--seed", "11",
                       "--out-dir", b.string()});
  bool files_equal = true;
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    ++files;
    files_equal = files_equal && slurp(entry.path()) == slurp(b / entry.path().filename());
  }
  const bool ok = e1.code == 0 && r1.code == 0 && e1.out == e2.out && r1.out == r2.out && files_equal && files == 4;
  return {ok, std::string("encode ") + (e1.out == e2.out ? "identical" : "differs") + ", run report " +
                  (r1.out == r2.out ? "identical" : "differs") + ", " + std::to_string(files) + " run files " +
                  (files_equal ? "identical" : "differ")};
}

Verdict criterion8() {
  const fs::path dir = scratch("sweep");
  {
    // Function names of exactly 20 letters: the plateau (10 tokens) is hit at rho = 0.5.
    std::ofstream data(dir / "data.jsonl");
    const std::array<std::string, 3> names = {"abcdefghijklmnopqrst", "computeaveragevalues", "filtervaluesbyprefix"};
    for (const auto& name : names) {
      data << nlohmann::json({{"id", name}, {"prompt", "def " + name + "(values):\n    return values\n"}}).dump()
           << "\n";
    }
  }
  const auto out = cli({"sweep", "--dataset", (dir / "data.jsonl").string(), "--mock", "affine", "--rule",
                        "function-name", "--rhos", "0.0:1.0:0.1", "--seed", "8"});
  std::istringstream csv(out.out);
  std::string line;
  std::getline(csv, line);
  std::vector<std::pair<double, double>> rows;
  while (std::getline(csv, line)) {
    std::istringstream fields(line);
    std::string rho, length;
    std::getline(fields, rho, ',');
    std::getline(fields, length, ',');
    rows.emplace_back(std::stod(rho), std::stod(length));
  }
  bool shape = out.code == 0 && rows.size() == 11;
  for (std::size_t i = 0; shape && i < rows.size(); ++i) {
    const double expected = 300.0 + 40.0 * std::min<double>(std::ceil(20 * rows[i].first - 1e-9), 10);
    shape = std::abs(rows[i].second - expected) < 1e-9 && (i == 0 || rows[i].second >= rows[i - 1].second);
  }
  std::string lengths;
  for (const auto& [rho, length] : rows) lengths += (lengths.empty() ? "" : " ") + std::to_string(static_cast<int>(length));
  return {shape, std::to_string(rows.size()) + " rows, mean lengths " + lengths};
}

Verdict criterion9() {
  std::mt19937_64 gen(9009);
  std::vector<std::string> train;
  for (int i = 0; i < 300; ++i) train.push_back(testing::random_prompt(gen));
  const auto model = defense::baseline_ngram_model(train);
  std::vector<double> clean_scores;
  std::vector<double> attack_scores;
  std::uniform_int_distribution<std::size_t> preset_pick(0, presets::all().size() - 1);
  for (int i = 0; i < 150; ++i) {
    const auto& preset = presets::all()[preset_pick(gen)];
    const std::string q = prompt_for(preset, gen);
    clean_scores.push_back(model.score(q));
    attack_scores.push_back(model.score(transform::obfuscate(q, config_for(preset, preset.rho, i)).full_text));
  }
  const auto report = nlohmann::json::parse(defense::to_json(defense::threshold_sweep(clean_scores, attack_scores)).dump());
  std::size_t inconsistent = 0;
  const auto& rows = report.at("rows");
  for (const auto& row : rows) {
    const double t = row.at("threshold").get<double>();
    std::size_t fp = 0, tp = 0;
    for (double s : clean_scores) fp += s > t;
    for (double s : attack_scores) tp += s > t;
    if (std::abs(row.at("false_positive_rate").get<double>() - fp / 150.0) > 1e-9 ||
        std::abs(row.at("detection_rate").get<double>() - tp / 150.0) > 1e-9) {
      ++inconsistent;
    }
  }
  const bool ok = report.at("clean_count") == 150 && report.at("attack_count") == 150 && !rows.empty() &&
                  inconsistent == 0;
  return {ok, std::to_string(rows.size()) + " threshold rows over 150 clean + 150 attacked, " +
                  std::to_string(inconsistent) + " inconsistent"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"exhaustive round trip", criterion1},     {"case-study golden fixture", criterion2},
      {"rho compliance", criterion3},            {"purifier inversion", criterion4},
      {"detector recall/precision", criterion5}, {"harness metric fidelity", criterion6},
      {"determinism", criterion7},               {"sweep structure", criterion8},
      {"perplexity report consistency", criterion9},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ": " << v.detail
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
