// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "gks/corpus.hpp"
#include "gks/detection.hpp"
#include "gks/embedding.hpp"
#include "gks/eval.hpp"
#include "gks/jsonlib.hpp"
#include "gks/kernels.hpp"
#include "gks/model_io.hpp"
#include "gks/pipeline.hpp"
#include "gks/selector.hpp"
#include "gks/tokenize.hpp"
#include "oracles.hpp"
#include "random_instances.hpp"

using namespace gks;
namespace fs = std::filesystem;

namespace {

const fs::path kData = GKS_TEST_DATA;
const fs::path kWork = GKS_WORK_DIR;
const std::string kCli = GKS_CLI_PATH;

struct Outcome {
  bool pass = false;
  std::string detail;
};

class ScaledProvider final : public EmbeddingProvider {
 public:
  ScaledProvider(const EmbeddingProvider& base, double c) : base_(base), c_(c) {}
  std::size_t dim() const override { return base_.dim(); }
  void embed(const std::string& token, std::span<double> out) const override {
    base_.embed(token, out);
    for (double& x : out) x *= c_;
  }

 private:
  const EmbeddingProvider& base_;
  double c_;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

oracle::Rows embed_rows(const EmbeddingProvider& provider, const std::string& text, std::size_t cap) {
  auto tokens = tokenize(text);
  if (tokens.size() > cap) tokens.resize(cap);
  oracle::Rows rows;
  for (const auto& t : tokens) rows.push_back(provider.embed(t));
  return rows;
}

std::vector<double> oracle_features(const EmbeddingProvider& provider, const std::string& question,
                                    const KnowledgeSnippet& snippet, const KernelBank& bank) {
  return oracle::soft_tf(embed_rows(provider, question, kMaxQuestionTokens),
                         embed_rows(provider, snippet.text(), kMaxKnowledgeTokens), bank.mus, bank.sigmas);
}

std::string random_text(std::mt19937_64& rng, std::size_t max_words) {
  std::uniform_int_distribution<std::size_t> n(1, max_words), w(0, 11);
  std::string s;
  const std::size_t count = n(rng);
  for (std::size_t i = 0; i < count; ++i) s += (i ? " " : "") + std::string("t") + std::to_string(w(rng));
  return s;
}

std::vector<KnowledgeSnippet> random_candidates(std::mt19937_64& rng, std::size_t l, std::size_t max_words) {
  std::vector<KnowledgeSnippet> out;
  for (std::size_t n = 0; n < l; ++n) {
    out.push_back({"d", "e", std::to_string(n), random_text(rng, max_words), random_text(rng, max_words)});
  }
  return out;
}

Outcome gradient_check() {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  std::size_t checked = 0;
  for (bool attention : {false, true}) {
    for (int t = 0; t < 100; ++t) {
      const auto inst = testing_support::random_instance(rng, 10, 8, 11, attention);
      const auto analytic = loss_gradient(inst.features, inst.model, inst.golden);
      const auto numeric = testing_support::numeric_gradient(inst, 1e-5);
      worst = std::max(worst, testing_support::max_relative_error(analytic, numeric, 1e-4));
      ++checked;
    }
  }
  return {worst < 1e-5, std::to_string(checked) + " instances, max rel err " + fmt(worst)};
}

Outcome normalization() {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  double worst = 0.0;
  for (std::size_t l : {1u, 2u, 8u, 100u, 1000u}) {
    for (bool attention : {false, true}) {
      std::vector<NodeFeature> f(l);
      for (auto& s : f) {
        s.values.resize(11);
        for (auto& x : s.values) x = n(rng);
      }
      auto model = SelectorModel::zeros(KernelBank::standard(), attention);
      for (auto& w : model.readout_weights) w = n(rng);
      const auto d = readout(f, model);
      double sum = 0.0;
      for (double p : d.probabilities) sum += p;
      worst = std::max(worst, std::abs(sum - 1.0));
    }
  }
  return {worst <= 1e-9, "max |sum - 1| " + fmt(worst)};
}

Outcome permutation_invariance() {
  std::mt19937_64 rng(77);
  const HashedGaussianProvider provider(42, 64);
  const std::string question = random_text(rng, 6);
  const auto cands = random_candidates(rng, 8, 6);
  std::normal_distribution<double> n;
  bool ok = true;
  double worst = 0.0;
  for (bool attention : {false, true}) {
    auto model = SelectorModel::zeros(KernelBank::standard(), attention);
    for (auto& w : model.readout_weights) w = n(rng);
    const auto base = rank(model, provider, question, cands);
    auto prob_of = [](const std::vector<RankedSnippet>& r, const SnippetRef& ref) {
      for (const auto& x : r) {
        if (x.ref == ref) return x.probability;
      }
      return -1.0;
    };
    auto shuffled = cands;
    for (int t = 0; t < 100; ++t) {
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      const auto r = rank(model, provider, question, shuffled);
      for (const auto& x : base) worst = std::max(worst, std::abs(prob_of(r, x.ref) - x.probability));
      const bool tie_at_top = r.size() > 1 && r[0].probability == r[1].probability;
      if (!tie_at_top && !(r[0].ref == base[0].ref)) ok = false;
    }
  }
  return {ok && worst <= 1e-12, "200 permutations, max |dp| " + fmt(worst)};
}

Outcome scale_invariance() {
  std::mt19937_64 rng(9);
  const HashedGaussianProvider provider(42, 64);
  std::normal_distribution<double> n;
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const std::string question = random_text(rng, 6);
    const auto cands = random_candidates(rng, 8, 6);
    auto model = SelectorModel::zeros(KernelBank::standard(), t % 2 == 1);
    for (auto& w : model.readout_weights) w = n(rng);
    const auto base = rank(model, provider, question, cands);
    for (double c : {1e-3, 1.0, 1e3}) {
      const ScaledProvider scaled(provider, c);
      const auto r = rank(model, scaled, question, cands);
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (!(r[i].ref == base[i].ref)) return {false, "ranking changed at c = " + fmt(c)};
        worst = std::max(worst, std::abs(r[i].probability - base[i].probability));
      }
    }
  }
  return {worst <= 1e-9, "max |dp| " + fmt(worst)};
}

Outcome hotel_parking_fixture() {
  const auto corpus = load_corpus(kData / "hotel_parking/knowledge.json", kData / "hotel_parking/logs.json",
                                  kData / "hotel_parking/labels.json");
  const auto& cands = candidate_set(corpus, EntityKey{"hotel", "0"});
  const std::string question = corpus.dialogs.at(0).current_turn().text;
  const HashedGaussianProvider provider(42, 64);
  const auto model = SelectorModel::exact_match();
  const auto ranked = rank(model, provider, question, cands);

  const auto feats = node_features(question, cands, provider, model.kernels);
  double worst = 0.0;
  std::vector<double> oracle_scores;
  for (std::size_t n = 0; n < cands.size(); ++n) {
    const auto want = oracle_features(provider, question, cands[n], model.kernels);
    double z = 0.0;
    for (std::size_t k = 0; k < want.size(); ++k) {
      worst = std::max(worst, std::abs(want[k] - feats[n].values[k]));
      z += model.readout_weights[k] * want[k];
    }
    oracle_scores.push_back(z);
  }
  const auto oracle_top = std::max_element(oracle_scores.begin(), oracle_scores.end()) - oracle_scores.begin();
  const bool ok = ranked.size() == 8 && ranked[0].ref == SnippetRef{"hotel", "0", "0"} && oracle_top == 0 &&
                  ranked[0].probability > ranked[1].probability && worst <= 1e-10;
  return {ok, "top " + ranked[0].ref.doc_id + " p=" + fmt(ranked[0].probability) + ", oracle diff " + fmt(worst)};
}

Outcome synthetic_selection() {
  SynthParams params;
  params.n_dialogs = 200;
  params.n_candidates = 8;
  params.detect_marker_rate = 0.0;
  const auto corpus = synth_corpus(42, params);
  const HashedGaussianProvider provider(42, 64);
  const auto trained = train_selector(corpus, provider, SelectorHyper{});
  const auto ours = evaluate_selector(trained.model, provider, corpus).metrics;
  const auto baseline = evaluate_tfidf(corpus).metrics;
  const std::vector<ReportEntry> entries{{"gks", std::nullopt, ours}, {"tfidf", std::nullopt, baseline}};
  const auto md = report(entries, ReportFormat::Markdown);
  const bool has_tfidf = md.find("| tfidf |") != std::string::npos;
  return {ours.acc_at_1 >= 0.95 && has_tfidf && ours.n_instances == 200,
          "Acc@1 " + format4(ours.acc_at_1) + " (tfidf " + format4(baseline.acc_at_1) + ", chance 0.125)"};
}

Outcome synthetic_detection() {
  SynthParams params;
  params.n_dialogs = 200;
  params.detect_marker_rate = 0.5;
  const auto corpus = synth_corpus(42, params);
  std::size_t targets = 0;
  for (const auto& d : corpus.dialogs) targets += d.target ? 1 : 0;
  const auto trained = train_detector(corpus, DetectorHyper{});
  bool monotone = true;
  for (std::size_t e = 1; e < trained.epoch_loss.size(); ++e) {
    if (trained.epoch_loss[e] > trained.epoch_loss[e - 1]) monotone = false;
  }
  const auto m = evaluate_detector(trained.model, corpus);
  return {m.f1 >= 0.99 && monotone && targets == 100 && trained.epoch_loss.back() < trained.epoch_loss.front(),
          "F1 " + format4(m.f1) + ", loss " + fmt(trained.epoch_loss.front()) + " -> " +
              fmt(trained.epoch_loss.back()) + (monotone ? ", non-increasing" : ", INCREASED")};
}

Outcome metric_oracles() {
  std::mt19937_64 rng(1000);
  std::bernoulli_distribution coin(0.5);
  std::uniform_int_distribution<std::size_t> len(1, 40), pos(1, 10);
  std::size_t mismatches = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = len(rng);
    std::vector<bool> pv(n), gv(n);
    std::unique_ptr<bool[]> p(new bool[n]), g(new bool[n]);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = pv[i] = coin(rng);
      g[i] = gv[i] = coin(rng);
    }
    const auto got = detection_metrics(std::span<const bool>(p.get(), n), std::span<const bool>(g.get(), n));
    const auto c = oracle::confusion(pv, gv);
    const double op = c.tp + c.fp ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
    const double orc = c.tp + c.fn ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
    const double of = op + orc > 0 ? 2 * op * orc / (op + orc) : 0.0;
    if (!(got.counts == ConfusionCounts{c.tp, c.fp, c.fn, c.tn}) || got.precision != op || got.recall != orc ||
        got.f1 != of) {
      ++mismatches;
    }
  }
  for (int t = 0; t < 1000; ++t) {
    std::vector<std::size_t> v(len(rng));
    for (auto& x : v) x = pos(rng);
    const auto got = selection_metrics(v);
    const auto want = oracle::selection(v);
    if (got.acc_at_1 != want.acc1 || got.acc_at_5 != want.acc5 || got.mrr_at_5 != want.mrr5) ++mismatches;
  }
  // tp = 9719, fp = 281, fn = 8: P = 0.9719, R = 0.99918 (0.9992 at 4 decimals).
  const auto reference = detection_metrics(ConfusionCounts{9719, 281, 8, 0});
  const bool f1_ok = std::abs(reference.f1 - 0.9853) < 5e-4;
  return {mismatches == 0 && f1_ok,
          std::to_string(mismatches) + " mismatches in 2000 cases, F1(0.9719, 0.9992) = " + format4(reference.f1)};
}

Outcome node_feature_oracle() {
  std::mt19937_64 rng(50);
  const HashedGaussianProvider provider(11, 8);
  const auto bank = KernelBank::standard();
  double worst = 0.0;
  std::uniform_int_distribution<std::size_t> l(1, 6);
  for (int t = 0; t < 50; ++t) {
    const std::string question = random_text(rng, 8);
    const auto cands = random_candidates(rng, l(rng), 4);
    const auto got = node_features(question, cands, provider, bank);
    for (std::size_t n = 0; n < cands.size(); ++n) {
      const auto want = oracle_features(provider, question, cands[n], bank);
      for (std::size_t k = 0; k < want.size(); ++k) worst = std::max(worst, std::abs(want[k] - got[n].values[k]));
    }
  }
  return {worst <= 1e-10, "50 instances, max |diff| " + fmt(worst)};
}

std::string slurp(const fs::path& p) { return read_text_file(p); }

Outcome cli_determinism() {
  std::vector<std::string> artifacts{"knowledge.json", "logs.json", "labels.json", "select.json",
                                     "detect.json",    "eval.json", "eval.md"};
  std::vector<std::vector<std::string>> runs;
  for (int r = 0; r < 2; ++r) {
    const fs::path dir = kWork / ("run" + std::to_string(r));
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string d = "\"" + dir.string() + "\"";
    const std::string corpus =
        " --knowledge " + d + "/knowledge.json --logs " + d + "/logs.json --labels " + d + "/labels.json";
    const std::vector<std::string> steps{
        "synth --seed 42 --n-dialogs 200 --n-candidates 8 --out " + d,
        "train select" + corpus + " --out " + d + "/select.json",
        "train detect" + corpus + " --out " + d + "/detect.json",
        "eval" + corpus + " --model " + d + "/select.json --detector " + d + "/detect.json --tfidf --format json > " +
            d + "/eval.json",
        "eval" + corpus + " --model " + d + "/select.json --detector " + d + "/detect.json --tfidf --format md > " +
            d + "/eval.md",
    };
    for (const auto& s : steps) {
      const std::string cmd = "\"" + kCli + "\" " + s + (s.find(" > ") == std::string::npos ? " > /dev/null" : "");
      if (std::system(cmd.c_str()) != 0) return {false, "command failed: gks " + s};
    }
    std::vector<std::string> contents;
    for (const auto& a : artifacts) contents.push_back(slurp(dir / a));
    runs.push_back(std::move(contents));
  }
  for (std::size_t i = 0; i < artifacts.size(); ++i) {
    if (runs[0][i] != runs[1][i]) return {false, artifacts[i] + " differs between runs"};
    if (runs[0][i].empty()) return {false, artifacts[i] + " is empty"};
  }
  return {true, std::to_string(artifacts.size()) + " artifacts byte-identical"};
}

Outcome generation_golden() {
  const auto fixtures = nlohmann::json::parse(slurp(kData / "generation_fixtures.json"));
  std::size_t matched = 0;
  for (const auto& f : fixtures) {
    KnowledgeSnippet s{"d", "e", "0", f["snippet"]["title"], f["snippet"]["body"]};
    std::vector<DialogTurn> history;
    for (const auto& t : f["history"]) history.push_back({t["speaker"] == "U" ? Speaker::User : Speaker::Sys, t["text"]});
    std::optional<std::string> response;
    if (!f["response"].is_null()) response = f["response"].get<std::string>();
    if (format_generation_input(s, history, response) == f["expected"].get<std::string>()) ++matched;
  }
  return {matched == 3 && fixtures.size() == 3, std::to_string(matched) + "/" + std::to_string(fixtures.size()) +
                                                    " fixtures exact"};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double limit_seconds;  // 0 = no runtime bound
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria{
      {"gradient matches central differences", 10.0, gradient_check},
      {"selection distribution sums to one", 0.0, normalization},
      {"candidate order invariance", 0.0, permutation_invariance},
      {"embedding scale invariance", 0.0, scale_invariance},
      {"hotel parking fixture ranks doc 0 first", 1.0, hotel_parking_fixture},
      {"synthetic selection Acc@1 >= 0.95", 60.0, synthetic_selection},
      {"synthetic detection F1 >= 0.99", 30.0, synthetic_detection},
      {"metric oracles and reference F1", 0.0, metric_oracles},
      {"node_features matches naive oracle", 0.0, node_feature_oracle},
      {"CLI artifacts are deterministic", 0.0, cli_determinism},
      {"generation input golden files", 0.0, generation_golden},
  };
  fs::create_directories(kWork);
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto& c = criteria[i];
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit_seconds > 0 && secs >= c.limit_seconds) {
      o.pass = false;
      o.detail += ", over the " + fmt(c.limit_seconds) + " s limit";
    }
    if (!o.pass) ++failures;
    std::printf("%s [%2zu] %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", i + 1, c.name, o.detail.c_str(), secs);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
