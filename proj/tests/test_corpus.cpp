#include <filesystem>
#include <set>

#include "doctest.h"
#include "gks/corpus.hpp"
#include "gks/error.hpp"
#include "gks/tokenize.hpp"

using namespace gks;

namespace {

const std::filesystem::path kData = GKS_TEST_DATA;

const char* kTwoSnippets = R"({"hotel": {"h1": {"name": "H", "docs": {
  "1": {"title": "Is parking free?", "body": "Yes."},
  "2": {"title": "Is there wifi?", "body": "No."}}}}})";

const char* kOneDialog = R"([[{"speaker": "U", "text": "is parking free"}]])";

}  // namespace

TEST_CASE("load_corpus reads the hotel parking knowledge fixture") {
  const auto corpus = load_corpus(kData / "hotel_parking/knowledge.json", kData / "hotel_parking/logs.json",
                                  kData / "hotel_parking/labels.json");
  CHECK(corpus.snippet_count() == 8);
  const auto& docs = candidate_set(corpus, EntityKey{"hotel", "0"});
  REQUIRE(docs.size() == 8);
  CHECK(docs[0].title == "Does the hotel offer accessible parking?");
  CHECK(docs[7].doc_id == "7");
  CHECK(corpus.snippets.at(EntityKey{"hotel", "0"}).name == "Bridge Guest House");
  REQUIRE(corpus.dialogs.size() == 1);
  CHECK(corpus.dialogs[0].golden == SnippetRef{"hotel", "0", "0"});
}

TEST_CASE("empty logs give an empty dialog list") {
  const auto corpus = parse_corpus(kTwoSnippets, "[]");
  CHECK(corpus.dialogs.empty());
  CHECK(corpus.snippet_count() == 2);
}

TEST_CASE("dangling golden reference names the dialog") {
  const char* labels = R"([{"target": true, "knowledge": [{"domain": "hotel", "entity_id": "h1", "doc_id": "99"}]}])";
  try {
    parse_corpus(kTwoSnippets, kOneDialog, std::string(labels));
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("dialog 0") != std::string::npos);
    CHECK(std::string(e.what()).find("99") != std::string::npos);
  }
}

TEST_CASE("parse errors carry line and column") {
  try {
    parse_corpus("{\n  \"hotel\": {,\n}", "[]");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("knowledge:2:") != std::string::npos);
  }
}

TEST_CASE("duplicate snippet keys are rejected") {
  const char* dup = R"({"hotel": {"h1": {"docs": {"1": {"title": "a"}, "1": {"title": "b"}}}}})";
  CHECK_THROWS_AS(parse_corpus(dup, "[]"), ValidationError);
}

TEST_CASE("label invariants") {
  SUBCASE("multiple golden snippets") {
    const char* labels = R"([{"target": true, "knowledge": [
      {"domain": "hotel", "entity_id": "h1", "doc_id": "1"},
      {"domain": "hotel", "entity_id": "h1", "doc_id": "2"}]}])";
    CHECK_THROWS_AS(parse_corpus(kTwoSnippets, kOneDialog, std::string(labels)), ValidationError);
  }
  SUBCASE("target without golden") {
    CHECK_THROWS_AS(parse_corpus(kTwoSnippets, kOneDialog, std::string(R"([{"target": true}])")),
                    ValidationError);
  }
  SUBCASE("label count mismatch") {
    CHECK_THROWS_AS(parse_corpus(kTwoSnippets, kOneDialog, std::string("[]")), ValidationError);
  }
  SUBCASE("integer doc ids are accepted") {
    const char* labels = R"([{"target": true, "knowledge": [{"domain": "hotel", "entity_id": "h1", "doc_id": 2}]}])";
    const auto c = parse_corpus(kTwoSnippets, kOneDialog, std::string(labels));
    CHECK(c.dialogs[0].golden->doc_id == "2");
  }
}

TEST_CASE("dialog invariants") {
  CHECK_THROWS_AS(parse_corpus(kTwoSnippets, R"([[{"speaker": "U", "text": "hi"}, {"speaker": "S", "text": "yo"}]])"),
                  ValidationError);
  CHECK_THROWS_AS(parse_corpus(kTwoSnippets, R"([[{"speaker": "U", "text": "   "}]])"), ValidationError);
  CHECK_THROWS_AS(parse_corpus(kTwoSnippets, R"([[{"speaker": "X", "text": "hi"}]])"), ParseError);
  CHECK_THROWS_AS(parse_corpus(R"({"hotel": {"h1": {"docs": {"1": {"title": " "}}}}})", "[]"), ValidationError);
}

TEST_CASE("candidate_set") {
  auto corpus = parse_corpus(kTwoSnippets, kOneDialog);
  const auto& dialog = corpus.dialogs[0];
  SUBCASE("stored order, pure") {
    const auto& a = candidate_set(corpus, dialog, {"hotel", "h1"});
    const auto& b = candidate_set(corpus, dialog, {"hotel", "h1"});
    REQUIRE(a.size() == 2);
    CHECK(a == b);
    CHECK(a[0].doc_id == "1");
  }
  SUBCASE("single doc entity") {
    const auto c = parse_corpus(R"({"taxi": {"t": {"docs": {"x": {"title": "Can I pay by card?"}}}}})", "[]");
    CHECK(candidate_set(c, EntityKey{"taxi", "t"}).size() == 1);
  }
  SUBCASE("permuted storage order is preserved") {
    auto& docs = corpus.snippets.at(EntityKey{"hotel", "h1"}).docs;
    std::swap(docs[0], docs[1]);
    const auto& c = candidate_set(corpus, dialog, {"hotel", "h1"});
    CHECK(c[0].doc_id == "2");
    CHECK(c[1].doc_id == "1");
  }
  SUBCASE("unknown entity") {
    CHECK_THROWS_AS(candidate_set(corpus, dialog, {"hotel", "nope"}), InvalidArgument);
  }
}

TEST_CASE("write then load reproduces the corpus") {
  SynthParams params;
  params.n_dialogs = 30;
  const auto corpus = synth_corpus(5, params);
  const auto dir = std::filesystem::temp_directory_path() / "gks_corpus_roundtrip";
  write_corpus(corpus, dir);
  const auto loaded = load_corpus(dir / "knowledge.json", dir / "logs.json", dir / "labels.json");
  CHECK(loaded == corpus);
  std::filesystem::remove_all(dir);
}

TEST_CASE("synth_corpus") {
  SynthParams params;
  params.n_dialogs = 200;
  params.n_candidates = 8;

  SUBCASE("deterministic for a seed") {
    CHECK(serialize_corpus(synth_corpus(1, params)).knowledge == serialize_corpus(synth_corpus(1, params)).knowledge);
    CHECK(serialize_corpus(synth_corpus(1, params)).labels == serialize_corpus(synth_corpus(1, params)).labels);
    CHECK(serialize_corpus(synth_corpus(1, params)).logs != serialize_corpus(synth_corpus(2, params)).logs);
  }

  SUBCASE("count contract") {
    const auto corpus = synth_corpus(3, params);
    REQUIRE(corpus.dialogs.size() == 200);
    for (const auto& key : corpus.entity_order) CHECK(candidate_set(corpus, key).size() == 8);
    std::size_t targets = 0;
    for (const auto& d : corpus.dialogs) targets += d.target;
    CHECK(targets == 100);
  }

  SUBCASE("token overlap: golden shares >= 2 tokens, distractors < 2 (brute force)") {
    const auto corpus = synth_corpus(42, params);
    for (const auto& d : corpus.dialogs) {
      const auto query = tokenize(d.current_turn().text);
      const std::set<std::string> q(query.begin(), query.end());
      if (!d.target) {
        CHECK(q.count(kChitChatMarker) == 1);
        continue;
      }
      CHECK(q.count(kChitChatMarker) == 0);
      for (const auto& s : candidate_set(corpus, d.golden->entity())) {
        std::set<std::string> shared;
        for (const auto& t : tokenize(s.text())) {
          if (q.count(t)) shared.insert(t);
        }
        if (s.ref() == *d.golden) {
          CHECK(shared.size() >= 2);
        } else {
          CHECK(shared.size() < 2);
        }
      }
    }
  }

  SUBCASE("paraphrase: query carries synonyms of golden tokens") {
    params.overlap_mode = OverlapMode::Paraphrase;
    const auto corpus = synth_corpus(42, params);
    for (const auto& d : corpus.dialogs) {
      if (!d.target) continue;
      const auto query = tokenize(d.current_turn().text);
      const std::set<std::string> q(query.begin(), query.end());
      std::size_t synonyms = 0;
      for (const auto& t : tokenize(corpus.find(*d.golden)->title)) synonyms += q.count(synonym_of(t));
      CHECK(synonyms >= 2);
    }
  }

  SUBCASE("invalid params") {
    SynthParams bad = params;
    bad.n_candidates = 1;
    CHECK_THROWS_AS(synth_corpus(1, bad), InvalidArgument);
    bad = params;
    bad.vocab_size = 31;
    CHECK_THROWS_AS(synth_corpus(1, bad), InvalidArgument);
    bad = params;
    bad.detect_marker_rate = 1.5;
    CHECK_THROWS_AS(synth_corpus(1, bad), InvalidArgument);
  }
}
