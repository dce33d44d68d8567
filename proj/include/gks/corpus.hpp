#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gks {

// (domain, entity_id) pair that scopes a candidate set.
struct EntityKey {
  std::string domain;
  std::string entity_id;

  auto operator<=>(const EntityKey&) const = default;
};

// Identity of one knowledge snippet inside a knowledge base.
struct SnippetRef {
  std::string domain;
  std::string entity_id;
  std::string doc_id;

  EntityKey entity() const { return {domain, entity_id}; }
  auto operator<=>(const SnippetRef&) const = default;
};

struct KnowledgeSnippet {
  std::string domain;
  std::string entity_id;
  std::string doc_id;
  std::string title;  // question form, non-empty
  std::string body;   // answer form, may be empty

  SnippetRef ref() const { return {domain, entity_id, doc_id}; }
  // Text used for encoding and ranking: title and body joined by one space.
  std::string text() const { return title + " " + body; }

  bool operator==(const KnowledgeSnippet&) const = default;
};

enum class Speaker { User, Sys };

struct DialogTurn {
  Speaker speaker = Speaker::User;
  std::string text;

  bool operator==(const DialogTurn&) const = default;
};

struct DialogInstance {
  std::string id;
  std::vector<DialogTurn> turns;  // last turn is the current User turn
  bool target = false;            // knowledge-seeking
  std::optional<SnippetRef> golden;
  std::optional<std::string> response;

  const DialogTurn& current_turn() const { return turns.back(); }
  bool operator==(const DialogInstance&) const = default;
};

struct EntityEntry {
  std::string name;
  std::vector<KnowledgeSnippet> docs;  // stored (file) order

  bool operator==(const EntityEntry&) const = default;
};

// Knowledge base plus dialog logs. Immutable once built/loaded.
struct Corpus {
  // Entities in insertion order; lookup through the index map.
  std::vector<EntityKey> entity_order;
  std::map<EntityKey, EntityEntry> snippets;
  std::vector<DialogInstance> dialogs;
  bool labeled = false;

  std::size_t snippet_count() const;
  const KnowledgeSnippet* find(const SnippetRef& ref) const;
  const DialogInstance* find_dialog(const std::string& id) const;

  bool operator==(const Corpus&) const = default;
};

// Loads knowledge/logs/(labels) files and validates every invariant.
// Throws ParseError (with line:column) or ValidationError.
Corpus load_corpus(const std::filesystem::path& knowledge_path,
                   const std::filesystem::path& logs_path,
                   const std::optional<std::filesystem::path>& labels_path = std::nullopt);

// Same as load_corpus, from in-memory JSON documents.
Corpus parse_corpus(const std::string& knowledge_json, const std::string& logs_json,
                    const std::optional<std::string>& labels_json = std::nullopt);

// Checks the structural invariants of an in-memory corpus. Throws ValidationError.
void validate_corpus(const Corpus& corpus);

struct CorpusDocuments {
  std::string knowledge;
  std::string logs;
  std::string labels;  // empty when the corpus is unlabeled
};

// Serializes to the on-disk JSON formats (2-space indent, trailing newline).
CorpusDocuments serialize_corpus(const Corpus& corpus);

// Writes knowledge.json, logs.json and labels.json (when labeled) into dir.
void write_corpus(const Corpus& corpus, const std::filesystem::path& dir);

// The l snippets of `entity` in stored order. Throws InvalidArgument for an unknown entity.
// The dialog is accepted for interface symmetry; scoping never depends on its text.
const std::vector<KnowledgeSnippet>& candidate_set(const Corpus& corpus,
                                                   const DialogInstance& dialog,
                                                   const EntityKey& entity);
const std::vector<KnowledgeSnippet>& candidate_set(const Corpus& corpus, const EntityKey& entity);

enum class OverlapMode { TokenOverlap, Paraphrase };

struct SynthParams {
  std::size_t n_dialogs = 200;
  std::size_t n_candidates = 8;
  std::size_t vocab_size = 512;
  OverlapMode overlap_mode = OverlapMode::TokenOverlap;
  double detect_marker_rate = 0.5;  // fraction of chit-chat (non-target) dialogs
};

// Token placed in every non-target final user turn.
inline constexpr const char* kChitChatMarker = "chitchat";

// Paraphrase-mode synonym of a content token ("w17" -> "p17").
std::string synonym_of(const std::string& token);

// Deterministic synthetic corpus; a pure function of (seed, params).
Corpus synth_corpus(std::uint64_t seed, const SynthParams& params);

}  // namespace gks
