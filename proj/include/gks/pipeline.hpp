#pragma once

#include <optional>
#include <span>
#include <string>

#include "gks/corpus.hpp"
#include "gks/detection.hpp"
#include "gks/selector.hpp"

namespace gks {

inline constexpr const char* kBos = "<BOS>";
inline constexpr const char* kEos = "<EOS>";
inline constexpr const char* kUserSpeaker = "<sp1>";
inline constexpr const char* kSysSpeaker = "<sp2>";

struct PipelineResult {
  bool triggered = false;
  double detection_probability = 0.0;
  std::optional<SelectionDistribution> selection;
  std::optional<SnippetRef> top_snippet;
  std::optional<std::string> generation_input;
};

// <BOS> title body, then <sp1>/<sp2>-tagged history, then <sp2>response<EOS>.
// Throws InvalidArgument unless history is non-empty and starts with a User turn.
std::string format_generation_input(const KnowledgeSnippet& snippet, std::span<const DialogTurn> history,
                                    const std::optional<std::string>& response = std::nullopt);

// Detect, then (when triggered) rank the entity's snippets and format the top one.
PipelineResult run_pipeline(const DetectorModel& detector, const SelectorModel& selector,
                            const EmbeddingProvider& provider, const Corpus& corpus, const DialogInstance& dialog,
                            const EntityKey& entity);

// Field names match PipelineResult; absent optionals are omitted.
std::string pipeline_result_to_json(const PipelineResult& result);

}  // namespace gks
