#include "gks/pipeline.hpp"

#include "gks/error.hpp"
#include "gks/jsonlib.hpp"

namespace gks {

std::string format_generation_input(const KnowledgeSnippet& snippet, std::span<const DialogTurn> history,
                                    const std::optional<std::string>& response) {
  if (history.empty()) throw InvalidArgument("generation input: history must not be empty");
  if (history.front().speaker != Speaker::User) {
    throw InvalidArgument("generation input: history must start with a User turn");
  }
  std::string out = kBos;
  out += snippet.text();
  for (const auto& turn : history) {
    out += turn.speaker == Speaker::User ? kUserSpeaker : kSysSpeaker;
    out += turn.text;
  }
  out += kSysSpeaker;
  if (response) out += *response;
  out += kEos;
  return out;
}

PipelineResult run_pipeline(const DetectorModel& detector, const SelectorModel& selector,
                            const EmbeddingProvider& provider, const Corpus& corpus, const DialogInstance& dialog,
                            const EntityKey& entity) {
  PipelineResult result;
  const auto detection = detect(detector, dialog);
  result.triggered = detection.triggered;
  result.detection_probability = detection.probability;
  if (!result.triggered) return result;

  const auto& candidates = candidate_set(corpus, dialog, entity);
  const auto features = node_features(dialog.current_turn().text, candidates, provider, selector.kernels);
  auto dist = readout(features, selector, candidates);
  const auto ranked = rank_distribution(dist);
  const auto& top = candidates[ranked.front().candidate_index];
  result.top_snippet = top.ref();
  result.generation_input = format_generation_input(top, dialog.turns);
  result.selection = std::move(dist);
  return result;
}

namespace {
nlohmann::ordered_json ref_json(const SnippetRef& ref) {
  return {{"domain", ref.domain}, {"entity_id", ref.entity_id}, {"doc_id", ref.doc_id}};
}
}  // namespace

std::string pipeline_result_to_json(const PipelineResult& result) {
  nlohmann::ordered_json j{{"triggered", result.triggered}, {"detection_probability", result.detection_probability}};
  if (result.selection) {
    auto refs = nlohmann::ordered_json::array();
    for (const auto& r : result.selection->candidate_refs) refs.push_back(ref_json(r));
    j["selection"] = {{"probabilities", result.selection->probabilities}, {"candidate_refs", std::move(refs)}};
  }
  if (result.top_snippet) j["top_snippet"] = ref_json(*result.top_snippet);
  if (result.generation_input) j["generation_input"] = *result.generation_input;
  return j.dump(2) + "\n";
}

}  // namespace gks
