#include "gks/eval.hpp"

#include <cstdio>

#include "gks/error.hpp"
#include "gks/jsonlib.hpp"

namespace gks {

DetectionMetrics detection_metrics(const ConfusionCounts& counts) {
  DetectionMetrics m;
  m.counts = counts;
  const double tp = static_cast<double>(counts.tp);
  if (counts.tp + counts.fp > 0) m.precision = tp / static_cast<double>(counts.tp + counts.fp);
  if (counts.tp + counts.fn > 0) m.recall = tp / static_cast<double>(counts.tp + counts.fn);
  if (m.precision + m.recall > 0.0) m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

DetectionMetrics detection_metrics(std::span<const bool> predictions, std::span<const bool> gold) {
  if (predictions.size() != gold.size()) throw InvalidArgument("detection_metrics: length mismatch");
  if (predictions.empty()) throw InvalidArgument("detection_metrics: empty input");
  ConfusionCounts c;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (predictions[i] && gold[i]) ++c.tp;
    else if (predictions[i]) ++c.fp;
    else if (gold[i]) ++c.fn;
    else ++c.tn;
  }
  return detection_metrics(c);
}

SelectionMetrics selection_metrics(std::span<const std::size_t> positions) {
  if (positions.empty()) throw InvalidArgument("selection_metrics: empty input");
  std::size_t at1 = 0, at5 = 0;
  double rr = 0.0;
  for (auto pos : positions) {
    if (pos == 0) throw InvalidArgument("selection_metrics: positions are 1-based");
    at1 += pos == 1;
    if (pos <= 5) {
      ++at5;
      rr += 1.0 / static_cast<double>(pos);
    }
  }
  const double n = static_cast<double>(positions.size());
  return {static_cast<double>(at1) / n, static_cast<double>(at5) / n, rr / n, positions.size()};
}

namespace {

SelectionEvaluation finish(std::vector<std::size_t> positions, std::size_t ties) {
  SelectionEvaluation e;
  e.metrics = selection_metrics(positions);
  e.positions = std::move(positions);
  e.tied_instances = ties;
  return e;
}

}  // namespace

SelectionEvaluation evaluate_selector(const SelectorModel& model, const EmbeddingProvider& provider,
                                      const Corpus& corpus) {
  const auto instances = selection_instances(corpus);
  if (instances.empty()) throw DegenerateData("evaluation: no knowledge-seeking labeled dialogs");
  std::vector<std::size_t> positions(instances.size());
  std::vector<unsigned char> tied(instances.size(), 0);
  const auto n = static_cast<std::ptrdiff_t>(instances.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& inst = instances[static_cast<std::size_t>(i)];
    const auto dist = readout(node_features(inst.question, inst.candidates, provider, model.kernels), model);
    const auto ranked = rank_distribution(dist);
    const double golden_p = dist.probabilities[inst.golden_index];
    for (std::size_t r = 0; r < ranked.size(); ++r) {
      if (ranked[r].candidate_index == inst.golden_index) positions[static_cast<std::size_t>(i)] = r + 1;
      if (ranked[r].candidate_index != inst.golden_index && ranked[r].probability == golden_p) {
        tied[static_cast<std::size_t>(i)] = 1;
      }
    }
  }
  std::size_t ties = 0;
  for (auto t : tied) ties += t;
  return finish(std::move(positions), ties);
}

SelectionEvaluation evaluate_tfidf(const Corpus& corpus) {
  const auto instances = selection_instances(corpus);
  if (instances.empty()) throw DegenerateData("evaluation: no knowledge-seeking labeled dialogs");
  const auto vocab = Vocabulary::build(corpus);
  std::vector<std::size_t> positions;
  std::size_t ties = 0;
  for (const auto& inst : instances) {
    const std::vector<KnowledgeSnippet> candidates(inst.candidates.begin(), inst.candidates.end());
    const auto ranked = tfidf_rank(vocab, inst.question, candidates);
    const auto* golden = &candidates[inst.golden_index];
    bool tie = false;
    double golden_score = 0.0;
    for (const auto& r : ranked) {
      if (r.snippet == golden) golden_score = r.score;
    }
    for (std::size_t r = 0; r < ranked.size(); ++r) {
      if (ranked[r].snippet == golden) positions.push_back(r + 1);
      else if (ranked[r].score == golden_score) tie = true;
    }
    ties += tie;
  }
  return finish(std::move(positions), ties);
}

DetectionMetrics evaluate_detector(const DetectorModel& model, const Corpus& corpus) {
  if (!corpus.labeled) throw DegenerateData("evaluation: detection needs a labeled corpus");
  if (corpus.dialogs.empty()) throw DegenerateData("evaluation: corpus has no dialogs");
  std::vector<char> predictions, gold;
  for (const auto& dialog : corpus.dialogs) {
    predictions.push_back(detect(model, dialog).triggered);
    gold.push_back(dialog.target);
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (predictions[i] && gold[i]) ++c.tp;
    else if (predictions[i]) ++c.fp;
    else if (gold[i]) ++c.fn;
    else ++c.tn;
  }
  return detection_metrics(c);
}

std::string format4(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", x);
  return buf;
}

std::string report(std::span<const ReportEntry> entries, ReportFormat format, const std::string& stamp) {
  bool any_detection = false, any_selection = false;
  for (const auto& e : entries) {
    any_detection |= e.detection.has_value();
    any_selection |= e.selection.has_value();
  }

  if (format == ReportFormat::Json) {
    auto rows = nlohmann::ordered_json::array();
    for (const auto& e : entries) {
      nlohmann::ordered_json row{{"model", e.model}};
      if (e.detection) {
        const auto& d = *e.detection;
        row["detection"] = {{"precision", d.precision}, {"recall", d.recall}, {"f1", d.f1},
                            {"tp", d.counts.tp},        {"fp", d.counts.fp},  {"fn", d.counts.fn},
                            {"tn", d.counts.tn}};
      }
      if (e.selection) {
        const auto& s = *e.selection;
        row["selection"] = {{"acc_at_1", s.acc_at_1},
                            {"acc_at_5", s.acc_at_5},
                            {"mrr_at_5", s.mrr_at_5},
                            {"n_instances", s.n_instances}};
      }
      rows.push_back(std::move(row));
    }
    if (stamp.empty()) return rows.dump(2) + "\n";
    nlohmann::ordered_json wrapped{{"generated_at", stamp}, {"entries", std::move(rows)}};
    return wrapped.dump(2) + "\n";
  }

  std::string out;
  if (!stamp.empty()) out += "Generated " + stamp + "\n\n";
  if (any_detection) {
    out += "| Model | Recall | Precision | F1 |\n|---|---|---|---|\n";
    for (const auto& e : entries) {
      if (!e.detection) continue;
      out += "| " + e.model + " | " + format4(e.detection->recall) + " | " + format4(e.detection->precision) +
             " | " + format4(e.detection->f1) + " |\n";
    }
  }
  if (any_selection || !any_detection) {
    if (any_detection) out += "\n";
    out += "| Model | Acc@5 | Acc@1 | MRR@5 |\n|---|---|---|---|\n";
    for (const auto& e : entries) {
      if (!e.selection) continue;
      out += "| " + e.model + " | " + format4(e.selection->acc_at_5) + " | " + format4(e.selection->acc_at_1) +
             " | " + format4(e.selection->mrr_at_5) + " |\n";
    }
  }
  return out;
}

}  // namespace gks
