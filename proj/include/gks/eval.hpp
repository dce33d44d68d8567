#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gks/corpus.hpp"
#include "gks/detection.hpp"
#include "gks/selector.hpp"
#include "gks/tfidf.hpp"

namespace gks {

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  bool operator==(const ConfusionCounts&) const = default;
};

struct DetectionMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  ConfusionCounts counts;
};

struct SelectionMetrics {
  double acc_at_1 = 0.0;
  double acc_at_5 = 0.0;
  double mrr_at_5 = 0.0;
  std::size_t n_instances = 0;
};

// Throws InvalidArgument on length mismatch or empty input.
DetectionMetrics detection_metrics(std::span<const bool> predictions, std::span<const bool> gold);
DetectionMetrics detection_metrics(const ConfusionCounts& counts);

// Positions are 1-based golden ranks. Throws InvalidArgument on empty input or a zero position.
SelectionMetrics selection_metrics(std::span<const std::size_t> ranked_golden_positions);

struct SelectionEvaluation {
  SelectionMetrics metrics;
  std::vector<std::size_t> positions;  // per instance, corpus order
  std::size_t tied_instances = 0;      // golden probability shared with another candidate
};

// Ranks every knowledge-seeking labeled dialog against its golden entity's snippets.
// Per-instance work runs in parallel; aggregation is in corpus order.
SelectionEvaluation evaluate_selector(const SelectorModel& model, const EmbeddingProvider& provider,
                                      const Corpus& corpus);

SelectionEvaluation evaluate_tfidf(const Corpus& corpus);

DetectionMetrics evaluate_detector(const DetectorModel& model, const Corpus& corpus);

struct ReportEntry {
  std::string model;
  std::optional<DetectionMetrics> detection;
  std::optional<SelectionMetrics> selection;
};

enum class ReportFormat { Json, Markdown };

// Json: array of {"model", "detection", "selection"}. Markdown: Recall/Precision/F1 and
// Acc@5/Acc@1/MRR@5 tables, 4 decimals, one row per entry. `stamp` is added only when non-empty.
std::string report(std::span<const ReportEntry> entries, ReportFormat format, const std::string& stamp = {});

// Fixed 4-decimal rendering used by every report.
std::string format4(double x);

}  // namespace gks
