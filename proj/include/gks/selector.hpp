#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gks/corpus.hpp"
#include "gks/embedding.hpp"
#include "gks/kernels.hpp"

namespace gks {

struct SelectorModel {
  KernelBank kernels = KernelBank::standard();
  std::vector<double> readout_weights = std::vector<double>(kernels.size(), 0.0);
  bool cross_node_attention = false;
  ProviderSpec provider;  // the embedding source the weights were fitted against

  static SelectorModel zeros(const KernelBank& bank, bool attention = false);
  // Weight +1 on the exact-match kernel, 0 elsewhere.
  static SelectorModel exact_match(const KernelBank& bank = KernelBank::standard());

  bool operator==(const SelectorModel&) const = default;
};

struct SelectionDistribution {
  std::vector<double> probabilities;
  std::vector<double> scores;  // readout logits; losses are computed from these
  std::vector<SnippetRef> candidate_refs;
};

// S'_n = sum_j softmax_j(S_n . S_j / sqrt(K)) S_j. Parameter-free.
std::vector<NodeFeature> cross_node_attention(std::span<const NodeFeature> features);

// Logits z_n = w . S_n (attention applied first when the model enables it).
std::vector<double> readout_scores(std::span<const NodeFeature> features, const SelectorModel& model);

// Max-subtracted softmax.
std::vector<double> softmax(std::span<const double> scores);

SelectionDistribution readout(std::span<const NodeFeature> features, const SelectorModel& model);
SelectionDistribution readout(std::span<const NodeFeature> features, const SelectorModel& model,
                              std::span<const KnowledgeSnippet> candidates);

// -log P[golden] via log-softmax of the stored scores.
double selection_loss(const SelectionDistribution& dist, std::size_t golden_index);

// d loss / d readout_weights = sum_n (P_n - [n == golden]) S'_n.
std::vector<double> loss_gradient(std::span<const NodeFeature> features, const SelectorModel& model,
                                  std::size_t golden_index);

struct SelectorHyper {
  double lr = 0.5;
  std::size_t epochs = 200;
  std::uint64_t seed = 42;
  bool attention = false;
  std::size_t kernels = 11;
  // Halve the step until the epoch loss does not increase.
  bool line_search = true;
};

// One knowledge-seeking dialog with its resolved candidate set.
struct TrainingInstance {
  std::string dialog_id;
  std::string question;
  std::span<const KnowledgeSnippet> candidates;
  std::size_t golden_index = 0;
};

// Labeled knowledge-seeking dialogs whose golden snippet resolves.
std::vector<TrainingInstance> selection_instances(const Corpus& corpus);

struct SelectorTraining {
  SelectorModel model;
  std::vector<double> epoch_loss;  // mean loss before epoch 0, then after each epoch
};

// Full-batch gradient descent on mean cross-entropy from zero weights. Embeddings and kernels
// are frozen, so features are computed once. Throws DegenerateData without trainable instances.
SelectorTraining train_selector(const Corpus& corpus, const EmbeddingProvider& provider,
                                const SelectorHyper& hyper, const ProviderSpec& provider_spec = {});

// Trains on precomputed features (the part of train_selector after feature extraction).
SelectorTraining fit_readout(std::span<const std::vector<NodeFeature>> features,
                             std::span<const std::size_t> golden, const KernelBank& bank,
                             const SelectorHyper& hyper);

double mean_selection_loss(std::span<const std::vector<NodeFeature>> features, std::span<const std::size_t> golden,
                           const SelectorModel& model);

struct RankedSnippet {
  SnippetRef ref;
  double probability = 0.0;
  std::size_t candidate_index = 0;
};

// Probability-descending; ties keep candidate order.
std::vector<RankedSnippet> rank_distribution(const SelectionDistribution& dist);

std::vector<RankedSnippet> rank(const SelectorModel& model, const EmbeddingProvider& provider,
                                const std::string& question, std::span<const KnowledgeSnippet> candidates);

}  // namespace gks
