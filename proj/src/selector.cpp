#include "gks/selector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gks/error.hpp"

namespace gks {

SelectorModel SelectorModel::zeros(const KernelBank& bank, bool attention) {
  bank.validate();
  SelectorModel m;
  m.kernels = bank;
  m.readout_weights.assign(bank.size(), 0.0);
  m.cross_node_attention = attention;
  return m;
}

SelectorModel SelectorModel::exact_match(const KernelBank& bank) {
  SelectorModel m = zeros(bank);
  m.readout_weights[bank.exact_match_index()] = 1.0;
  return m;
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void check_features(std::span<const NodeFeature> features, std::size_t k) {
  if (features.empty()) throw InvalidArgument("selector: at least one candidate is required");
  for (const auto& f : features) {
    if (f.values.size() != k) {
      throw InvalidArgument("selector: feature length " + std::to_string(f.values.size()) +
                            " != kernel count " + std::to_string(k));
    }
  }
}

std::vector<double> scores_of(std::span<const NodeFeature> mixed, std::span<const double> w) {
  std::vector<double> z(mixed.size());
  for (std::size_t n = 0; n < mixed.size(); ++n) z[n] = dot(w, mixed[n].values);
  return z;
}

// -log softmax(z)[g]. The largest term is pulled out so near-zero losses keep their precision.
double log_softmax_loss(std::span<const double> z, std::size_t g) {
  const auto top = static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
  double rest = 0.0;
  for (std::size_t n = 0; n < z.size(); ++n) {
    if (n != top) rest += std::exp(z[n] - z[top]);
  }
  return (z[top] - z[g]) + std::log1p(rest);
}

// Gradient on already-mixed features; accumulates into grad.
void gradient_into(std::span<const NodeFeature> mixed, std::span<const double> w, std::size_t g,
                   std::span<double> grad) {
  const auto p = softmax(scores_of(mixed, w));
  for (std::size_t n = 0; n < mixed.size(); ++n) {
    const double coef = p[n] - (n == g ? 1.0 : 0.0);
    for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += coef * mixed[n].values[k];
  }
}

void check_golden(std::size_t golden, std::size_t l) {
  if (golden >= l) {
    throw InvalidArgument("golden index " + std::to_string(golden) + " out of range for " + std::to_string(l) +
                          " candidates");
  }
}

}  // namespace

std::vector<double> softmax(std::span<const double> scores) {
  std::vector<double> p(scores.begin(), scores.end());
  if (p.empty()) return p;
  const double top = *std::max_element(p.begin(), p.end());
  double total = 0.0;
  for (auto& x : p) {
    x = std::exp(x - top);
    total += x;
  }
  for (auto& x : p) x /= total;
  return p;
}

std::vector<NodeFeature> cross_node_attention(std::span<const NodeFeature> features) {
  if (features.empty()) throw InvalidArgument("cross_node_attention: no nodes");
  const std::size_t k = features.front().values.size();
  check_features(features, k);
  const double scale = 1.0 / std::sqrt(static_cast<double>(k));
  std::vector<NodeFeature> out(features.size());
  std::vector<double> logits(features.size());
  for (std::size_t n = 0; n < features.size(); ++n) {
    for (std::size_t j = 0; j < features.size(); ++j) {
      logits[j] = dot(features[n].values, features[j].values) * scale;
    }
    const auto alpha = softmax(logits);
    out[n].values.assign(k, 0.0);
    for (std::size_t j = 0; j < features.size(); ++j) {
      for (std::size_t c = 0; c < k; ++c) out[n].values[c] += alpha[j] * features[j].values[c];
    }
  }
  return out;
}

std::vector<double> readout_scores(std::span<const NodeFeature> features, const SelectorModel& model) {
  check_features(features, model.readout_weights.size());
  if (model.cross_node_attention) return scores_of(cross_node_attention(features), model.readout_weights);
  return scores_of(features, model.readout_weights);
}

SelectionDistribution readout(std::span<const NodeFeature> features, const SelectorModel& model) {
  SelectionDistribution dist;
  dist.scores = readout_scores(features, model);
  dist.probabilities = softmax(dist.scores);
  return dist;
}

SelectionDistribution readout(std::span<const NodeFeature> features, const SelectorModel& model,
                              std::span<const KnowledgeSnippet> candidates) {
  if (candidates.size() != features.size()) throw InvalidArgument("readout: candidates/features length mismatch");
  auto dist = readout(features, model);
  for (const auto& c : candidates) dist.candidate_refs.push_back(c.ref());
  return dist;
}

double selection_loss(const SelectionDistribution& dist, std::size_t golden_index) {
  check_golden(golden_index, dist.scores.size());
  return log_softmax_loss(dist.scores, golden_index);
}

std::vector<double> loss_gradient(std::span<const NodeFeature> features, const SelectorModel& model,
                                  std::size_t golden_index) {
  check_features(features, model.readout_weights.size());
  check_golden(golden_index, features.size());
  std::vector<double> grad(model.readout_weights.size(), 0.0);
  if (model.cross_node_attention) {
    gradient_into(cross_node_attention(features), model.readout_weights, golden_index, grad);
  } else {
    gradient_into(features, model.readout_weights, golden_index, grad);
  }
  return grad;
}

std::vector<TrainingInstance> selection_instances(const Corpus& corpus) {
  std::vector<TrainingInstance> out;
  for (const auto& dialog : corpus.dialogs) {
    if (!dialog.target || !dialog.golden) continue;
    const auto& candidates = candidate_set(corpus, dialog, dialog.golden->entity());
    auto it = std::find_if(candidates.begin(), candidates.end(),
                           [&](const KnowledgeSnippet& s) { return s.doc_id == dialog.golden->doc_id; });
    if (it == candidates.end()) continue;
    out.push_back({dialog.id, dialog.current_turn().text, candidates,
                   static_cast<std::size_t>(it - candidates.begin())});
  }
  return out;
}

double mean_selection_loss(std::span<const std::vector<NodeFeature>> features, std::span<const std::size_t> golden,
                           const SelectorModel& model) {
  double total = 0.0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    total += log_softmax_loss(readout_scores(features[i], model), golden[i]);
  }
  return total / static_cast<double>(features.size());
}

SelectorTraining fit_readout(std::span<const std::vector<NodeFeature>> features, std::span<const std::size_t> golden,
                             const KernelBank& bank, const SelectorHyper& hyper) {
  if (features.empty()) throw DegenerateData("selector: no trainable instances");
  if (features.size() != golden.size()) throw InvalidArgument("fit_readout: features/golden length mismatch");
  if (!(hyper.lr >= 0.0) || !std::isfinite(hyper.lr)) throw InvalidArgument("selector: lr must be >= 0");
  for (std::size_t i = 0; i < features.size(); ++i) {
    check_features(features[i], bank.size());
    check_golden(golden[i], features[i].size());
  }

  SelectorTraining result;
  result.model = SelectorModel::zeros(bank, hyper.attention);

  // Attention is parameter-free, so mixed features are fixed for the whole run.
  std::vector<std::vector<NodeFeature>> mixed;
  if (hyper.attention) {
    mixed.reserve(features.size());
    for (const auto& f : features) mixed.push_back(cross_node_attention(f));
  }
  std::span<const std::vector<NodeFeature>> inputs = hyper.attention ? std::span(mixed) : features;
  SelectorModel linear = result.model;
  linear.cross_node_attention = false;

  const std::size_t k = bank.size();
  const auto n = static_cast<std::ptrdiff_t>(inputs.size());
  std::vector<double> per_instance(inputs.size() * k);
  std::vector<double> grad(k);
  auto& w = linear.readout_weights;

  double loss = mean_selection_loss(inputs, golden, linear);
  result.epoch_loss.push_back(loss);
  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::fill(per_instance.begin(), per_instance.end(), 0.0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const auto u = static_cast<std::size_t>(i);
      gradient_into(inputs[u], w, golden[u], std::span(per_instance).subspan(u * k, k));
    }
    // Fixed-order reduction keeps training bitwise reproducible across thread counts.
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      for (std::size_t c = 0; c < k; ++c) grad[c] += per_instance[i * k + c];
    }
    for (auto& g : grad) g /= static_cast<double>(inputs.size());

    const std::vector<double> before = w;
    double step = hyper.lr;
    for (int halvings = 0; halvings < 60 && step > 0.0; ++halvings, step *= 0.5) {
      for (std::size_t c = 0; c < k; ++c) w[c] = before[c] - step * grad[c];
      const double trial = mean_selection_loss(inputs, golden, linear);
      if (!hyper.line_search || trial <= loss) {
        loss = trial;
        break;
      }
      w = before;
    }
    result.epoch_loss.push_back(loss);
  }
  result.model.readout_weights = w;
  return result;
}

SelectorTraining train_selector(const Corpus& corpus, const EmbeddingProvider& provider, const SelectorHyper& hyper,
                                const ProviderSpec& provider_spec) {
  const auto instances = selection_instances(corpus);
  if (instances.empty()) throw DegenerateData("selector: corpus has no knowledge-seeking dialog with a golden snippet");
  const KernelBank bank = KernelBank::standard(hyper.kernels);
  std::vector<SelectionQuery> queries;
  std::vector<std::size_t> golden;
  for (const auto& inst : instances) {
    queries.push_back({inst.question, inst.candidates});
    golden.push_back(inst.golden_index);
  }
  const auto features = batch_node_features(queries, provider, bank);
  auto result = fit_readout(features, golden, bank, hyper);
  result.model.provider = provider_spec;
  return result;
}

std::vector<RankedSnippet> rank_distribution(const SelectionDistribution& dist) {
  std::vector<RankedSnippet> out;
  out.reserve(dist.probabilities.size());
  for (std::size_t n = 0; n < dist.probabilities.size(); ++n) {
    out.push_back({n < dist.candidate_refs.size() ? dist.candidate_refs[n] : SnippetRef{}, dist.probabilities[n], n});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const RankedSnippet& a, const RankedSnippet& b) { return a.probability > b.probability; });
  return out;
}

std::vector<RankedSnippet> rank(const SelectorModel& model, const EmbeddingProvider& provider,
                                const std::string& question, std::span<const KnowledgeSnippet> candidates) {
  const auto features = node_features(question, candidates, provider, model.kernels);
  return rank_distribution(readout(features, model, candidates));
}

}  // namespace gks
