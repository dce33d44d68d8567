#include "gks/detection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gks/error.hpp"
#include "gks/hash.hpp"
#include "gks/tokenize.hpp"

namespace gks {

DetectorModel DetectorModel::zeros(std::size_t hash_dim, std::size_t turn_buckets, double threshold) {
  if (hash_dim < 16) throw InvalidArgument("detector: hash_dim must be >= 16");
  if (turn_buckets < 1) throw InvalidArgument("detector: turn_buckets must be >= 1");
  if (!(threshold > 0.0 && threshold < 1.0)) throw InvalidArgument("detector: threshold must lie in (0, 1)");
  DetectorModel m;
  m.hash_dim = hash_dim;
  m.turn_buckets = turn_buckets;
  m.threshold = threshold;
  m.weights.assign(hash_dim + turn_buckets, 0.0);
  return m;
}

std::string serialize_dialog(const DialogInstance& dialog) {
  if (dialog.turns.empty() || dialog.current_turn().speaker != Speaker::User) {
    throw InvalidArgument("dialog " + dialog.id + " must end with a User turn");
  }
  std::string out = kUserToken + dialog.current_turn().text;
  for (std::size_t i = 0; i + 1 < dialog.turns.size(); ++i) {
    const auto& t = dialog.turns[i];
    out += (t.speaker == Speaker::User ? kUserToken : kSysToken);
    out += t.text;
  }
  return out;
}

std::vector<std::string> detection_tokens(const std::string& serialized) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  auto flush_words = [&](std::size_t end) {
    for (auto& w : split_words(std::string_view(serialized).substr(pos, end - pos))) out.push_back(std::move(w));
  };
  while (pos < serialized.size()) {
    const std::size_t user = serialized.find(kUserToken, pos);
    const std::size_t sys = serialized.find(kSysToken, pos);
    const std::size_t next = std::min(user, sys);
    if (next == std::string::npos) break;
    flush_words(next);
    const bool is_user = next == user;
    out.emplace_back(is_user ? kUserToken : kSysToken);
    pos = next + std::char_traits<char>::length(is_user ? kUserToken : kSysToken);
  }
  flush_words(serialized.size());
  return out;
}

std::size_t feature_index(const std::string& ngram, std::size_t hash_dim) {
  return static_cast<std::size_t>(fnv1a64(ngram) % hash_dim);
}

FeatureVector featurize(const std::string& serialized, std::size_t turn_count, std::size_t hash_dim,
                        std::size_t turn_buckets) {
  if (hash_dim == 0 || turn_buckets == 0) throw InvalidArgument("featurize: dimensions must be positive");
  if (turn_count < 1) throw InvalidArgument("featurize: turn_count must be >= 1");
  FeatureVector h;
  h.values.assign(hash_dim + turn_buckets, 0.0);
  const auto tokens = detection_tokens(serialized);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    h.values[feature_index(tokens[i], hash_dim)] += 1.0;
    if (i + 1 < tokens.size()) h.values[feature_index(tokens[i] + " " + tokens[i + 1], hash_dim)] += 1.0;
  }
  h.values[hash_dim + std::min(turn_count, turn_buckets) - 1] = 1.0;
  return h;
}

FeatureVector featurize(const DialogInstance& dialog, std::size_t hash_dim, std::size_t turn_buckets) {
  return featurize(serialize_dialog(dialog), dialog.turns.size(), hash_dim, turn_buckets);
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// log(1 + exp(x)) without overflow.
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

// Mean binary log loss, computed from logits.
double mean_log_loss(const std::vector<double>& w, const std::vector<FeatureVector>& xs,
                     const std::vector<double>& ys) {
  double total = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double z = dot(w, xs[i].values);
    total += ys[i] > 0.5 ? softplus(-z) : softplus(z);
  }
  return total / static_cast<double>(xs.size());
}

}  // namespace

double detect_score(const DetectorModel& model, const FeatureVector& h) {
  if (h.values.size() != model.weights.size()) {
    throw InvalidArgument("detect_score: feature dimension " + std::to_string(h.values.size()) +
                          " != model dimension " + std::to_string(model.weights.size()));
  }
  return sigmoid(dot(model.weights, h.values));
}

DetectorTraining train_detector(const Corpus& corpus, const DetectorHyper& hyper) {
  DetectorTraining result;
  result.model = DetectorModel::zeros(hyper.hash_dim, hyper.turn_buckets, hyper.threshold);
  if (!(hyper.lr >= 0.0) || !std::isfinite(hyper.lr)) throw InvalidArgument("detector: lr must be >= 0");

  std::vector<FeatureVector> xs;
  std::vector<double> ys;
  std::size_t positives = 0;
  for (const auto& dialog : corpus.dialogs) {
    xs.push_back(featurize(dialog, hyper.hash_dim, hyper.turn_buckets));
    ys.push_back(dialog.target ? 1.0 : 0.0);
    positives += dialog.target;
  }
  if (positives == 0 || positives == xs.size()) {
    throw DegenerateData("detector: training data needs both knowledge-seeking and other dialogs");
  }

  auto& w = result.model.weights;
  const double n = static_cast<double>(xs.size());
  double loss = mean_log_loss(w, xs, ys);
  result.epoch_loss.push_back(loss);
  std::vector<double> grad(w.size()), trial(w.size());
  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double residual = sigmoid(dot(w, xs[i].values)) - ys[i];
      for (std::size_t j = 0; j < w.size(); ++j) grad[j] += residual * xs[i].values[j];
    }
    for (auto& g : grad) g /= n;

    double step = hyper.lr;
    for (int halvings = 0; halvings < 60 && step > 0.0; ++halvings, step *= 0.5) {
      for (std::size_t j = 0; j < w.size(); ++j) trial[j] = w[j] - step * grad[j];
      const double trial_loss = mean_log_loss(trial, xs, ys);
      if (!hyper.line_search || trial_loss <= loss) {
        w.swap(trial);
        loss = trial_loss;
        break;
      }
    }
    result.epoch_loss.push_back(loss);
  }
  return result;
}

Detection detect(const DetectorModel& model, const DialogInstance& dialog) {
  Detection d;
  d.probability = detect_score(model, featurize(dialog, model.hash_dim, model.turn_buckets));
  d.triggered = d.probability >= model.threshold;
  return d;
}

}  // namespace gks
