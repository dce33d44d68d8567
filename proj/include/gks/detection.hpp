#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gks/corpus.hpp"

namespace gks {

inline constexpr const char* kUserToken = "[User]";
inline constexpr const char* kSysToken = "[Sys]";

// Hashed n-gram block (first D entries) followed by a one-hot turn-count bucket (T entries).
struct FeatureVector {
  std::vector<double> values;
  bool operator==(const FeatureVector&) const = default;
};

struct DetectorModel {
  std::size_t hash_dim = 4096;
  std::size_t turn_buckets = 16;
  double threshold = 0.5;
  std::vector<double> weights;  // hash_dim + turn_buckets, no bias term

  static DetectorModel zeros(std::size_t hash_dim, std::size_t turn_buckets, double threshold = 0.5);
  bool operator==(const DetectorModel&) const = default;
};

struct DetectorHyper {
  std::size_t hash_dim = 4096;
  std::size_t turn_buckets = 16;
  double lr = 0.1;
  std::size_t epochs = 100;
  std::uint64_t seed = 42;
  double threshold = 0.5;
  // Halve the step until the epoch loss does not increase.
  bool line_search = true;
};

struct DetectorTraining {
  DetectorModel model;
  std::vector<double> epoch_loss;  // loss before epoch 0, then after each epoch
};

struct Detection {
  double probability = 0.5;
  bool triggered = true;
};

// "[User]" + current turn, then every earlier turn in order with its speaker token.
// Throws InvalidArgument if the dialog does not end with a User turn.
std::string serialize_dialog(const DialogInstance& dialog);

// Splits a serialized dialog into speaker tokens and lowercase words.
std::vector<std::string> detection_tokens(const std::string& serialized);

// Index of an n-gram in the hashed block: fnv1a64(ngram) mod D. Bigrams join with one space.
std::size_t feature_index(const std::string& ngram, std::size_t hash_dim);

FeatureVector featurize(const std::string& serialized, std::size_t turn_count, std::size_t hash_dim,
                        std::size_t turn_buckets);
FeatureVector featurize(const DialogInstance& dialog, std::size_t hash_dim, std::size_t turn_buckets);

double sigmoid(double x);

// sigmoid(weights . h). Throws InvalidArgument on dimension mismatch.
double detect_score(const DetectorModel& model, const FeatureVector& h);

// Full-batch gradient descent on mean binary log loss from zero weights.
// Throws DegenerateData unless both classes are present.
DetectorTraining train_detector(const Corpus& corpus, const DetectorHyper& hyper);

Detection detect(const DetectorModel& model, const DialogInstance& dialog);

}  // namespace gks
