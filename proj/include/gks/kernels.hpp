#pragma once

#include <span>
#include <string>
#include <vector>

#include "gks/corpus.hpp"
#include "gks/embedding.hpp"
#include "gks/matrix.hpp"

namespace gks {

inline constexpr double kExactMatchMu = 1.0;
inline constexpr double kExactMatchSigma = 1e-3;
inline constexpr double kSoftSigma = 0.1;
inline constexpr double kLogFloor = 1e-10;
inline constexpr double kMinNorm = 1e-12;

// Gaussian kernels over cosine similarity. The last kernel is the exact-match kernel.
struct KernelBank {
  std::vector<double> mus;
  std::vector<double> sigmas;

  // K - 1 soft kernels with centers evenly spaced in (-1, 1), sigma 0.1, then exact match.
  // K = 11 gives mu = -0.9, -0.7, ..., 0.9.
  static KernelBank standard(std::size_t k = 11);

  std::size_t size() const { return mus.size(); }
  std::size_t exact_match_index() const { return mus.size() - 1; }
  // Throws InvalidArgument when an invariant is broken.
  void validate() const;

  bool operator==(const KernelBank&) const = default;
};

// m x p cosine similarities between question and knowledge token vectors.
using TranslationMatrix = Matrix;

struct NodeFeature {
  std::vector<double> values;  // one soft-TF value per kernel
  bool operator==(const NodeFeature&) const = default;
};

// Entry (i, j) = cos(q_i, k_j); 0 when either norm is below 1e-12.
TranslationMatrix translation_matrix(const PairEmbedding& pair);

// S_k = (1/m) sum_i log(max(sum_j exp(-(M_ij - mu_k)^2 / (2 sigma_k^2)), 1e-10)).
NodeFeature kernel_features(const TranslationMatrix& m, const KernelBank& bank);

// One feature per candidate, in input order. Parallel over candidates.
std::vector<NodeFeature> node_features(const std::string& question, std::span<const KnowledgeSnippet> candidates,
                                       const EmbeddingProvider& provider, const KernelBank& bank);

struct SelectionQuery {
  std::string question;
  std::span<const KnowledgeSnippet> candidates;
};

// node_features for many queries; parallel over queries (OpenMP when available).
std::vector<std::vector<NodeFeature>> batch_node_features(std::span<const SelectionQuery> queries,
                                                          const EmbeddingProvider& provider,
                                                          const KernelBank& bank);

// Single-threaded implementation through embed_pair, kept as the reference for the parallel path.
namespace serial {

std::vector<NodeFeature> node_features(const std::string& question, std::span<const KnowledgeSnippet> candidates,
                                       const EmbeddingProvider& provider, const KernelBank& bank);

std::vector<std::vector<NodeFeature>> batch_node_features(std::span<const SelectionQuery> queries,
                                                          const EmbeddingProvider& provider,
                                                          const KernelBank& bank);

}  // namespace serial

// Number of OpenMP threads the parallel paths use (1 without OpenMP).
int parallel_threads();
// Caps the OpenMP team size; no-op without OpenMP.
void set_parallel_threads(int n);

}  // namespace gks
