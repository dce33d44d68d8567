#include "gks/kernels.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "gks/error.hpp"

namespace gks {

KernelBank KernelBank::standard(std::size_t k) {
  if (k < 2) throw InvalidArgument("kernel bank needs K >= 2");
  KernelBank bank;
  const std::size_t soft = k - 1;
  for (std::size_t i = 0; i < soft; ++i) {
    bank.mus.push_back((2.0 * static_cast<double>(i) + 1.0 - static_cast<double>(soft)) / static_cast<double>(soft));
    bank.sigmas.push_back(kSoftSigma);
  }
  bank.mus.push_back(kExactMatchMu);
  bank.sigmas.push_back(kExactMatchSigma);
  return bank;
}

void KernelBank::validate() const {
  if (mus.size() != sigmas.size()) throw InvalidArgument("kernel bank: mus/sigmas length mismatch");
  if (mus.size() < 2) throw InvalidArgument("kernel bank: K must be >= 2");
  std::size_t exact = 0;
  for (std::size_t k = 0; k < mus.size(); ++k) {
    if (!(sigmas[k] > 0.0) || !std::isfinite(sigmas[k])) throw InvalidArgument("kernel bank: sigma must be > 0");
    if (!(mus[k] >= -1.0 && mus[k] <= 1.0)) throw InvalidArgument("kernel bank: mu outside [-1, 1]");
    exact += mus[k] == kExactMatchMu && sigmas[k] == kExactMatchSigma;
  }
  if (exact != 1 || mus.back() != kExactMatchMu || sigmas.back() != kExactMatchSigma) {
    throw InvalidArgument("kernel bank: needs exactly one exact-match kernel, at the last index");
  }
}

namespace {

// Rows scaled to unit length; rows with norm < kMinNorm become zero.
Matrix normalized_rows(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double s = 0.0;
    for (double v : x.row(r)) s += v * v;
    const double n = std::sqrt(s);
    if (n < kMinNorm) continue;
    auto src = x.row(r);
    auto dst = out.row(r);
    for (std::size_t c = 0; c < x.cols(); ++c) dst[c] = src[c] / n;
  }
  return out;
}

TranslationMatrix cosine_from_unit_rows(const Matrix& q, const Matrix& k) {
  TranslationMatrix m(q.rows(), k.rows());
  for (std::size_t i = 0; i < q.rows(); ++i) {
    auto qi = q.row(i);
    for (std::size_t j = 0; j < k.rows(); ++j) {
      auto kj = k.row(j);
      double s = 0.0;
      for (std::size_t c = 0; c < q.cols(); ++c) s += qi[c] * kj[c];
      m(i, j) = std::clamp(s, -1.0, 1.0);
    }
  }
  return m;
}

}  // namespace

TranslationMatrix translation_matrix(const PairEmbedding& pair) {
  return cosine_from_unit_rows(normalized_rows(pair.question_vectors), normalized_rows(pair.knowledge_vectors));
}

NodeFeature kernel_features(const TranslationMatrix& m, const KernelBank& bank) {
  NodeFeature f;
  f.values.assign(bank.size(), 0.0);
  if (m.rows() == 0) return f;
  std::vector<double> coef(bank.size());
  for (std::size_t k = 0; k < bank.size(); ++k) coef[k] = -1.0 / (2.0 * bank.sigmas[k] * bank.sigmas[k]);
  std::vector<double> row_sum(bank.size());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    std::fill(row_sum.begin(), row_sum.end(), 0.0);
    for (double x : m.row(i)) {
      for (std::size_t k = 0; k < bank.size(); ++k) {
        const double d = x - bank.mus[k];
        row_sum[k] += std::exp(coef[k] * d * d);
      }
    }
    for (std::size_t k = 0; k < bank.size(); ++k) f.values[k] += std::log(std::max(row_sum[k], kLogFloor));
  }
  const double inv_m = 1.0 / static_cast<double>(m.rows());
  for (auto& v : f.values) v *= inv_m;
  return f;
}

namespace {

// Question tokens are embedded once and shared across candidates.
std::vector<NodeFeature> node_features_impl(const std::string& question, std::span<const KnowledgeSnippet> candidates,
                                            const EmbeddingProvider& provider, const KernelBank& bank,
                                            bool parallel) {
  if (candidates.empty()) throw InvalidArgument("node_features: empty candidate list");
  const Matrix q = normalized_rows(embed_tokens(provider, question, kMaxQuestionTokens));
  std::vector<NodeFeature> out(candidates.size());
  const auto n = static_cast<std::ptrdiff_t>(candidates.size());
#pragma omp parallel for schedule(static) if (parallel && n > 1)
  for (std::ptrdiff_t c = 0; c < n; ++c) {
    const auto& snippet = candidates[static_cast<std::size_t>(c)];
    const Matrix k = normalized_rows(embed_tokens(provider, snippet.text(), kMaxKnowledgeTokens));
    out[static_cast<std::size_t>(c)] = kernel_features(cosine_from_unit_rows(q, k), bank);
  }
  return out;
}

}  // namespace

std::vector<NodeFeature> node_features(const std::string& question, std::span<const KnowledgeSnippet> candidates,
                                       const EmbeddingProvider& provider, const KernelBank& bank) {
  return node_features_impl(question, candidates, provider, bank, true);
}

std::vector<std::vector<NodeFeature>> batch_node_features(std::span<const SelectionQuery> queries,
                                                          const EmbeddingProvider& provider,
                                                          const KernelBank& bank) {
  std::vector<std::vector<NodeFeature>> out(queries.size());
  const auto n = static_cast<std::ptrdiff_t>(queries.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& q = queries[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(i)] = node_features_impl(q.question, q.candidates, provider, bank, false);
  }
  return out;
}

namespace serial {

std::vector<NodeFeature> node_features(const std::string& question, std::span<const KnowledgeSnippet> candidates,
                                       const EmbeddingProvider& provider, const KernelBank& bank) {
  if (candidates.empty()) throw InvalidArgument("node_features: empty candidate list");
  std::vector<NodeFeature> out;
  out.reserve(candidates.size());
  for (const auto& snippet : candidates) {
    out.push_back(kernel_features(translation_matrix(embed_pair(provider, question, snippet)), bank));
  }
  return out;
}

std::vector<std::vector<NodeFeature>> batch_node_features(std::span<const SelectionQuery> queries,
                                                          const EmbeddingProvider& provider,
                                                          const KernelBank& bank) {
  std::vector<std::vector<NodeFeature>> out;
  out.reserve(queries.size());
  for (const auto& q : queries) out.push_back(serial::node_features(q.question, q.candidates, provider, bank));
  return out;
}

}  // namespace serial

int parallel_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_parallel_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace gks
