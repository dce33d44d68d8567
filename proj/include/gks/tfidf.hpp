#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "gks/corpus.hpp"

namespace gks {

// Token ids (dense 0..|V|-1) and document frequencies over snippet texts.
class Vocabulary {
 public:
  static Vocabulary build(const Corpus& corpus);

  // -1 when unknown.
  long id(const std::string& token) const;
  std::size_t size() const { return df_.size(); }
  std::size_t document_frequency(std::size_t id) const { return df_[id]; }
  std::size_t document_count() const { return n_docs_; }
  // ln((1 + N) / (1 + df)) + 1
  double idf(std::size_t id) const;

 private:
  std::unordered_map<std::string, std::size_t> ids_;
  std::vector<std::size_t> df_;
  std::size_t n_docs_ = 0;
};

struct ScoredSnippet {
  const KnowledgeSnippet* snippet;
  double score;
};

// Cosine of raw-count tf-idf vectors; out-of-vocabulary question tokens are ignored.
// Sorted by score descending, ties by candidate index.
std::vector<ScoredSnippet> tfidf_rank(const Vocabulary& vocab, const std::string& question,
                                      const std::vector<KnowledgeSnippet>& candidates);

std::vector<ScoredSnippet> tfidf_rank(const Corpus& corpus, const std::string& question,
                                      const std::vector<KnowledgeSnippet>& candidates);

}  // namespace gks
