#include "gks/tfidf.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "gks/error.hpp"
#include "gks/tokenize.hpp"

namespace gks {

Vocabulary Vocabulary::build(const Corpus& corpus) {
  Vocabulary vocab;
  for (const auto& key : corpus.entity_order) {
    for (const auto& snippet : corpus.snippets.at(key).docs) {
      ++vocab.n_docs_;
      std::set<std::string> seen;
      for (auto& token : tokenize(snippet.text())) {
        if (!seen.insert(token).second) continue;
        auto [it, inserted] = vocab.ids_.emplace(token, vocab.df_.size());
        if (inserted) vocab.df_.push_back(0);
        ++vocab.df_[it->second];
      }
    }
  }
  return vocab;
}

long Vocabulary::id(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? -1 : static_cast<long>(it->second);
}

double Vocabulary::idf(std::size_t id) const {
  return std::log((1.0 + static_cast<double>(n_docs_)) / (1.0 + static_cast<double>(df_[id]))) + 1.0;
}

namespace {

// Sparse tf-idf vector keyed by token id.
std::map<std::size_t, double> weigh(const Vocabulary& vocab, const std::string& text) {
  std::map<std::size_t, double> counts;
  for (const auto& token : tokenize(text)) {
    const long id = vocab.id(token);
    if (id >= 0) counts[static_cast<std::size_t>(id)] += 1.0;
  }
  for (auto& [id, w] : counts) w *= vocab.idf(id);
  return counts;
}

double norm(const std::map<std::size_t, double>& v) {
  double s = 0.0;
  for (const auto& [id, w] : v) s += w * w;
  return std::sqrt(s);
}

}  // namespace

std::vector<ScoredSnippet> tfidf_rank(const Vocabulary& vocab, const std::string& question,
                                      const std::vector<KnowledgeSnippet>& candidates) {
  if (candidates.empty()) throw InvalidArgument("tfidf_rank: empty candidate list");
  const auto q = weigh(vocab, question);
  const double q_norm = norm(q);
  std::vector<ScoredSnippet> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) {
    const auto k = weigh(vocab, c.text());
    const double k_norm = norm(k);
    double dot = 0.0;
    for (const auto& [id, w] : q) {
      if (auto it = k.find(id); it != k.end()) dot += w * it->second;
    }
    double score = (q_norm > 0.0 && k_norm > 0.0) ? dot / (q_norm * k_norm) : 0.0;
    out.push_back({&c, std::clamp(score, 0.0, 1.0)});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const ScoredSnippet& a, const ScoredSnippet& b) { return a.score > b.score; });
  return out;
}

std::vector<ScoredSnippet> tfidf_rank(const Corpus& corpus, const std::string& question,
                                      const std::vector<KnowledgeSnippet>& candidates) {
  return tfidf_rank(Vocabulary::build(corpus), question, candidates);
}

}  // namespace gks
