#include "gks/embedding.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "gks/error.hpp"
#include "gks/hash.hpp"
#include "gks/tokenize.hpp"

namespace gks {

HashedGaussianProvider::HashedGaussianProvider(std::uint64_t seed, std::size_t dim) : seed_(seed), dim_(dim) {
  if (dim < 2) throw InvalidArgument("embedding dimension must be >= 2");
}

void HashedGaussianProvider::embed(const std::string& token, std::span<double> out) const {
  std::mt19937_64 rng(mix64(fnv1a64(token) ^ mix64(seed_)));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < dim_; ++i) out[i] = normal(rng);
}

FileVectorProvider::FileVectorProvider(const std::filesystem::path& path) : path_(path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open vector file " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::istringstream ss(line);
    std::string token;
    ss >> token;
    std::vector<double> v;
    std::string field;
    while (ss >> field) {
      try {
        std::size_t used = 0;
        const double x = std::stod(field, &used);
        if (used != field.size() || !std::isfinite(x)) throw std::invalid_argument(field);
        v.push_back(x);
      } catch (const std::exception&) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) + ": bad number \"" + field + "\"");
      }
    }
    if (dim_ == 0) dim_ = v.size();
    if (v.size() != dim_ || dim_ < 2) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(dim_ < 2 ? 2 : dim_) + "+ values, got " + std::to_string(v.size()));
    }
    if (!vectors_.emplace(token, std::move(v)).second) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": duplicate token \"" + token + "\"");
    }
  }
  if (vectors_.empty()) throw ParseError(path.string() + ": no vectors");
}

void FileVectorProvider::embed(const std::string& token, std::span<double> out) const {
  auto it = vectors_.find(token);
  if (it == vectors_.end()) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  std::copy(it->second.begin(), it->second.end(), out.begin());
}

std::unique_ptr<EmbeddingProvider> make_provider(const ProviderSpec& spec) {
  switch (spec.kind) {
    case ProviderKind::HashedGaussian:
      return std::make_unique<HashedGaussianProvider>(spec.seed, spec.dim);
    case ProviderKind::FileVectors:
      return std::make_unique<FileVectorProvider>(spec.path);
  }
  throw InvalidArgument("unknown provider kind");
}

Matrix embed_tokens(const EmbeddingProvider& provider, const std::string& text, std::size_t cap) {
  auto tokens = tokenize(text);
  if (tokens.size() > cap) tokens.resize(cap);
  Matrix out(tokens.size(), provider.dim());
  for (std::size_t i = 0; i < tokens.size(); ++i) provider.embed(tokens[i], out.row(i));
  return out;
}

PairEmbedding embed_pair(const EmbeddingProvider& provider, const std::string& question,
                         const KnowledgeSnippet& knowledge) {
  PairEmbedding pair;
  pair.question_vectors = embed_tokens(provider, question, kMaxQuestionTokens);
  pair.knowledge_vectors = embed_tokens(provider, knowledge.text(), kMaxKnowledgeTokens);
  const std::size_t d = provider.dim();
  pair.cls_vector.assign(d, 0.0);
  for (const Matrix* block : {&pair.question_vectors, &pair.knowledge_vectors}) {
    for (std::size_t r = 0; r < block->rows(); ++r) {
      for (std::size_t c = 0; c < d; ++c) pair.cls_vector[c] += (*block)(r, c);
    }
  }
  const double n = static_cast<double>(pair.m() + pair.p());
  for (auto& x : pair.cls_vector) x /= n;
  return pair;
}

}  // namespace gks
