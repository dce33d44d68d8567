#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "gks/corpus.hpp"
#include "gks/matrix.hpp"

namespace gks {

inline constexpr std::size_t kMaxQuestionTokens = 64;
inline constexpr std::size_t kMaxKnowledgeTokens = 128;

// Frozen token-embedding source standing in for a pretrained encoder.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dim() const = 0;
  // Writes the vector of `token` into out (size dim()). Deterministic.
  virtual void embed(const std::string& token, std::span<double> out) const = 0;

  std::vector<double> embed(const std::string& token) const {
    std::vector<double> v(dim());
    embed(token, v);
    return v;
  }
};

// Standard-normal coordinates drawn from a generator keyed by (token, seed).
class HashedGaussianProvider final : public EmbeddingProvider {
 public:
  HashedGaussianProvider(std::uint64_t seed, std::size_t dim);
  std::size_t dim() const override { return dim_; }
  void embed(const std::string& token, std::span<double> out) const override;
  using EmbeddingProvider::embed;
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::size_t dim_;
};

// Vectors read from a text file: "token v1 ... vd" per line. Unknown tokens embed to zero.
class FileVectorProvider final : public EmbeddingProvider {
 public:
  explicit FileVectorProvider(const std::filesystem::path& path);
  std::size_t dim() const override { return dim_; }
  void embed(const std::string& token, std::span<double> out) const override;
  using EmbeddingProvider::embed;
  const std::filesystem::path& path() const { return path_; }
  std::size_t size() const { return vectors_.size(); }

 private:
  std::filesystem::path path_;
  std::size_t dim_ = 0;
  std::unordered_map<std::string, std::vector<double>> vectors_;
};

enum class ProviderKind { HashedGaussian, FileVectors };

// Serializable description of a provider.
struct ProviderSpec {
  ProviderKind kind = ProviderKind::HashedGaussian;
  std::uint64_t seed = 42;
  std::size_t dim = 64;
  std::string path;  // FileVectors only

  bool operator==(const ProviderSpec&) const = default;
};

std::unique_ptr<EmbeddingProvider> make_provider(const ProviderSpec& spec);

struct PairEmbedding {
  std::vector<double> cls_vector;  // mean of all question and knowledge token vectors
  Matrix question_vectors;         // m x d
  Matrix knowledge_vectors;        // p x d

  std::size_t m() const { return question_vectors.rows(); }
  std::size_t p() const { return knowledge_vectors.rows(); }
  std::size_t dim() const { return question_vectors.cols(); }

  bool operator==(const PairEmbedding&) const = default;
};

PairEmbedding embed_pair(const EmbeddingProvider& provider, const std::string& question,
                         const KnowledgeSnippet& knowledge);

// Builds the m x d matrix for up to `cap` tokens of `text`.
Matrix embed_tokens(const EmbeddingProvider& provider, const std::string& text, std::size_t cap);

}  // namespace gks
