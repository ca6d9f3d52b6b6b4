#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "topicflow/tensor/tensor.hpp"

namespace topicflow::tensor {

/// Token <-> index map. Index 0 is padding, index 1 is the unknown token.
class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr std::string_view kPadToken = "<pad>";
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocabulary();

  /// Adds the token if absent; returns its index either way.
  std::size_t add(std::string_view token);
  std::size_t index(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(std::size_t index) const { return tokens_.at(index); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<std::size_t> encode(const std::vector<std::string>& tokens) const;

  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct EmbeddingTable {
  Vocabulary vocabulary;
  Tensor vectors;  // [V x d]
  bool trainable = false;

  std::size_t dim() const { return vectors.cols(); }
  std::span<const double> lookup(std::string_view token) const {
    return vectors.row(vocabulary.index(token));
  }
};

/// Deterministic pseudo-random vector seeded by the token text.
Vec hashed_vector(std::string_view token, std::size_t dim, double scale);

/// Reads "token v1 ... v_dim" lines. A leading "count dim" header line is skipped.
EmbeddingTable load_embeddings(const std::filesystem::path& path, std::size_t dim);

/// Builds a table over `vocabulary`. Rows come from `pretrained` where the token
/// is known there, otherwise from hashed_vector. The padding row is zero.
EmbeddingTable make_embedding_table(const Vocabulary& vocabulary, std::size_t dim,
                                    const EmbeddingTable* pretrained, bool trainable,
                                    double scale = 0.1);

}  // namespace topicflow::tensor
