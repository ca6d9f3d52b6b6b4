#include "topicflow/tensor/embedding.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "topicflow/error.hpp"
#include "topicflow/tensor/rng.hpp"

namespace topicflow::tensor {

Vocabulary::Vocabulary() {
  add(kPadToken);
  add(kUnkToken);
}

std::size_t Vocabulary::add(std::string_view token) {
  auto it = index_.find(std::string(token));
  if (it != index_.end()) return it->second;
  const std::size_t id = tokens_.size();
  tokens_.emplace_back(token);
  index_.emplace(tokens_.back(), id);
  return id;
}

std::size_t Vocabulary::index(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.count(std::string(token)) > 0;
}

std::vector<std::size_t> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<std::size_t> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(index(t));
  return out;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write vocabulary " + path.string());
  for (std::size_t i = 2; i < tokens_.size(); ++i) out << tokens_[i] << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read vocabulary " + path.string());
  Vocabulary v;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) v.add(line);
  }
  return v;
}

Vec hashed_vector(std::string_view token, std::size_t dim, double scale) {
  Rng rng(fnv1a(token));
  Vec v(dim);
  for (auto& x : v) x = rng.uniform(-scale, scale);
  return v;
}

namespace {

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

}  // namespace

EmbeddingTable load_embeddings(const std::filesystem::path& path, std::size_t dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open embedding file " + path.string());
  if (dim == 0) throw ValidationError("embedding dimension must be positive");

  EmbeddingTable table;
  std::vector<double> rows(2 * dim, 0.0);
  const Vec unk = hashed_vector(Vocabulary::kUnkToken, dim, 0.1);
  std::copy(unk.begin(), unk.end(), rows.begin() + dim);

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = split_spaces(line);
    if (fields.empty()) continue;
    if (line_no == 1 && fields.size() == 2) {
      double a, b;
      if (parse_double(fields[0], a) && parse_double(fields[1], b)) continue;
    }
    if (fields.size() != dim + 1) {
      throw ParseError(path.string(), line_no,
                       "expected " + std::to_string(dim) + " values, found " +
                           std::to_string(fields.size() - 1));
    }
    const std::string token(fields[0]);
    if (table.vocabulary.contains(token)) continue;
    table.vocabulary.add(token);
    for (std::size_t k = 0; k < dim; ++k) {
      double v;
      if (!parse_double(fields[k + 1], v)) {
        throw ParseError(path.string(), line_no, "bad number '" + std::string(fields[k + 1]) + "'");
      }
      rows.push_back(v);
    }
  }
  table.vectors = Tensor({table.vocabulary.size(), dim}, std::move(rows));
  return table;
}

EmbeddingTable make_embedding_table(const Vocabulary& vocabulary, std::size_t dim,
                                    const EmbeddingTable* pretrained, bool trainable,
                                    double scale) {
  if (pretrained && pretrained->dim() != dim) {
    throw ConfigError("pretrained embedding dimension " + std::to_string(pretrained->dim()) +
                      " differs from requested " + std::to_string(dim));
  }
  EmbeddingTable table;
  table.vocabulary = vocabulary;
  table.trainable = trainable;
  table.vectors = Tensor::matrix(vocabulary.size(), dim);
  for (std::size_t i = 1; i < vocabulary.size(); ++i) {
    const auto& tok = vocabulary.token(i);
    auto row = table.vectors.row(i);
    if (pretrained && pretrained->vocabulary.contains(tok)) {
      auto src = pretrained->lookup(tok);
      std::copy(src.begin(), src.end(), row.begin());
    } else {
      const Vec v = hashed_vector(tok, dim, scale);
      std::copy(v.begin(), v.end(), row.begin());
    }
  }
  return table;
}

}  // namespace topicflow::tensor
