#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "topicflow/nlu/datasets.hpp"
#include "topicflow/nlu/iob.hpp"
#include "topicflow/tensor/crf.hpp"
#include "topicflow/tensor/layers.hpp"
#include "topicflow/tensor/train.hpp"

namespace topicflow::nlu {

using tensor::Vec;

struct EmbeddingConfig {
  std::size_t dim = 50;
  std::string pretrained;  // optional "token v1 .. vd" file
  bool trainable = true;
};

struct ClassifierConfig {
  EmbeddingConfig embedding;
  std::vector<std::size_t> widths{1, 2, 3, 4, 5};
  std::size_t filters = 32;
  std::size_t hidden = 64;  // second-to-last layer; 0 drops it
  std::string activation = "relu";
  double conv_keep = 1.0;  // dropout keep probabilities
  double fc_keep = 1.0;
  tensor::TrainConfig train;
};

struct TaggerConfig {
  EmbeddingConfig embedding;
  std::size_t hidden = 100;
  std::string cell = "lstm";
  double keep = 1.0;
  tensor::TrainConfig train;
};

struct SentimentConfig {
  EmbeddingConfig embedding;
  std::size_t hidden = 32;
  std::string cell = "gru";
  std::size_t max_tokens = 120;  // longer texts keep their first max_tokens tokens
  tensor::TrainConfig train;
};

void to_json(nlohmann::json& j, const EmbeddingConfig& c);
void from_json(const nlohmann::json& j, EmbeddingConfig& c);
void to_json(nlohmann::json& j, const ClassifierConfig& c);
void from_json(const nlohmann::json& j, ClassifierConfig& c);
void to_json(nlohmann::json& j, const TaggerConfig& c);
void from_json(const nlohmann::json& j, TaggerConfig& c);
void to_json(nlohmann::json& j, const SentimentConfig& c);
void from_json(const nlohmann::json& j, SentimentConfig& c);

/// Vocabulary over the training tokens in first-seen order.
tensor::Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& sentences);
tensor::Embedding make_embedding(const std::string& name, const tensor::Vocabulary& vocab,
                                 const EmbeddingConfig& cfg);

/// Embeddings, multi-width convolution with max pooling, then two fully
/// connected layers. Used for intents, dialogue acts, and the sentiment CNN
/// whose features feed the dialogue manager.
class CnnClassifier {
 public:
  static CnnClassifier train(const std::vector<LabeledText>& data, const ClassifierConfig& cfg,
                             std::vector<double>* epoch_losses = nullptr);

  const std::vector<std::string>& labels() const { return labels_; }
  const ClassifierConfig& config() const { return config_; }
  Vec distribution(const std::vector<std::string>& tokens) const;
  /// Output of the second-to-last layer (pooled CNN features when hidden == 0).
  Vec features(const std::vector<std::string>& tokens) const;
  std::size_t feature_dim() const;
  double accuracy(const std::vector<LabeledText>& data) const;

  void save(const std::filesystem::path& dir) const;
  static CnnClassifier load(const std::filesystem::path& dir);

  std::vector<tensor::Param*> params();

  tensor::Embedding embedding;
  tensor::TextCnn cnn;
  tensor::Dense hidden;
  tensor::Dense output;

 private:
  void build(const tensor::Vocabulary& vocab, tensor::Rng& rng);
  std::vector<std::size_t> ids(const std::vector<std::string>& tokens) const;
  Vec hidden_forward(const std::vector<std::size_t>& ids) const;

  ClassifierConfig config_;
  std::vector<std::string> labels_;
};

/// Embeddings, bidirectional recurrence, per-token projection and a
/// linear-chain CRF.
class EntityTagger {
 public:
  /// Entity types come from `types` when given, else from the data (sorted).
  static EntityTagger train(const std::vector<TaggedSentence>& data, const TaggerConfig& cfg,
                            const std::vector<std::string>& types = {},
                            std::vector<double>* epoch_losses = nullptr);

  const TagSet& tagset() const { return tagset_; }
  const TaggerConfig& config() const { return config_; }
  tensor::Tensor emissions(const std::vector<std::string>& tokens) const;
  std::vector<std::string> tag(const std::vector<std::string>& tokens) const;

  void save(const std::filesystem::path& dir) const;
  static EntityTagger load(const std::filesystem::path& dir);

  std::vector<tensor::Param*> params();

  tensor::Embedding embedding;
  tensor::BiRnn rnn;
  tensor::Dense projection;
  tensor::Param transitions;

 private:
  void build(const tensor::Vocabulary& vocab, tensor::Rng& rng);

  TaggerConfig config_;
  TagSet tagset_;
};

struct JointExample {
  std::vector<std::string> tokens;
  std::vector<std::string> tags;
  std::string intent;
};

/// Pairs intent rows with CoNLL sentences that tokenize identically.
std::vector<JointExample> join_examples(const std::vector<LabeledText>& intents,
                                        const std::vector<TaggedSentence>& entities);

/// Two stacked bidirectional layers. The first layer's final states predict
/// the intent; the second layer feeds the CRF emissions. Loss is the sum.
class CombinedModel {
 public:
  /// With `detach_entity_head` the CRF loss does not reach the shared layers.
  static CombinedModel train(const std::vector<JointExample>& data, const TaggerConfig& cfg,
                             std::vector<double>* epoch_losses = nullptr, bool detach_entity_head = false);

  const std::vector<std::string>& labels() const { return labels_; }
  const TagSet& tagset() const { return tagset_; }
  Vec intent_logits(const std::vector<std::string>& tokens) const;
  Vec intent_distribution(const std::vector<std::string>& tokens) const;
  std::vector<std::string> tag(const std::vector<std::string>& tokens) const;

  std::vector<tensor::Param*> params();
  std::vector<tensor::Param*> entity_head_params();

  tensor::Embedding embedding;
  tensor::BiRnn first;
  tensor::Dense intent_output;
  tensor::BiRnn second;
  tensor::Dense projection;
  tensor::Param transitions;

 private:
  TaggerConfig config_;
  std::vector<std::string> labels_;
  TagSet tagset_;
};

/// Embeddings, bidirectional recurrence, dense layer and a sigmoid: a score
/// from 0 (negative) to 1 (positive).
class SentimentModel {
 public:
  static SentimentModel train(const std::vector<SentimentText>& data, const SentimentConfig& cfg,
                              std::vector<double>* epoch_losses = nullptr);

  double score(const std::string& text) const;
  double accuracy(const std::vector<SentimentText>& data) const;
  const SentimentConfig& config() const { return config_; }

  void save(const std::filesystem::path& dir) const;
  static SentimentModel load(const std::filesystem::path& dir);

  std::vector<tensor::Param*> params();

  tensor::Embedding embedding;
  tensor::BiRnn rnn;
  tensor::Dense output;

 private:
  void build(const tensor::Vocabulary& vocab, tensor::Rng& rng);
  std::vector<std::size_t> ids(const std::string& text) const;

  SentimentConfig config_;
};

class NoEvidence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mean sentiment over the first `top_n` corpus texts containing `entity`
/// (case-insensitive substring). Throws NoEvidence when nothing matches.
double entity_sentiment(const SentimentModel& model, const std::string& entity,
                        const std::vector<std::string>& corpus, std::size_t top_n = 50);

}  // namespace topicflow::nlu
