#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "topicflow/dialogue/dialogue.hpp"
#include "topicflow/nlu/models.hpp"

namespace topicflow::hcn {

using tensor::Vec;

enum class InputKind { plain, cnn, rnn };
InputKind parse_input_kind(const std::string& s);
std::string input_kind_name(InputKind k);

/// Keep probabilities throughout (1 disables dropout).
struct HcnConfig {
  std::string input = "cnn";  // plain | cnn | rnn
  nlu::EmbeddingConfig embedding;
  std::size_t lstm_size = 245;
  std::vector<std::size_t> widths{1, 2, 3, 4, 5};
  std::size_t filters = 21;
  std::size_t input_hidden = 64;  // rnn input layer
  bool bag_of_words = true;       // plain input only
  double lstm_keep = 0.80;
  double input_lstm_keep = 1.0;
  double conv_keep = 0.72;
  double fc_keep = 0.79;
  std::string activation = "relu";
  std::string input_activation = "tanh";
  std::size_t max_epochs = 12;
  std::size_t folds = 3;
  tensor::TrainConfig train;
};

void to_json(nlohmann::json& j, const HcnConfig& c);
void from_json(const nlohmann::json& j, HcnConfig& c);

/// bAbI presets: word2vec, word2vec+cnn, word2vec+rnn, fasttext,
/// fasttext+cnn, fasttext+rnn. The embedding file is left empty.
HcnConfig babi_preset(const std::string& variant);
const std::vector<std::string>& babi_variants();

/// Pretrained feature models that HCN training never updates.
struct FrozenFeaturizers {
  const nlu::CnnClassifier* sentiment = nullptr;
  const nlu::CnnClassifier* dialogue_act = nullptr;
};

struct TurnFeatures {
  Vec trained;
  Vec sentiment;
  Vec dialogue_act;
  Vec prev_action;
  Vec concat() const;
};

struct DmState {
  tensor::Lstm::State rnn;
  std::size_t last = 0;  // == inventory size before the first action
  bool finished = false;
};

struct ActionChoice {
  std::optional<std::size_t> class_id;  // empty once the dialogue is finished
  Vec distribution;
  DmState state;
};

/// softmax(logits) ⊙ mask, renormalized. All zeros when the mask is all zero.
Vec masked_distribution(std::span<const double> logits, const std::vector<int>& mask);

class HcnModel {
 public:
  HcnModel() = default;
  /// Fresh parameters; the vocabulary covers `utterances`.
  HcnModel(std::string dialogue_id, dialogue::Inventory inventory, dialogue::ActionMaskTable masks,
           const std::vector<std::string>& utterances, HcnConfig cfg, FrozenFeaturizers frozen);

  const std::string& dialogue_id() const { return dialogue_id_; }
  const dialogue::Inventory& inventory() const { return inventory_; }
  const dialogue::ActionMaskTable& masks() const { return masks_; }
  const HcnConfig& config() const { return config_; }
  std::size_t epochs_used() const { return epochs_used_; }
  void set_epochs_used(std::size_t e) { epochs_used_ = e; }
  std::size_t feature_dim() const;
  std::size_t trained_dim() const;

  DmState initial_state() const;
  TurnFeatures featurize(const std::string& utterance, std::size_t prev_action) const;
  Vec logits(const DmState& state, const TurnFeatures& f, DmState* next) const;
  /// `extra` (optional) is multiplied into the table mask, e.g. by a mask hook.
  ActionChoice predict(const DmState& state, const TurnFeatures& f, const std::vector<int>* extra = nullptr) const;
  ActionChoice step(const DmState& state, const std::string& utterance) const;

  /// Teacher-forced forward/backward over one transition; returns summed
  /// cross-entropy of the masked distribution and accumulates gradients.
  double train_transition(const dialogue::Transition& t, tensor::Rng* dropout_rng);
  /// Free-running predictions (own previous action, own masks). Stops when
  /// the dialogue finishes; missing turns count as wrong.
  std::vector<std::size_t> predict_transition(const dialogue::Transition& t) const;

  std::vector<tensor::Param*> params();

  void save(const std::filesystem::path& dir) const;
  static HcnModel load(const std::filesystem::path& dir, FrozenFeaturizers frozen);

 private:
  struct InputCache;
  Vec input_forward(const std::string& utterance, InputCache* cache, tensor::Rng* rng) const;
  void input_backward(const InputCache& cache, std::span<const double> d);
  void build(const tensor::Vocabulary& vocab, tensor::Rng& rng);

  std::string dialogue_id_;
  dialogue::Inventory inventory_;
  dialogue::ActionMaskTable masks_;
  HcnConfig config_;
  FrozenFeaturizers frozen_;
  std::size_t sentiment_dim_ = 0;
  std::size_t act_dim_ = 0;
  std::size_t epochs_used_ = 0;

  tensor::Embedding embedding_;
  tensor::TextCnn cnn_;
  tensor::Lstm input_rnn_;
  tensor::Lstm rnn_;
  tensor::Dense fc_;
  tensor::Dense output_;
};

}  // namespace topicflow::hcn
