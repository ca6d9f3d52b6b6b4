#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "topicflow/dialogue/dialogue.hpp"
#include "topicflow/nlu/datasets.hpp"
#include "topicflow/nlu/models.hpp"
#include "topicflow/tensor/layers.hpp"

namespace topicflow::topicswitch {

using tensor::Vec;

struct SwitchExample {
  std::string previous;  // bot response before the message; empty on the first turn
  std::string message;
  int label = 0;         // 1 = the user leaves the sub-dialogue
  bool operator==(const SwitchExample&) const = default;
};

/// One authored dialogue with its compiled transitions.
struct SwitchSource {
  const dialogue::DialogueGraph* graph = nullptr;
  const dialogue::Inventory* inventory = nullptr;
  const std::vector<dialogue::Transition>* transitions = nullptr;
};

/// Walks every transition; each user step yields (previous bot text, message,
/// 0), except that with probability mix_rate the message is swapped for a
/// random intent example and labeled 1. Bot texts pick a variant at random and
/// drop `{placeholders}`.
std::vector<SwitchExample> generate_switch_dataset(const std::vector<SwitchSource>& sources,
                                                   const std::vector<nlu::LabeledText>& intents, double mix_rate,
                                                   std::uint64_t seed);

/// "label<TAB>previous<TAB>message" lines.
std::string format_switch_corpus(const std::vector<SwitchExample>& data);
std::vector<SwitchExample> parse_switch_corpus(const std::string& text, const std::string& source);

struct SwitchConfig {
  nlu::EmbeddingConfig embedding{32, "", true};
  std::vector<std::size_t> widths{1, 2, 3};
  std::size_t filters = 16;
  std::size_t hidden = 32;
  std::string activation = "relu";
  double keep = 1.0;  // dropout keep probability on the CNN features
  double threshold = 0.5;
  double mix_rate = 0.3;
  tensor::TrainConfig train{8, 16, 0.005, 0.9, 0.999, 1e-8, 5.0, 1};
};

void to_json(nlohmann::json& j, const SwitchConfig& c);
void from_json(const nlohmann::json& j, SwitchConfig& c);

/// Shared embeddings feed one CNN over the previous response and another over
/// the message; the pooled features, concatenated, make one recurrent step
/// whose state goes to a 2-way softmax (0 stay, 1 switch).
class SwitchModel {
 public:
  static SwitchModel train(const std::vector<SwitchExample>& data, const SwitchConfig& cfg,
                           std::vector<double>* epoch_losses = nullptr);

  const SwitchConfig& config() const { return config_; }
  Vec distribution(const std::string& previous, const std::string& message) const;
  double accuracy(const std::vector<SwitchExample>& data) const;

  void save(const std::filesystem::path& dir) const;
  static SwitchModel load(const std::filesystem::path& dir);

  std::vector<tensor::Param*> params();

  tensor::Embedding embedding;
  tensor::TextCnn response_cnn;
  tensor::TextCnn message_cnn;
  tensor::Lstm rnn;
  tensor::Dense output;

 private:
  void build(const tensor::Vocabulary& vocab, tensor::Rng& rng);
  std::vector<std::size_t> ids(const std::string& text) const;

  SwitchConfig config_;
};

/// Probability that the message abandons the current sub-dialogue.
double detect_switch(const SwitchModel& m, const std::string& previous, const std::string& message);
inline bool is_switch(const SwitchModel& m, const std::string& previous, const std::string& message) {
  return detect_switch(m, previous, message) > m.config().threshold;
}

}  // namespace topicflow::topicswitch
