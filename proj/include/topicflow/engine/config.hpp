#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "topicflow/hcn/model.hpp"
#include "topicflow/nlu/models.hpp"
#include "topicflow/topicswitch/switch.hpp"

namespace topicflow::engine {

/// Sizes and seeds for `train-all`. Corpora are synthetic unless a corpus
/// directory with the files written by `gen-data` is given.
struct TrainingConfig {
  std::string corpus_dir;
  std::size_t nlu_examples = 1500;
  std::size_t dialogue_act_examples = 600;
  std::size_t dialogue_act_classes = 6;
  std::size_t reviews = 1000;
  std::size_t switch_rounds = 4;  // passes over the compiled transitions
  double switch_foreign_share = 0.3;  // switch messages taken from other dialogues' user nodes
  std::size_t hcn_min_epochs = 8;  // floor under the cross-validated epoch count
  std::uint64_t corpus_seed = 1;
  nlu::ClassifierConfig intent;
  nlu::TaggerConfig entity;
  nlu::ClassifierConfig dialogue_act;
  nlu::SentimentConfig sentiment;
  nlu::ClassifierConfig sentiment_cnn;
  topicswitch::SwitchConfig detector;
  hcn::HcnConfig hcn;
};

struct EngineConfig {
  std::filesystem::path models;
  std::filesystem::path topics;
  std::filesystem::path dialogues;
  std::filesystem::path content;
  std::filesystem::path kb;
  std::filesystem::path paraphrase_rules;
  std::filesystem::path context_dir;  // empty: in-memory store
  double switch_threshold = 0.5;
  double paraphrase_probability = 0.5;
  double decay = 0.5;
  std::uint64_t seed = 7;
  std::size_t trivia_cap = 1;
  std::vector<std::string> initial_dialogues{"initial_name", "initial_how_are_you", "initial_hobbies"};
  std::map<std::string, std::string> content_dialogues{
      {"ge_funfact", "funfact"}, {"ge_showerthought", "showerthought"}, {"ge_news", "news"}};
  std::string fallback_response = "Let's talk about something else. What are you interested in?";
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t top_k = 5;
  TrainingConfig training;
};

/// Relative paths resolve against `base`.
EngineConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base);
nlohmann::json config_to_json(const EngineConfig& c);
EngineConfig load_config(const std::filesystem::path& path);

/// Throws ValidationError for bad values and ConfigError for missing paths.
/// `need_models` also requires the model directory.
void validate_config(const EngineConfig& c, bool need_models);

}  // namespace topicflow::engine
