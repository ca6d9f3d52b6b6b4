#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "topicflow/nlu/models.hpp"

namespace topicflow::nlu {

struct IntentPrediction {
  std::vector<std::string> labels;
  Vec distribution;
  std::string label;
  double confidence = 0.0;
};

struct Annotation {
  IntentPrediction intent;
  std::vector<EntitySpan> entities;
  Vec dialogue_act_features;
  double sentiment = 0.5;
};

nlohmann::json to_json(const IntentPrediction& p);
nlohmann::json to_json(const EntitySpan& s);
nlohmann::json to_json(const Annotation& a);
Annotation annotation_from_json(const nlohmann::json& j);

IntentPrediction predict_intent(const CnnClassifier& model, const std::string& utterance,
                                const std::string& fallback = "fallback");

/// Tags the utterance and decodes spans; span text is the original surface
/// (case and inner punctuation preserved).
std::vector<EntitySpan> tag_entities(const EntityTagger& model, const std::string& utterance);

/// All four annotators behind one call. Models live in subdirectories
/// intent/, entity/, dialogue_act/, sentiment/ of the NLU directory.
class Nlu {
 public:
  Nlu(CnnClassifier intent, EntityTagger entity, CnnClassifier dialogue_act, SentimentModel sentiment,
      std::string fallback_intent = "fallback");

  static Nlu load(const std::filesystem::path& dir, std::string fallback_intent = "fallback");
  void save(const std::filesystem::path& dir) const;

  Annotation annotate(const std::string& utterance) const;

  const CnnClassifier& intent_model() const { return intent_; }
  const EntityTagger& entity_model() const { return entity_; }
  const CnnClassifier& dialogue_act_model() const { return dialogue_act_; }
  const SentimentModel& sentiment_model() const { return sentiment_; }
  std::size_t dialogue_act_dim() const { return dialogue_act_.feature_dim(); }

 private:
  CnnClassifier intent_;
  EntityTagger entity_;
  CnnClassifier dialogue_act_;
  SentimentModel sentiment_;
  std::string fallback_;
};

}  // namespace topicflow::nlu
