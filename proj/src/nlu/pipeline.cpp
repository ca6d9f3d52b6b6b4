#include "topicflow/nlu/pipeline.hpp"

#include "topicflow/error.hpp"
#include "topicflow/nlu/tokenizer.hpp"

namespace topicflow::nlu {

using nlohmann::json;

json to_json(const IntentPrediction& p) {
  json dist = json::object();
  for (std::size_t i = 0; i < p.labels.size(); ++i) dist[p.labels[i]] = p.distribution[i];
  return {{"label", p.label}, {"confidence", p.confidence}, {"distribution", dist}};
}

json to_json(const EntitySpan& s) {
  return {{"text", s.text}, {"begin", s.begin}, {"end", s.end}, {"type", s.type}};
}

json to_json(const Annotation& a) {
  json ents = json::array();
  for (const auto& e : a.entities) ents.push_back(to_json(e));
  return {{"intent", to_json(a.intent)},
          {"entities", ents},
          {"dialogue_act_features", a.dialogue_act_features},
          {"sentiment", a.sentiment}};
}

Annotation annotation_from_json(const json& j) {
  Annotation a;
  const auto& in = j.at("intent");
  a.intent.label = in.at("label").get<std::string>();
  a.intent.confidence = in.at("confidence").get<double>();
  for (const auto& [k, v] : in.at("distribution").items()) {
    a.intent.labels.push_back(k);
    a.intent.distribution.push_back(v.get<double>());
  }
  for (const auto& e : j.at("entities")) {
    a.entities.push_back({e.at("text").get<std::string>(), e.at("begin").get<std::size_t>(),
                          e.at("end").get<std::size_t>(), e.at("type").get<std::string>()});
  }
  a.dialogue_act_features = j.at("dialogue_act_features").get<Vec>();
  a.sentiment = j.at("sentiment").get<double>();
  return a;
}

IntentPrediction predict_intent(const CnnClassifier& model, const std::string& utterance,
                                const std::string& fallback) {
  IntentPrediction p;
  const auto toks = words(utterance);
  p.labels = model.labels();
  p.distribution = model.distribution(toks);
  if (toks.empty()) {
    p.label = fallback;
    p.confidence = 0.0;
    return p;
  }
  const std::size_t k = tensor::argmax(p.distribution);
  p.label = p.labels[k];
  p.confidence = p.distribution[k];
  return p;
}

std::vector<EntitySpan> tag_entities(const EntityTagger& model, const std::string& utterance) {
  const auto toks = tokenize(utterance);
  if (toks.empty()) return {};
  std::vector<std::string> texts;
  for (const auto& t : toks) texts.push_back(t.text);
  auto spans = decode_iob(texts, model.tag(texts));
  for (auto& s : spans) {
    const std::size_t b = toks[s.begin].begin, e = toks[s.end - 1].end;
    s.text = utterance.substr(b, e - b);
  }
  return spans;
}

Nlu::Nlu(CnnClassifier intent, EntityTagger entity, CnnClassifier dialogue_act, SentimentModel sentiment,
         std::string fallback_intent)
    : intent_(std::move(intent)),
      entity_(std::move(entity)),
      dialogue_act_(std::move(dialogue_act)),
      sentiment_(std::move(sentiment)),
      fallback_(std::move(fallback_intent)) {}

Nlu Nlu::load(const std::filesystem::path& dir, std::string fallback_intent) {
  for (const char* part : {"intent", "entity", "dialogue_act", "sentiment"}) {
    if (!std::filesystem::exists(dir / part / "model.bin")) {
      throw ConfigError("missing " + std::string(part) + " model in " + dir.string());
    }
  }
  return Nlu(CnnClassifier::load(dir / "intent"), EntityTagger::load(dir / "entity"),
             CnnClassifier::load(dir / "dialogue_act"), SentimentModel::load(dir / "sentiment"),
             std::move(fallback_intent));
}

void Nlu::save(const std::filesystem::path& dir) const {
  intent_.save(dir / "intent");
  entity_.save(dir / "entity");
  dialogue_act_.save(dir / "dialogue_act");
  sentiment_.save(dir / "sentiment");
}

Annotation Nlu::annotate(const std::string& utterance) const {
  Annotation a;
  a.intent = predict_intent(intent_, utterance, fallback_);
  a.entities = tag_entities(entity_, utterance);
  a.dialogue_act_features = dialogue_act_.features(words(utterance));
  a.sentiment = sentiment_.score(utterance);
  return a;
}

}  // namespace topicflow::nlu
