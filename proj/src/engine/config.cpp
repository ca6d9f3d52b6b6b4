#include "topicflow/engine/config.hpp"

#include <fstream>

#include "topicflow/error.hpp"

namespace topicflow::engine {

using nlohmann::json;

namespace {

std::filesystem::path resolve(const json& j, const char* key, const std::filesystem::path& base,
                              const std::filesystem::path& fallback) {
  if (!j.contains(key)) return fallback;
  std::filesystem::path p = j.at(key).get<std::string>();
  if (p.empty() || p.is_absolute()) return p;
  return base / p;
}

TrainingConfig training_from_json(const json& j) {
  TrainingConfig t;
  t.corpus_dir = j.value("corpus_dir", t.corpus_dir);
  t.nlu_examples = j.value("nlu_examples", t.nlu_examples);
  t.dialogue_act_examples = j.value("dialogue_act_examples", t.dialogue_act_examples);
  t.dialogue_act_classes = j.value("dialogue_act_classes", t.dialogue_act_classes);
  t.reviews = j.value("reviews", t.reviews);
  t.switch_rounds = j.value("switch_rounds", t.switch_rounds);
  t.switch_foreign_share = j.value("switch_foreign_share", t.switch_foreign_share);
  t.hcn_min_epochs = j.value("hcn_min_epochs", t.hcn_min_epochs);
  t.corpus_seed = j.value("corpus_seed", t.corpus_seed);
  if (j.contains("intent")) t.intent = j["intent"].get<nlu::ClassifierConfig>();
  if (j.contains("entity")) t.entity = j["entity"].get<nlu::TaggerConfig>();
  if (j.contains("dialogue_act")) t.dialogue_act = j["dialogue_act"].get<nlu::ClassifierConfig>();
  if (j.contains("sentiment")) t.sentiment = j["sentiment"].get<nlu::SentimentConfig>();
  if (j.contains("sentiment_cnn")) t.sentiment_cnn = j["sentiment_cnn"].get<nlu::ClassifierConfig>();
  if (j.contains("detector")) t.detector = j["detector"].get<topicswitch::SwitchConfig>();
  if (j.contains("hcn")) t.hcn = j["hcn"].get<hcn::HcnConfig>();
  return t;
}

}  // namespace

EngineConfig config_from_json(const json& j, const std::filesystem::path& base) {
  EngineConfig c;
  try {
    c.models = resolve(j, "models", base, base / "models");
    c.topics = resolve(j, "topics", base, base / "topics");
    c.dialogues = resolve(j, "dialogues", base, base / "dialogues");
    c.content = resolve(j, "content", base, base / "content.tsv");
    c.kb = resolve(j, "kb", base, base / "kb.tsv");
    c.paraphrase_rules = resolve(j, "paraphrase_rules", base, base / "paraphrase_rules.tsv");
    c.context_dir = resolve(j, "context_dir", base, "");
    c.switch_threshold = j.value("switch_threshold", c.switch_threshold);
    c.paraphrase_probability = j.value("paraphrase_probability", c.paraphrase_probability);
    c.decay = j.value("decay", c.decay);
    c.seed = j.value("seed", c.seed);
    c.trivia_cap = j.value("trivia_cap", c.trivia_cap);
    c.initial_dialogues = j.value("initial_dialogues", c.initial_dialogues);
    c.content_dialogues = j.value("content_dialogues", c.content_dialogues);
    c.fallback_response = j.value("fallback_response", c.fallback_response);
    c.host = j.value("host", c.host);
    c.port = j.value("port", c.port);
    c.top_k = j.value("top_k", c.top_k);
    if (j.contains("training")) c.training = training_from_json(j["training"]);
    if (!c.training.corpus_dir.empty() && std::filesystem::path(c.training.corpus_dir).is_relative()) {
      c.training.corpus_dir = (base / c.training.corpus_dir).string();
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  return c;
}

json config_to_json(const EngineConfig& c) {
  const auto& t = c.training;
  return {{"models", c.models.string()},
          {"topics", c.topics.string()},
          {"dialogues", c.dialogues.string()},
          {"content", c.content.string()},
          {"kb", c.kb.string()},
          {"paraphrase_rules", c.paraphrase_rules.string()},
          {"context_dir", c.context_dir.string()},
          {"switch_threshold", c.switch_threshold},
          {"paraphrase_probability", c.paraphrase_probability},
          {"decay", c.decay},
          {"seed", c.seed},
          {"trivia_cap", c.trivia_cap},
          {"initial_dialogues", c.initial_dialogues},
          {"content_dialogues", c.content_dialogues},
          {"fallback_response", c.fallback_response},
          {"host", c.host},
          {"port", c.port},
          {"top_k", c.top_k},
          {"training",
           {{"corpus_dir", t.corpus_dir},
            {"nlu_examples", t.nlu_examples},
            {"dialogue_act_examples", t.dialogue_act_examples},
            {"dialogue_act_classes", t.dialogue_act_classes},
            {"reviews", t.reviews},
            {"switch_rounds", t.switch_rounds},
            {"switch_foreign_share", t.switch_foreign_share},
            {"hcn_min_epochs", t.hcn_min_epochs},
            {"corpus_seed", t.corpus_seed},
            {"intent", t.intent},
            {"entity", t.entity},
            {"dialogue_act", t.dialogue_act},
            {"sentiment", t.sentiment},
            {"sentiment_cnn", t.sentiment_cnn},
            {"detector", t.detector},
            {"hcn", t.hcn}}}};
}

EngineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path.string(), 0, e.what());
  }
  return config_from_json(j, path.parent_path());
}

void validate_config(const EngineConfig& c, bool need_models) {
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError(std::string("config: ") + name + " must be in [0, 1]");
  };
  prob(c.switch_threshold, "switch_threshold");
  prob(c.paraphrase_probability, "paraphrase_probability");
  if (!(c.decay > 0.0)) throw ValidationError("config: decay must be positive");
  if (c.fallback_response.empty()) throw ValidationError("config: fallback_response must be non-empty");
  if (c.port < 0 || c.port > 65535) throw ValidationError("config: port out of range");
  for (const auto& [id, kind] : c.content_dialogues) {
    if (kind != "funfact" && kind != "showerthought" && kind != "news") {
      throw ValidationError("config: dialogue " + id + " has unknown content kind " + kind);
    }
  }
  auto exists = [](const std::filesystem::path& p, const char* what) {
    if (!std::filesystem::exists(p)) throw ConfigError(std::string(what) + " " + p.string() + " does not exist");
  };
  exists(c.topics, "topic directory");
  exists(c.dialogues, "dialogue directory");
  exists(c.content, "content store");
  exists(c.kb, "knowledge base");
  exists(c.paraphrase_rules, "paraphrase rules");
  if (need_models) exists(c.models, "model directory");
}

}  // namespace topicflow::engine
