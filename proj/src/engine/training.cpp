#include "topicflow/engine/training.hpp"

#include <chrono>
#include <map>
#include <set>
#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "topicflow/error.hpp"
#include "topicflow/hcn/training.hpp"

namespace topicflow::engine {

using nlohmann::json;

namespace {

void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p);
  if (!out) throw ConfigError("cannot write " + p.string());
  out << s;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

Corpora make_corpora(const TrainingConfig& t) {
  Corpora c;
  if (!t.corpus_dir.empty()) {
    const std::filesystem::path d = t.corpus_dir;
    c.nlu.intents = nlu::read_labeled_tsv(d / "intents.tsv");
    c.nlu.entities = nlu::read_conll(d / "entities.conll");
    c.dialogue_acts = nlu::read_labeled_tsv(d / "dialogue_acts.tsv");
    c.reviews = nlu::read_sentiment_tsv(d / "reviews.tsv");
    return c;
  }
  c.nlu = synth::generate_nlu_corpus(t.nlu_examples, t.corpus_seed);
  c.dialogue_acts = synth::generate_dialogue_acts(t.dialogue_act_examples, t.dialogue_act_classes, t.corpus_seed + 1);
  c.reviews = synth::generate_reviews(t.reviews, t.corpus_seed + 2);
  return c;
}

void write_corpora(const std::filesystem::path& dir, const Corpora& c) {
  std::filesystem::create_directories(dir);
  nlu::write_labeled_tsv(dir / "intents.tsv", c.nlu.intents);
  nlu::write_conll(dir / "entities.conll", c.nlu.entities);
  nlu::write_labeled_tsv(dir / "dialogue_acts.tsv", c.dialogue_acts);
  nlu::write_sentiment_tsv(dir / "reviews.tsv", c.reviews);
}

std::vector<topicswitch::SwitchExample> make_switch_corpus(const std::map<std::string, CompiledDialogue>& dialogues,
                                                           const std::vector<nlu::LabeledText>& intents,
                                                           const TrainingConfig& t) {
  std::vector<topicswitch::SwitchSource> sources;
  for (const auto& [_, d] : dialogues) sources.push_back({&d.graph, &d.inventory, &d.transitions});
  std::vector<topicswitch::SwitchExample> out;
  for (std::size_t r = 0; r < t.switch_rounds; ++r) {
    auto part = topicswitch::generate_switch_dataset(sources, intents, t.detector.mix_rate, t.corpus_seed + 10 + r);
    out.insert(out.end(), part.begin(), part.end());
  }
  if (t.switch_foreign_share <= 0.0) return out;

  // Intent rows alone never look like an answer to some other sub-dialogue's
  // question, so part of the switch messages come from foreign user nodes.
  std::map<std::string, std::set<std::string>> owners;  // bot text -> dialogue ids
  std::map<std::string, std::set<std::string>> user_texts;
  for (const auto& [id, d] : dialogues) {
    for (const auto& n : d.graph.nodes()) {
      for (const auto& text : n.texts) {
        if (n.kind == dialogue::NodeKind::bot) owners[text].insert(id);
        if (n.kind == dialogue::NodeKind::user) user_texts[id].insert(text);
      }
    }
  }
  std::map<std::string, std::vector<std::string>> foreign;
  for (const auto& [id, own] : user_texts) {
    std::set<std::string> pool;
    for (const auto& [other, texts] : user_texts) {
      if (other == id) continue;
      for (const auto& text : texts) {
        if (!own.count(text)) pool.insert(text);
      }
    }
    foreign[id].assign(pool.begin(), pool.end());
  }
  tensor::Rng rng(t.corpus_seed + 9);
  for (auto& ex : out) {
    if (ex.label != 1) continue;
    const auto it = owners.find(ex.previous);
    if (it == owners.end() || it->second.size() != 1) continue;
    const auto& pool = foreign[*it->second.begin()];
    if (!pool.empty() && rng.bernoulli(t.switch_foreign_share)) ex.message = pool[rng.below(pool.size())];
  }
  return out;
}

std::string format_transitions(const std::vector<dialogue::Transition>& ts) {
  std::ostringstream out;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    for (const auto& s : ts[i].steps) out << i << '\t' << s.class_id << '\t' << s.utterance << '\n';
  }
  return out.str();
}

void write_compiled(const std::filesystem::path& models, const std::map<std::string, CompiledDialogue>& dialogues) {
  for (const auto& [id, d] : dialogues) {
    const auto dir = models / id;
    std::filesystem::create_directories(dir);
    write_text(dir / "inventory.tsv", d.inventory.to_tsv());
    write_text(dir / "mask.tsv", d.masks.to_tsv());
    write_text(dir / "transitions.tsv", format_transitions(d.transitions));
  }
}

json train_all(const EngineConfig& cfg, const Assets& assets, const Progress& progress) {
  auto say = [&](const std::string& s) {
    if (progress) progress(s);
  };
  const auto& t = cfg.training;
  const auto t_all = std::chrono::steady_clock::now();
  json report;
  std::filesystem::create_directories(cfg.models);
  write_compiled(cfg.models, assets.dialogues);

  say("corpora");
  const Corpora corpora = make_corpora(t);
  const auto [nlu_train, nlu_test] = synth::split_corpus(corpora.nlu, 0.9, t.corpus_seed + 3);

  say("intent classifier");
  auto intent = nlu::CnnClassifier::train(nlu_train.intents, t.intent);
  report["intent"] = {{"train", intent.accuracy(nlu_train.intents)}, {"test", intent.accuracy(nlu_test.intents)}};

  say("entity tagger");
  auto entity = nlu::EntityTagger::train(nlu_train.entities, t.entity, synth::nlu_entity_types());
  {
    std::size_t right = 0, total = 0;
    for (const auto& s : nlu_test.entities) {
      const auto tags = entity.tag(s.tokens);
      for (std::size_t k = 0; k < tags.size(); ++k) right += tags[k] == s.tags[k];
      total += tags.size();
    }
    report["entity"] = {{"test_token_accuracy", total ? static_cast<double>(right) / total : 0.0}};
  }

  say("dialogue acts");
  auto acts = nlu::CnnClassifier::train(corpora.dialogue_acts, t.dialogue_act);
  report["dialogue_act"] = {{"train", acts.accuracy(corpora.dialogue_acts)}};

  say("sentiment");
  auto sentiment = nlu::SentimentModel::train(corpora.reviews, t.sentiment);
  std::vector<nlu::LabeledText> review_rows;
  for (const auto& r : corpora.reviews) review_rows.push_back({r.text, std::to_string(r.label)});
  auto sentiment_cnn = nlu::CnnClassifier::train(review_rows, t.sentiment_cnn);
  report["sentiment"] = {{"train", sentiment.accuracy(corpora.reviews)},
                         {"cnn_train", sentiment_cnn.accuracy(review_rows)}};

  nlu::Nlu pipeline(std::move(intent), std::move(entity), std::move(acts), std::move(sentiment));
  pipeline.save(cfg.models / kNluDir);
  sentiment_cnn.save(cfg.models / kNluDir / kSentimentCnnDir);

  say("topic-switch detector");
  auto switch_data = make_switch_corpus(assets.dialogues, corpora.nlu.intents, t);
  std::vector<topicswitch::SwitchExample> sw_train, sw_test;
  for (std::size_t i = 0; i < switch_data.size(); ++i) (i % 10 == 9 ? sw_test : sw_train).push_back(switch_data[i]);
  auto detector_cfg = t.detector;
  detector_cfg.threshold = cfg.switch_threshold;
  auto detector = topicswitch::SwitchModel::train(sw_train, detector_cfg);
  detector.save(cfg.models / kSwitchDir);
  report["switch"] = {{"examples", switch_data.size()},
                      {"train", detector.accuracy(sw_train)},
                      {"test", detector.accuracy(sw_test)}};

  // HCN models see the frozen featurizers as they will be loaded.
  const auto act_model = nlu::CnnClassifier::load(cfg.models / kNluDir / "dialogue_act");
  const auto sent_model = nlu::CnnClassifier::load(cfg.models / kNluDir / kSentimentCnnDir);
  const hcn::FrozenFeaturizers frozen{&sent_model, &act_model};
  for (const auto& [id, d] : assets.dialogues) {
    say("dialogue " + id);
    const auto t0 = std::chrono::steady_clock::now();
    hcn::HcnConfig hc = t.hcn;
    hcn::ModelFactory make = [&](const std::vector<dialogue::Transition>& train) {
      std::vector<std::string> utterances;
      for (const auto& tr : train) {
        for (const auto& s : tr.steps) utterances.push_back(s.utterance);
      }
      return hcn::HcnModel(id, d.inventory, d.masks, utterances, hc, frozen);
    };
    json entry;
    std::size_t epochs = hc.max_epochs;
    if (d.transitions.size() >= 2 * hc.folds) {
      auto sel = hcn::cv_select_epochs(make, d.transitions, hc.folds, hc.max_epochs, hc.train.seed);
      epochs = sel.epochs;
      entry["cv_epochs"] = sel.epochs;
      entry["cv_accuracy"] = sel.mean_curve[epochs - 1];
    }
    epochs = std::min(std::max(epochs, t.hcn_min_epochs), hc.max_epochs);
    auto model = hcn::train_epochs(make, d.transitions, epochs);
    model.save(cfg.models / id);
    entry["transitions"] = d.transitions.size();
    entry["epochs"] = epochs;
    entry["train_accuracy"] = hcn::turn_accuracy(model, d.transitions);
    entry["seconds"] = seconds_since(t0);
    report["dialogues"][id] = entry;
  }
  report["seconds"] = seconds_since(t_all);
  write_text(cfg.models / "report.json", report.dump(2) + "\n");
  return report;
}

std::unique_ptr<Models> load_models(const std::filesystem::path& dir,
                                    const std::map<std::string, CompiledDialogue>& dialogues) {
  if (!std::filesystem::is_directory(dir)) throw ConfigError("model directory " + dir.string() + " does not exist");
  auto m = std::make_unique<Models>();
  m->nlu = std::make_unique<nlu::Nlu>(nlu::Nlu::load(dir / kNluDir));
  const auto cnn_dir = dir / kNluDir / kSentimentCnnDir;
  if (!std::filesystem::exists(cnn_dir / "model.bin")) throw ConfigError("missing sentiment CNN in " + cnn_dir.string());
  m->sentiment_cnn = std::make_unique<nlu::CnnClassifier>(nlu::CnnClassifier::load(cnn_dir));
  if (!std::filesystem::exists(dir / kSwitchDir / "model.bin")) {
    throw ConfigError("missing topic-switch model in " + (dir / kSwitchDir).string());
  }
  m->detector = std::make_unique<topicswitch::SwitchModel>(topicswitch::SwitchModel::load(dir / kSwitchDir));
  const hcn::FrozenFeaturizers frozen{m->sentiment_cnn.get(), &m->nlu->dialogue_act_model()};
  for (const auto& [id, d] : dialogues) {
    if (!std::filesystem::exists(dir / id / "model.bin")) throw ConfigError("missing model for dialogue " + id);
    auto model = hcn::HcnModel::load(dir / id, frozen);
    if (model.inventory().to_tsv() != d.inventory.to_tsv() || !(model.masks() == d.masks)) {
      throw ConfigError("model for dialogue " + id + " was trained on a different graph; run train-all");
    }
    m->hcn.emplace(id, std::move(model));
  }
  return m;
}

}  // namespace topicflow::engine
