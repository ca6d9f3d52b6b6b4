#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "topicflow/engine/assets.hpp"
#include "topicflow/engine/config.hpp"
#include "topicflow/hcn/model.hpp"
#include "topicflow/nlu/pipeline.hpp"
#include "topicflow/synth/corpora.hpp"
#include "topicflow/topicswitch/switch.hpp"

namespace topicflow::engine {

inline const std::string kNluDir = "_nlu";
inline const std::string kSwitchDir = "_switch";
inline const std::string kSentimentCnnDir = "sentiment_cnn";

struct Corpora {
  synth::NluCorpus nlu;
  std::vector<nlu::LabeledText> dialogue_acts;
  std::vector<nlu::SentimentText> reviews;
};

/// Synthetic corpora, or the files written by write_corpora when
/// `corpus_dir` is set.
Corpora make_corpora(const TrainingConfig& t);
/// intents.tsv, entities.conll, dialogue_acts.tsv, reviews.tsv.
void write_corpora(const std::filesystem::path& dir, const Corpora& c);

/// Transition-walk switch examples over every dialogue, `switch_rounds`
/// passes with consecutive seeds.
std::vector<topicswitch::SwitchExample> make_switch_corpus(const std::map<std::string, CompiledDialogue>& dialogues,
                                                           const std::vector<nlu::LabeledText>& intents,
                                                           const TrainingConfig& t);

/// inventory.tsv, mask.tsv and transitions.tsv per dialogue under `models`.
void write_compiled(const std::filesystem::path& models, const std::map<std::string, CompiledDialogue>& dialogues);
std::string format_transitions(const std::vector<dialogue::Transition>& ts);

using Progress = std::function<void(const std::string&)>;

/// Trains every model into cfg.models and returns a report (accuracies,
/// epochs, seconds). Also writes report.json there.
nlohmann::json train_all(const EngineConfig& cfg, const Assets& assets, const Progress& progress = {});

/// Trained models, loaded read-only.
struct Models {
  std::unique_ptr<nlu::Nlu> nlu;
  std::unique_ptr<nlu::CnnClassifier> sentiment_cnn;
  std::unique_ptr<topicswitch::SwitchModel> detector;
  std::map<std::string, hcn::HcnModel> hcn;
};

/// Throws ConfigError when a model is missing or was trained on a different
/// version of its dialogue.
std::unique_ptr<Models> load_models(const std::filesystem::path& dir,
                                    const std::map<std::string, CompiledDialogue>& dialogues);

}  // namespace topicflow::engine
