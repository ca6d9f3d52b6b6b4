#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <regex>
#include <string>
#include <utility>
#include <vector>

#include "topicflow/dialogue/dialogue.hpp"
#include "topicflow/eval/metrics.hpp"
#include "topicflow/hcn/model.hpp"

namespace topicflow::eval {

/// One dialogue of the bAbI dialog format: numbered "n user<TAB>bot" turns
/// and tab-less "n subject relation object" knowledge-base facts.
struct RawDialogue {
  std::vector<std::pair<std::string, std::string>> turns;
  std::vector<std::vector<std::string>> facts;
  std::size_t line = 0;  // first line in the source file
};

std::vector<RawDialogue> parse_babi(const std::string& text, const std::string& source);

/// Response normalization. Rule lines (tab separated, '#' comments):
///   relation  <R_name>  <placeholder>   objects of KB facts with this relation
///   name      <placeholder>             subjects of KB facts
///   api_call  <R_a> <R_b> ...           positional relations of api_call args
///   regex     <pattern>  <replacement>  applied last, in order
class Normalizer {
 public:
  static Normalizer parse(const std::string& text, const std::string& source);
  static Normalizer load(const std::filesystem::path& path);

  /// Collects entity values from KB facts and api_call arguments.
  void learn(const std::vector<RawDialogue>& dialogues);
  std::string normalize(const std::string& response) const;
  std::size_t lexicon_size() const { return lexicon_.size(); }

 private:
  std::vector<std::pair<std::string, std::string>> relations_;  // in priority order
  std::string name_placeholder_;
  std::vector<std::string> api_slots_;
  std::vector<std::pair<std::regex, std::string>> regexes_;
  std::map<std::string, std::string> lexicon_;  // value -> placeholder
};

struct EvalDialogue {
  std::vector<std::pair<std::string, std::size_t>> turns;  // user message, gold class
  std::vector<std::string> raw_responses;
};

struct BabiData {
  std::vector<EvalDialogue> train, valid, test;
  std::vector<std::string> classes;  // sorted normalized responses over all splits
};

constexpr const char* kBabi6Train = "dialog-babi-task6-dstc2-trn.txt";
constexpr const char* kBabi6Valid = "dialog-babi-task6-dstc2-dev.txt";
constexpr const char* kBabi6Test = "dialog-babi-task6-dstc2-tst.txt";

BabiData build_babi(const std::vector<RawDialogue>& train, const std::vector<RawDialogue>& valid,
                    const std::vector<RawDialogue>& test, Normalizer normalizer);
/// Reads the three official task 6 files from `dir`.
BabiData load_babi6(const std::filesystem::path& dir, const Normalizer& normalizer);

/// Every class permitted in every state.
dialogue::Inventory babi_inventory(const BabiData& data);
dialogue::ActionMaskTable babi_masks(std::size_t classes);
std::vector<dialogue::Transition> babi_transitions(const std::vector<EvalDialogue>& ds);

struct BabiRun {
  std::size_t epochs = 0;             // chosen on the validation set
  std::vector<double> valid_curve;    // turn accuracy after each epoch
  MetricsReport valid;
  MetricsReport test;
  double seconds = 0.0;
};

/// Trains up to cfg.max_epochs epochs on train, keeps the epoch with the best
/// validation turn accuracy (ties: fewer), and reports on valid and test.
BabiRun run_babi6(const BabiData& data, const hcn::HcnConfig& cfg,
                  const std::function<void(std::size_t, double)>& on_epoch = {});

}  // namespace topicflow::eval
