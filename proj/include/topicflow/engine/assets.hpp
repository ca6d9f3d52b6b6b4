#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "topicflow/dialogue/dialogue.hpp"
#include "topicflow/dialogue/hooks.hpp"
#include "topicflow/engine/config.hpp"
#include "topicflow/engine/paraphrase.hpp"
#include "topicflow/topic/content.hpp"
#include "topicflow/topic/graph.hpp"

namespace topicflow::engine {

struct CompiledDialogue {
  dialogue::DialogueGraph graph;
  dialogue::Inventory inventory;
  dialogue::ActionMaskTable masks;
  std::vector<dialogue::Transition> transitions;
};

CompiledDialogue compile_dialogue(dialogue::DialogueGraph g);
/// Every *.yaml / *.yml file in `dir`, keyed by dialogue id.
std::map<std::string, CompiledDialogue> load_dialogues(const std::filesystem::path& dir);

/// "entity<TAB>attribute<TAB>value" facts; entity lookup ignores case.
class KnowledgeBase {
 public:
  static KnowledgeBase parse(const std::string& text, const std::string& source);
  static KnowledgeBase load(const std::filesystem::path& path);
  void add(const std::string& entity, const std::string& attribute, const std::string& value);
  std::optional<std::string> get(const std::string& entity, const std::string& attribute) const;
  std::size_t size() const { return facts_.size(); }

 private:
  std::map<std::string, std::map<std::string, std::string>> facts_;
};

constexpr double kFamousFans = 1'000'000;

/// Hooks used by the bundled dialogues: remember_name, remember_hobby and
/// writer_popularity functions, {user_name} and {focus} text actions, focus
/// requirements for movie_opinion and writer_popularity, content hooks.
/// `kb` and `content` must outlive the registry.
void register_demo_hooks(dialogue::HookRegistry& hooks, const KnowledgeBase& kb, const topic::ContentStore& content,
                         const std::map<std::string, std::string>& content_dialogues);

/// Best-effort name from "my name is X", "call me X", "I am X" or a lone
/// capitalized word. Empty when nothing looks like a name.
std::string extract_name(const std::string& utterance);

/// Everything the engine reads from the data directories.
struct Assets {
  std::map<std::string, CompiledDialogue> dialogues;
  topic::TopicGraph topics;
  std::unique_ptr<topic::ContentStore> content;
  std::unique_ptr<KnowledgeBase> kb;
  Paraphraser paraphraser;
  dialogue::HookRegistry hooks;
};

/// Loads and cross-checks data: topic graph against the dialogue ids, every
/// referenced hook registered, initial dialogues present.
std::unique_ptr<Assets> load_assets(const EngineConfig& cfg);

}  // namespace topicflow::engine
