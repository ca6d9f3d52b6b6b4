#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "topicflow/context/store.hpp"
#include "topicflow/engine/assets.hpp"
#include "topicflow/engine/config.hpp"
#include "topicflow/engine/training.hpp"
#include "topicflow/hcn/model.hpp"

namespace topicflow::engine {

struct ActionScore {
  std::size_t class_id = 0;
  std::string node;
  double probability = 0.0;
};

/// One class spoken during a turn.
struct ActionStep {
  std::string dialogue;
  std::size_t class_id = 0;
  std::string node;
  bool entered = false;  // first class of a freshly started dialogue
};

struct TurnResult {
  std::string session_id;
  std::size_t turn = 0;
  std::string response;
  std::string topic;
  std::string dialogue;
  bool switched = false;
  double switch_probability = 0.0;
  std::optional<std::size_t> action_class;  // last class spoken this turn
  std::string action_node;
  std::vector<ActionScore> top_k;  // of the prediction behind action_class
  std::vector<ActionStep> actions;
  nlu::Annotation annotation;
  std::optional<std::string> paraphrase;
  bool durable = true;
};

nlohmann::json to_json(const TurnResult& r);

/// What the dialogue manager carries from one turn to the next; stored as
/// JSON in Context::dm_state.
struct SessionState {
  std::string topic;
  std::string dialogue;
  std::string focus_entity;
  std::string focus_type;
  hcn::DmState dm;
  std::size_t trivia_run = 0;  // consecutive trivia dialogues started
  std::string last_prompt;     // last bot text, what the switch detector compares against
};

std::string encode_state(const SessionState& s);
SessionState decode_state(const std::string& blob);

class Engine {
 public:
  /// Loads data and models; throws ConfigError / ValidationError.
  Engine(EngineConfig cfg, std::unique_ptr<context::ContextStore> store = nullptr);
  Engine(EngineConfig cfg, std::unique_ptr<Assets> assets, std::unique_ptr<Models> models,
         std::unique_ptr<context::ContextStore> store);

  TurnResult respond(const std::string& session_id, const std::string& user_id, const std::string& text);
  nlu::Annotation annotate(const std::string& text) const { return models_->nlu->annotate(text); }
  std::vector<context::Context> history(const std::string& session_id, std::size_t limit = 100) const {
    return store_->load_history(session_id, limit);
  }

  const EngineConfig& config() const { return cfg_; }
  const Assets& assets() const { return *assets_; }
  const Models& models() const { return *models_; }
  context::ContextStore& store() { return *store_; }

 private:
  struct Turn;
  bool eligible(Turn& t, const std::string& dialogue_id);
  bool enter(Turn& t, const std::string& topic, const std::string& dialogue_id);
  bool enter_from_topic(Turn& t, const std::string& topic);
  void enter_recommendation(Turn& t);
  bool advance(Turn& t, const std::string& utterance);
  void chain(Turn& t);
  std::mutex& session_mutex(const std::string& session_id);

  EngineConfig cfg_;
  std::unique_ptr<Assets> assets_;
  std::unique_ptr<Models> models_;
  std::unique_ptr<context::ContextStore> store_;
  std::mutex sessions_mutex_;
  std::map<std::string, std::unique_ptr<std::mutex>> session_mutexes_;
};

/// Per-turn seed from the engine seed, session id and turn index.
std::uint64_t turn_seed(std::uint64_t seed, const std::string& session_id, std::size_t turn);

std::unique_ptr<context::ContextStore> make_store(const EngineConfig& cfg);

}  // namespace topicflow::engine

namespace topicflow::engine {

/// Two transcript lines, "> message" then "< response".
std::string format_exchange(const std::string& message, const std::string& response);

}  // namespace topicflow::engine
