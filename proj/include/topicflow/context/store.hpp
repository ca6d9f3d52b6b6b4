#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "topicflow/nlu/pipeline.hpp"
#include "topicflow/value.hpp"

namespace topicflow::context {

constexpr std::size_t kHistoryLimit = 20;

/// Append failed; the turn itself can still be answered.
class StorageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything known about one dialogue turn.
struct Context {
  std::string session_id;
  std::string user_id;
  std::size_t turn = 0;
  std::string utterance;
  nlu::Annotation annotation;
  std::string topic_node;
  std::string dialogue_id;
  std::string dm_state;  // opaque, written by the engine
  std::vector<std::string> executed_dialogues;
  std::string response;
  AttributeMap session;
  std::int64_t timestamp = 0;  // ms since epoch

  std::vector<Context> history;  // newest first, not persisted
};

nlohmann::json to_json(const Context& c);
Context context_from_json(const nlohmann::json& j);

class ContextStore {
 public:
  virtual ~ContextStore() = default;

  /// Links up to kHistoryLimit previous turns and carries over the session
  /// attributes of the latest one.
  Context begin_turn(const std::string& session_id, const std::string& user_id, const std::string& utterance) const;
  /// Requires a response and a turn index above the last committed one.
  void commit_turn(const Context& c);
  /// Most recent `limit` turns, newest first.
  std::vector<Context> load_history(const std::string& session_id, std::size_t limit) const;

  std::optional<AttributeValue> user_attribute(const std::string& user_id, const std::string& key) const;
  AttributeMap user_attributes(const std::string& user_id) const;
  void set_user_attribute(const std::string& user_id, const std::string& key, const AttributeValue& value);

  void set_clock(std::function<std::int64_t()> clock) { clock_ = std::move(clock); }

 protected:
  // Called with the lock held, before the in-memory index changes.
  virtual void persist_context(const nlohmann::json&) {}
  virtual void persist_user(const nlohmann::json&) {}

  void index_context(Context c);
  void index_user(const std::string& user_id, const std::string& key, const AttributeValue& value);

  mutable std::mutex mutex_;

 private:
  std::map<std::string, std::vector<Context>> sessions_;  // oldest first
  std::map<std::string, AttributeMap> users_;
  std::function<std::int64_t()> clock_;
};

class MemoryContextStore : public ContextStore {};

/// contexts.jsonl and users.jsonl under one directory, one JSON record per
/// line, replayed into memory on open.
class FileContextStore : public ContextStore {
 public:
  explicit FileContextStore(const std::filesystem::path& dir);
  const std::filesystem::path& dir() const { return dir_; }

 protected:
  void persist_context(const nlohmann::json& j) override;
  void persist_user(const nlohmann::json& j) override;

 private:
  void append(const std::filesystem::path& path, const nlohmann::json& j);

  std::filesystem::path dir_;
};

}  // namespace topicflow::context
