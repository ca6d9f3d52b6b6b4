#include "topicflow/context/store.hpp"

#include <chrono>
#include <sstream>

#include "topicflow/error.hpp"

namespace topicflow::context {

using nlohmann::json;

json to_json(const Context& c) {
  return {{"session_id", c.session_id},
          {"user_id", c.user_id},
          {"turn", c.turn},
          {"utterance", c.utterance},
          {"annotation", nlu::to_json(c.annotation)},
          {"topic_node", c.topic_node},
          {"dialogue_id", c.dialogue_id},
          {"dm_state", c.dm_state},
          {"executed_dialogues", c.executed_dialogues},
          {"response", c.response},
          {"session_attributes", attributes_to_json(c.session)},
          {"timestamp", c.timestamp}};
}

Context context_from_json(const json& j) {
  Context c;
  c.session_id = j.at("session_id").get<std::string>();
  c.user_id = j.at("user_id").get<std::string>();
  c.turn = j.at("turn").get<std::size_t>();
  c.utterance = j.at("utterance").get<std::string>();
  c.annotation = nlu::annotation_from_json(j.at("annotation"));
  c.topic_node = j.at("topic_node").get<std::string>();
  c.dialogue_id = j.at("dialogue_id").get<std::string>();
  c.dm_state = j.at("dm_state").get<std::string>();
  c.executed_dialogues = j.at("executed_dialogues").get<std::vector<std::string>>();
  c.response = j.at("response").get<std::string>();
  c.session = attributes_from_json(j.at("session_attributes"));
  c.timestamp = j.at("timestamp").get<std::int64_t>();
  return c;
}

Context ContextStore::begin_turn(const std::string& session_id, const std::string& user_id,
                                 const std::string& utterance) const {
  if (session_id.empty() || user_id.empty()) throw ValidationError("session and user ids must be non-empty");
  Context c;
  c.session_id = session_id;
  c.user_id = user_id;
  c.utterance = utterance;
  c.history = load_history(session_id, kHistoryLimit);
  if (!c.history.empty()) {
    c.turn = c.history.front().turn + 1;
    c.session = c.history.front().session;
  }
  c.timestamp = clock_ ? clock_()
                       : std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::system_clock::now().time_since_epoch())
                             .count();
  return c;
}

void ContextStore::commit_turn(const Context& c) {
  if (c.response.empty()) throw ValidationError("commit_turn: context has no response");
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(c.session_id);
  if (it != sessions_.end() && !it->second.empty() && c.turn <= it->second.back().turn) {
    throw ValidationError("commit_turn: turn " + std::to_string(c.turn) + " of session " + c.session_id +
                          " is not after turn " + std::to_string(it->second.back().turn));
  }
  persist_context(to_json(c));
  index_context(c);
}

void ContextStore::index_context(Context c) {
  c.history.clear();
  sessions_[c.session_id].push_back(std::move(c));
}

std::vector<Context> ContextStore::load_history(const std::string& session_id, std::size_t limit) const {
  std::lock_guard lock(mutex_);
  std::vector<Context> out;
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) return out;
  const auto& turns = it->second;
  for (auto r = turns.rbegin(); r != turns.rend() && out.size() < limit; ++r) out.push_back(*r);
  return out;
}

std::optional<AttributeValue> ContextStore::user_attribute(const std::string& user_id, const std::string& key) const {
  std::lock_guard lock(mutex_);
  auto u = users_.find(user_id);
  if (u == users_.end()) return std::nullopt;
  auto it = u->second.find(key);
  if (it == u->second.end()) return std::nullopt;
  return it->second;
}

AttributeMap ContextStore::user_attributes(const std::string& user_id) const {
  std::lock_guard lock(mutex_);
  auto u = users_.find(user_id);
  return u == users_.end() ? AttributeMap{} : u->second;
}

void ContextStore::set_user_attribute(const std::string& user_id, const std::string& key, const AttributeValue& value) {
  if (user_id.empty()) throw ValidationError("user id must be non-empty");
  std::lock_guard lock(mutex_);
  persist_user({{"user_id", user_id}, {"key", key}, {"value", attribute_to_json(value)}});
  index_user(user_id, key, value);
}

void ContextStore::index_user(const std::string& user_id, const std::string& key, const AttributeValue& value) {
  users_[user_id][key] = value;
}

namespace {

template <typename F>
void replay(const std::filesystem::path& path, F&& apply) {
  std::ifstream in(path);
  if (!in) return;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (line.empty()) continue;
    try {
      apply(json::parse(line));
    } catch (const json::exception& e) {
      throw ParseError(path.string(), no, e.what());
    }
  }
}

}  // namespace

FileContextStore::FileContextStore(const std::filesystem::path& dir) : dir_(dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw ConfigError("cannot create context directory " + dir_.string() + ": " + ec.message());
  replay(dir_ / "contexts.jsonl", [&](const json& j) { index_context(context_from_json(j)); });
  replay(dir_ / "users.jsonl", [&](const json& j) {
    index_user(j.at("user_id").get<std::string>(), j.at("key").get<std::string>(), attribute_from_json(j.at("value")));
  });
}

void FileContextStore::append(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw StorageError("cannot open " + path.string() + " for append");
  out << j.dump() << '\n';
  out.flush();
  if (!out) throw StorageError("write to " + path.string() + " failed");
}

void FileContextStore::persist_context(const json& j) { append(dir_ / "contexts.jsonl", j); }

void FileContextStore::persist_user(const json& j) { append(dir_ / "users.jsonl", j); }

}  // namespace topicflow::context
