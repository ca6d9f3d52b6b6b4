#include "topicflow/dialogue/topic_file.hpp"

#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "topicflow/error.hpp"

namespace topicflow::dialogue {

TopicKind parse_topic_kind(const std::string& s) {
  if (s == "normal") return TopicKind::normal;
  if (s == "generic_entity") return TopicKind::generic_entity;
  if (s == "recommendation") return TopicKind::recommendation;
  if (s == "detached") return TopicKind::detached;
  throw ValidationError("unknown topic kind '" + s + "'");
}

const char* topic_kind_name(TopicKind k) {
  switch (k) {
    case TopicKind::normal: return "normal";
    case TopicKind::generic_entity: return "generic_entity";
    case TopicKind::recommendation: return "recommendation";
    case TopicKind::detached: return "detached";
  }
  return "?";
}

namespace {

std::vector<std::string> list(const YAML::Node& n, const std::string& source, const char* key) {
  std::vector<std::string> out;
  if (!n || n.IsNull()) return out;
  if (!n.IsSequence()) throw ParseError(source, n.Mark().line + 1, std::string("'") + key + "' must be a list");
  for (const auto& x : n) out.push_back(x.as<std::string>());
  return out;
}

}  // namespace

TopicNodeSpec parse_topic_text(const std::string& yaml, const std::string& source) {
  TopicNodeSpec t;
  try {
    YAML::Node root = YAML::Load(yaml);
    if (!root.IsMap()) throw ParseError(source, 1, "topic file must be a mapping");
    if (!root["name"]) throw ParseError(source, 1, "missing 'name'");
    t.name = root["name"].as<std::string>();
    t.parents = list(root["parents"], source, "parents");
    t.dialogues = list(root["dialogues"], source, "dialogues");
    t.entity_types = list(root["entity_types"], source, "entity_types");
    t.intents = list(root["intents"], source, "intents");
    if (root["kind"]) {
      try {
        t.kind = parse_topic_kind(root["kind"].as<std::string>());
      } catch (const ValidationError& e) {
        throw ParseError(source, root["kind"].Mark().line + 1, e.what());
      }
    }
  } catch (const YAML::Exception& e) {
    throw ParseError(source, e.mark.line + 1, e.msg);
  }
  return t;
}

TopicNodeSpec parse_topic_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read topic file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_topic_text(ss.str(), path.string());
}

}  // namespace topicflow::dialogue
