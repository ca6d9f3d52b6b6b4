#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace topicflow::dialogue {

enum class TopicKind { normal, generic_entity, recommendation, detached };

TopicKind parse_topic_kind(const std::string& s);
const char* topic_kind_name(TopicKind k);

/// One topic-node file. `entity_types` and `intents` bind annotations to the
/// node; both are optional.
struct TopicNodeSpec {
  std::string name;
  std::vector<std::string> parents;
  std::vector<std::string> dialogues;
  TopicKind kind = TopicKind::normal;
  std::vector<std::string> entity_types;
  std::vector<std::string> intents;
};

TopicNodeSpec parse_topic_text(const std::string& yaml, const std::string& source);
TopicNodeSpec parse_topic_file(const std::filesystem::path& path);

}  // namespace topicflow::dialogue
