#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "topicflow/dialogue/topic_file.hpp"
#include "topicflow/nlu/iob.hpp"
#include "topicflow/tensor/rng.hpp"

namespace topicflow::topic {

using dialogue::TopicKind;
using TopicNode = dialogue::TopicNodeSpec;

/// Topic nodes with parent edges pointing from specific to general.
class TopicGraph {
 public:
  TopicGraph() = default;
  /// Validates: unique names, resolvable parents, no cycle, parentless
  /// detached/generic nodes, no parent edge into a detached node, unique
  /// entity-type/intent bindings. `known_dialogues` (when given) must contain
  /// every referenced dialogue id.
  explicit TopicGraph(std::vector<TopicNode> nodes, const std::set<std::string>* known_dialogues = nullptr);

  bool empty() const { return nodes_.empty(); }
  bool contains(const std::string& name) const { return index_.count(name) > 0; }
  const TopicNode& node(const std::string& name) const;
  const std::vector<TopicNode>& nodes() const { return nodes_; }
  /// First node of the kind, if any.
  std::optional<std::string> find_kind(TopicKind k) const;
  const std::map<std::string, std::string>& entity_bindings() const { return by_entity_; }
  const std::map<std::string, std::string>& intent_bindings() const { return by_intent_; }
  /// Topic node owning a dialogue id (first in load order).
  std::optional<std::string> owner(const std::string& dialogue_id) const;

 private:
  std::vector<TopicNode> nodes_;
  std::map<std::string, std::size_t> index_;
  std::map<std::string, std::string> by_entity_;
  std::map<std::string, std::string> by_intent_;
};

/// Every *.yaml / *.yml file in `dir`, sorted by file name.
TopicGraph load_topic_graph(const std::filesystem::path& dir, const std::set<std::string>* known_dialogues = nullptr);

/// BFS over parent edges; start first at distance 0, then by distance.
std::vector<std::pair<std::string, std::size_t>> reachable_nodes(const TopicGraph& g, const std::string& start);

using Eligible = std::function<bool(const std::string& dialogue_id)>;

constexpr double kDefaultDecay = 0.5;

/// Selection probability of each reachable node that has an eligible dialogue.
std::map<std::string, double> node_probabilities(const TopicGraph& g, const std::string& start, const Eligible& eligible,
                                                 double decay = kDefaultDecay);

/// Draws a node by decay^distance among nodes with eligible dialogues, then
/// one of its eligible dialogues uniformly.
std::optional<std::string> select_subdialogue(const TopicGraph& g, const std::string& start, const Eligible& eligible,
                                              tensor::Rng& rng, double decay = kDefaultDecay);

struct TopicResolution {
  std::string node;  // empty when the graph has no suitable node
  std::string focus_entity;
  std::string focus_type;
};

/// Entity-type binding first, then intent binding, then GenericEntity about
/// the first entity, then Recommendation.
TopicResolution resolve_topic(const TopicGraph& g, const std::vector<nlu::EntitySpan>& entities,
                              const std::string& intent);

}  // namespace topicflow::topic
