#include "topicflow/topic/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "topicflow/error.hpp"

namespace topicflow::topic {

namespace {

void find_cycle(const TopicGraph& g) {
  std::map<std::string, int> state;  // 0 new, 1 on stack, 2 done
  std::vector<std::string> stack;
  std::function<void(const std::string&)> visit = [&](const std::string& n) {
    state[n] = 1;
    stack.push_back(n);
    for (const auto& p : g.node(n).parents) {
      if (state[p] == 1) {
        auto it = std::find(stack.begin(), stack.end(), p);
        std::string cycle;
        for (; it != stack.end(); ++it) cycle += *it + " -> ";
        throw ValidationError("topic graph: cyclic parents " + cycle + p);
      }
      if (state[p] == 0) visit(p);
    }
    stack.pop_back();
    state[n] = 2;
  };
  for (const auto& n : g.nodes()) {
    if (state[n.name] == 0) visit(n.name);
  }
}

}  // namespace

TopicGraph::TopicGraph(std::vector<TopicNode> nodes, const std::set<std::string>* known_dialogues)
    : nodes_(std::move(nodes)) {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].name.empty()) throw ValidationError("topic graph: node without a name");
    if (!index_.emplace(nodes_[i].name, i).second) {
      throw ValidationError("topic graph: duplicate node " + nodes_[i].name);
    }
  }
  for (const auto& n : nodes_) {
    for (const auto& p : n.parents) {
      if (!contains(p)) throw ValidationError("topic graph: " + n.name + " names unknown parent " + p);
      if (node(p).kind == TopicKind::detached) {
        throw ValidationError("topic graph: " + n.name + " points to detached node " + p);
      }
    }
    if ((n.kind == TopicKind::detached || n.kind == TopicKind::generic_entity) && !n.parents.empty()) {
      throw ValidationError("topic graph: " + std::string(dialogue::topic_kind_name(n.kind)) + " node " + n.name +
                            " cannot have parents");
    }
    if (known_dialogues) {
      for (const auto& d : n.dialogues) {
        if (!known_dialogues->count(d)) throw ValidationError("topic graph: " + n.name + " names unknown dialogue " + d);
      }
    }
    for (const auto& t : n.entity_types) {
      auto [it, fresh] = by_entity_.emplace(t, n.name);
      if (!fresh) throw ValidationError("topic graph: entity type " + t + " bound to " + it->second + " and " + n.name);
    }
    for (const auto& t : n.intents) {
      auto [it, fresh] = by_intent_.emplace(t, n.name);
      if (!fresh) throw ValidationError("topic graph: intent " + t + " bound to " + it->second + " and " + n.name);
    }
  }
  find_cycle(*this);
}

const TopicNode& TopicGraph::node(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ValidationError("topic graph: no node " + name);
  return nodes_[it->second];
}

std::optional<std::string> TopicGraph::find_kind(TopicKind k) const {
  for (const auto& n : nodes_) {
    if (n.kind == k) return n.name;
  }
  return std::nullopt;
}

std::optional<std::string> TopicGraph::owner(const std::string& dialogue_id) const {
  for (const auto& n : nodes_) {
    if (std::find(n.dialogues.begin(), n.dialogues.end(), dialogue_id) != n.dialogues.end()) return n.name;
  }
  return std::nullopt;
}

TopicGraph load_topic_graph(const std::filesystem::path& dir, const std::set<std::string>* known_dialogues) {
  if (!std::filesystem::is_directory(dir)) throw ConfigError("topic directory " + dir.string() + " does not exist");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const auto ext = e.path().extension();
    if (e.is_regular_file() && (ext == ".yaml" || ext == ".yml")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<TopicNode> nodes;
  for (const auto& f : files) nodes.push_back(dialogue::parse_topic_file(f));
  return TopicGraph(std::move(nodes), known_dialogues);
}

std::vector<std::pair<std::string, std::size_t>> reachable_nodes(const TopicGraph& g, const std::string& start) {
  g.node(start);
  std::vector<std::pair<std::string, std::size_t>> out;
  std::set<std::string> seen{start};
  std::deque<std::pair<std::string, std::size_t>> q{{start, 0}};
  while (!q.empty()) {
    auto cur = q.front();
    q.pop_front();
    out.push_back(cur);
    for (const auto& p : g.node(cur.first).parents) {
      if (seen.insert(p).second) q.emplace_back(p, cur.second + 1);
    }
  }
  return out;
}

namespace {

struct Candidate {
  std::string node;
  double weight;
  std::vector<std::string> dialogues;
};

std::vector<Candidate> candidates(const TopicGraph& g, const std::string& start, const Eligible& eligible,
                                  double decay) {
  if (!(decay > 0.0)) throw ValidationError("topic selection: decay must be positive");
  std::vector<Candidate> out;
  for (const auto& [name, dist] : reachable_nodes(g, start)) {
    Candidate c{name, std::pow(decay, static_cast<double>(dist)), {}};
    for (const auto& d : g.node(name).dialogues) {
      if (eligible(d)) c.dialogues.push_back(d);
    }
    if (!c.dialogues.empty()) out.push_back(std::move(c));
  }
  return out;
}

}  // namespace

std::map<std::string, double> node_probabilities(const TopicGraph& g, const std::string& start, const Eligible& eligible,
                                                 double decay) {
  auto cs = candidates(g, start, eligible, decay);
  double total = 0.0;
  for (const auto& c : cs) total += c.weight;
  std::map<std::string, double> out;
  for (const auto& c : cs) out[c.node] = c.weight / total;
  return out;
}

std::optional<std::string> select_subdialogue(const TopicGraph& g, const std::string& start, const Eligible& eligible,
                                              tensor::Rng& rng, double decay) {
  auto cs = candidates(g, start, eligible, decay);
  if (cs.empty()) return std::nullopt;
  double total = 0.0;
  for (const auto& c : cs) total += c.weight;
  double u = rng.uniform() * total;
  std::size_t pick = cs.size() - 1;
  for (std::size_t i = 0; i < cs.size(); ++i) {
    if (u < cs[i].weight) {
      pick = i;
      break;
    }
    u -= cs[i].weight;
  }
  const auto& ds = cs[pick].dialogues;
  return ds[rng.below(ds.size())];
}

TopicResolution resolve_topic(const TopicGraph& g, const std::vector<nlu::EntitySpan>& entities,
                              const std::string& intent) {
  for (const auto& e : entities) {
    auto it = g.entity_bindings().find(e.type);
    if (it != g.entity_bindings().end()) return {it->second, e.text, e.type};
  }
  auto it = g.intent_bindings().find(intent);
  if (it != g.intent_bindings().end()) {
    TopicResolution r{it->second, "", ""};
    if (!entities.empty()) {
      r.focus_entity = entities.front().text;
      r.focus_type = entities.front().type;
    }
    return r;
  }
  if (!entities.empty()) {
    return {g.find_kind(TopicKind::generic_entity).value_or(""), entities.front().text, entities.front().type};
  }
  return {g.find_kind(TopicKind::recommendation).value_or(""), "", ""};
}

}  // namespace topicflow::topic
