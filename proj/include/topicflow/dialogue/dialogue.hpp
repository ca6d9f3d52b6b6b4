#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace topicflow::dialogue {

enum class NodeKind { bot, user, function };

NodeKind parse_node_kind(const std::string& s);
const char* node_kind_name(NodeKind k);

struct DialogueNode {
  std::string id;
  NodeKind kind = NodeKind::bot;
  std::vector<std::string> texts;  // Bot/User only
  std::string hook;                // Function only
  std::vector<std::string> next;
  bool operator==(const DialogueNode&) const = default;
};

/// Authored sub-dialogue. Nodes are kept in file order; class ids and
/// transition order both follow it.
class DialogueGraph {
 public:
  std::string id;
  std::string start;

  void add(DialogueNode node);
  const std::vector<DialogueNode>& nodes() const { return nodes_; }
  bool contains(const std::string& node_id) const { return index_.count(node_id) > 0; }
  const DialogueNode& node(const std::string& node_id) const;
  std::size_t position(const std::string& node_id) const;
  bool operator==(const DialogueGraph& o) const {
    return id == o.id && start == o.start && nodes_ == o.nodes_;
  }

 private:
  std::vector<DialogueNode> nodes_;
  std::map<std::string, std::size_t> index_;
};

/// Throws ValidationError on any broken invariant (cycle, dangling successor,
/// empty texts, unreachable node, misplaced User node).
void validate(const DialogueGraph& g);

DialogueGraph parse_dialogue_text(const std::string& yaml, const std::string& source);
DialogueGraph parse_dialogue(const std::filesystem::path& path);
std::string serialize_dialogue(const DialogueGraph& g);

/// Names of the `{placeholder}` text actions in a template, in textual order.
std::vector<std::string> placeholders(const std::string& text);

// ---- compilation ----

struct ResponseClass {
  std::size_t id = 0;
  std::string node_id;
  NodeKind kind = NodeKind::bot;
};

/// Response classes are the Bot and Function nodes in file order.
class Inventory {
 public:
  Inventory() = default;
  explicit Inventory(const DialogueGraph& g);
  Inventory(std::vector<ResponseClass> classes);

  std::size_t size() const { return classes_.size(); }
  const ResponseClass& at(std::size_t id) const { return classes_.at(id); }
  const std::vector<ResponseClass>& classes() const { return classes_; }
  bool has_node(const std::string& node_id) const { return by_node_.count(node_id) > 0; }
  std::size_t class_of(const std::string& node_id) const;

  std::string to_tsv() const;
  static Inventory from_tsv(const std::string& text, const std::string& source);

 private:
  std::vector<ResponseClass> classes_;
  std::map<std::string, std::size_t> by_node_;
};

struct TransitionStep {
  std::string utterance;  // empty when the bot speaks without user input
  std::size_t class_id = 0;
  bool operator==(const TransitionStep&) const = default;
};

struct Transition {
  std::string dialogue_id;
  std::vector<TransitionStep> steps;
  bool operator==(const Transition&) const = default;
};

/// All start-to-terminal paths, expanded over User text variants. Bot nodes
/// emit one step each; Function nodes are skipped. Paths are enumerated
/// depth-first in `next` order, and each path's variant combinations follow
/// with the earliest User node varying slowest.
std::vector<Transition> compile_transitions(const DialogueGraph& g, const Inventory& inv);

class ActionMaskTable {
 public:
  ActionMaskTable() = default;
  ActionMaskTable(std::vector<int> start, std::vector<std::vector<int>> rows);

  std::size_t size() const { return start_.size(); }
  const std::vector<int>& start() const { return start_; }
  const std::vector<int>& row(std::size_t class_id) const { return rows_.at(class_id); }
  /// Row for the state after `last`; `last == size()` means no action yet.
  const std::vector<int>& after(std::size_t last) const { return last >= size() ? start_ : row(last); }
  static bool all_zero(const std::vector<int>& m);

  std::string to_tsv() const;
  static ActionMaskTable from_tsv(const std::string& text, const std::string& source);

  bool operator==(const ActionMaskTable&) const = default;

 private:
  std::vector<int> start_;
  std::vector<std::vector<int>> rows_;
};

/// B is permitted after A iff a path A -> (User|Function)* -> B exists with B a
/// Bot node. The start row permits only the start node's class.
ActionMaskTable derive_action_masks(const DialogueGraph& g, const Inventory& inv);

/// Function nodes crossed on the first route (depth-first, `next` order) from
/// class `from` (or from the start when from == inv.size()) to Bot class `to`.
/// Empty when the route crosses no Function node or no route exists.
std::vector<std::string> function_route(const DialogueGraph& g, const Inventory& inv,
                                        std::size_t from, std::size_t to);

}  // namespace topicflow::dialogue
