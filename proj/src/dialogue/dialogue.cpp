#include "topicflow/dialogue/dialogue.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "topicflow/error.hpp"

namespace topicflow::dialogue {

NodeKind parse_node_kind(const std::string& s) {
  std::string k = s;
  std::transform(k.begin(), k.end(), k.begin(), [](unsigned char c) { return std::tolower(c); });
  if (k == "bot") return NodeKind::bot;
  if (k == "user") return NodeKind::user;
  if (k == "function") return NodeKind::function;
  throw ValidationError("unknown node kind '" + s + "'");
}

const char* node_kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::bot: return "Bot";
    case NodeKind::user: return "User";
    case NodeKind::function: return "Function";
  }
  return "?";
}

void DialogueGraph::add(DialogueNode node) {
  if (index_.count(node.id)) throw ValidationError("dialogue " + id + ": duplicate node id " + node.id);
  index_.emplace(node.id, nodes_.size());
  nodes_.push_back(std::move(node));
}

const DialogueNode& DialogueGraph::node(const std::string& node_id) const {
  return nodes_[position(node_id)];
}

std::size_t DialogueGraph::position(const std::string& node_id) const {
  auto it = index_.find(node_id);
  if (it == index_.end()) throw ValidationError("dialogue " + id + ": unknown node " + node_id);
  return it->second;
}

std::vector<std::string> placeholders(const std::string& text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while ((pos = text.find('{', pos)) != std::string::npos) {
    auto close = text.find('}', pos);
    if (close == std::string::npos) break;
    out.push_back(text.substr(pos + 1, close - pos - 1));
    pos = close + 1;
  }
  return out;
}

void validate(const DialogueGraph& g) {
  const std::string where = "dialogue " + g.id + ": ";
  if (g.id.empty()) throw ValidationError("dialogue without id");
  if (g.nodes().empty()) throw ValidationError(where + "no nodes");
  if (!g.contains(g.start)) throw ValidationError(where + "start node '" + g.start + "' does not exist");
  if (g.node(g.start).kind != NodeKind::bot) throw ValidationError(where + "start node must be a Bot node");

  for (const auto& n : g.nodes()) {
    const std::string at = where + "node " + n.id + ": ";
    if (n.id.empty()) throw ValidationError(where + "node with empty id");
    for (const auto& s : n.next) {
      if (!g.contains(s)) throw ValidationError(at + "unknown successor " + s);
    }
    if (std::set<std::string>(n.next.begin(), n.next.end()).size() != n.next.size()) {
      throw ValidationError(at + "repeated successor");
    }
    auto succ_users = std::count_if(n.next.begin(), n.next.end(),
                                    [&](const auto& s) { return g.node(s).kind == NodeKind::user; });
    switch (n.kind) {
      case NodeKind::bot:
        if (n.texts.empty()) throw ValidationError(at + "Bot node without texts");
        if (!n.hook.empty()) throw ValidationError(at + "Bot node cannot carry a hook");
        if (succ_users != 0 && succ_users != static_cast<long>(n.next.size())) {
          throw ValidationError(at + "successors mix User and non-User nodes");
        }
        break;
      case NodeKind::user:
        if (n.texts.empty()) throw ValidationError(at + "User node without texts");
        if (!n.hook.empty()) throw ValidationError(at + "User node cannot carry a hook");
        if (n.next.empty()) throw ValidationError(at + "User node cannot end the dialogue");
        if (succ_users) throw ValidationError(at + "User node followed by a User node");
        break;
      case NodeKind::function:
        if (n.hook.empty()) throw ValidationError(at + "Function node needs a hook name");
        if (!n.texts.empty()) throw ValidationError(at + "Function node cannot carry texts");
        if (n.next.empty()) throw ValidationError(at + "Function node needs at least one successor");
        if (succ_users) throw ValidationError(at + "Function node followed by a User node");
        break;
    }
  }

  // Cycle check with an explicit path so the error can name the cycle.
  std::map<std::string, int> color;
  std::vector<std::string> stack;
  std::function<void(const std::string&)> visit = [&](const std::string& id) {
    color[id] = 1;
    stack.push_back(id);
    for (const auto& s : g.node(id).next) {
      if (color[s] == 1) {
        auto from = std::find(stack.begin(), stack.end(), s);
        std::string cycle;
        for (auto it = from; it != stack.end(); ++it) cycle += *it + " -> ";
        throw ValidationError(where + "cycle " + cycle + s);
      }
      if (color[s] == 0) visit(s);
    }
    stack.pop_back();
    color[id] = 2;
  };
  visit(g.start);
  for (const auto& n : g.nodes()) {
    if (color[n.id] == 0) throw ValidationError(where + "node " + n.id + " is unreachable from start");
  }
}

namespace {

std::vector<std::string> string_list(const YAML::Node& n, const std::string& source, const char* key) {
  std::vector<std::string> out;
  if (!n) return out;
  if (n.IsScalar()) {
    out.push_back(n.as<std::string>());
  } else if (n.IsSequence()) {
    for (const auto& x : n) out.push_back(x.as<std::string>());
  } else if (!n.IsNull()) {
    throw ParseError(source, n.Mark().line + 1, std::string("'") + key + "' must be a list");
  }
  return out;
}

}  // namespace

DialogueGraph parse_dialogue_text(const std::string& yaml, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml);
  } catch (const YAML::Exception& e) {
    throw ParseError(source, e.mark.line + 1, e.msg);
  }
  if (!root.IsMap()) throw ParseError(source, 1, "dialogue file must be a mapping");
  DialogueGraph g;
  try {
    if (!root["id"]) throw ParseError(source, 1, "missing 'id'");
    if (!root["start"]) throw ParseError(source, 1, "missing 'start'");
    g.id = root["id"].as<std::string>();
    g.start = root["start"].as<std::string>();
    const YAML::Node nodes = root["nodes"];
    if (!nodes || !nodes.IsMap()) throw ParseError(source, 1, "missing 'nodes' mapping");
    for (const auto& kv : nodes) {
      const auto& body = kv.second;
      const std::size_t line = kv.first.Mark().line + 1;
      if (!body.IsMap()) throw ParseError(source, line, "node body must be a mapping");
      DialogueNode n;
      n.id = kv.first.as<std::string>();
      if (!body["kind"]) throw ParseError(source, line, "node " + n.id + ": missing 'kind'");
      try {
        n.kind = parse_node_kind(body["kind"].as<std::string>());
      } catch (const ValidationError& e) {
        throw ParseError(source, line, e.what());
      }
      n.texts = string_list(body["texts"], source, "texts");
      if (body["hook"]) n.hook = body["hook"].as<std::string>();
      n.next = string_list(body["next"], source, "next");
      try {
        g.add(std::move(n));
      } catch (const ValidationError& e) {
        throw ParseError(source, line, e.what());
      }
    }
  } catch (const YAML::Exception& e) {
    throw ParseError(source, e.mark.line + 1, e.msg);
  }
  validate(g);
  return g;
}

DialogueGraph parse_dialogue(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read dialogue file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_dialogue_text(ss.str(), path.string());
}

std::string serialize_dialogue(const DialogueGraph& g) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "id" << YAML::Value << g.id;
  out << YAML::Key << "start" << YAML::Value << g.start;
  out << YAML::Key << "nodes" << YAML::Value << YAML::BeginMap;
  for (const auto& n : g.nodes()) {
    out << YAML::Key << n.id << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "kind" << YAML::Value << node_kind_name(n.kind);
    if (n.kind == NodeKind::function) {
      out << YAML::Key << "hook" << YAML::Value << n.hook;
    } else {
      out << YAML::Key << "texts" << YAML::Value << YAML::BeginSeq;
      for (const auto& t : n.texts) out << YAML::DoubleQuoted << t;
      out << YAML::EndSeq;
    }
    out << YAML::Key << "next" << YAML::Value << YAML::Flow << n.next;
    out << YAML::EndMap;
  }
  out << YAML::EndMap << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

// ---- inventory ----

Inventory::Inventory(const DialogueGraph& g) {
  for (const auto& n : g.nodes()) {
    if (n.kind == NodeKind::user) continue;
    by_node_.emplace(n.id, classes_.size());
    classes_.push_back({classes_.size(), n.id, n.kind});
  }
}

Inventory::Inventory(std::vector<ResponseClass> classes) : classes_(std::move(classes)) {
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    if (classes_[i].id != i) throw ValidationError("inventory class ids must be 0..n-1 in order");
    by_node_.emplace(classes_[i].node_id, i);
  }
}

std::size_t Inventory::class_of(const std::string& node_id) const {
  auto it = by_node_.find(node_id);
  if (it == by_node_.end()) throw ValidationError("no response class for node " + node_id);
  return it->second;
}

std::string Inventory::to_tsv() const {
  std::string out;
  for (const auto& c : classes_) {
    out += std::to_string(c.id) + "\t" + c.node_id + "\t" + node_kind_name(c.kind) + "\n";
  }
  return out;
}

Inventory Inventory::from_tsv(const std::string& text, const std::string& source) {
  std::vector<ResponseClass> classes;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string id, node, kind;
    if (!std::getline(ls, id, '\t') || !std::getline(ls, node, '\t') || !std::getline(ls, kind)) {
      throw ParseError(source, lineno, "expected 'class<TAB>node<TAB>kind'");
    }
    try {
      classes.push_back({static_cast<std::size_t>(std::stoul(id)), node, parse_node_kind(kind)});
    } catch (const std::exception& e) {
      throw ParseError(source, lineno, e.what());
    }
  }
  return Inventory(std::move(classes));
}

// ---- transitions ----

std::vector<Transition> compile_transitions(const DialogueGraph& g, const Inventory& inv) {
  std::vector<std::vector<const DialogueNode*>> paths;
  std::vector<const DialogueNode*> path;
  std::function<void(const DialogueNode&)> walk = [&](const DialogueNode& n) {
    path.push_back(&n);
    if (n.next.empty()) {
      paths.push_back(path);
    } else {
      for (const auto& s : n.next) walk(g.node(s));
    }
    path.pop_back();
  };
  walk(g.node(g.start));

  std::vector<Transition> out;
  for (const auto& p : paths) {
    // One slot per Bot step: the User node heard since the previous Bot, if any.
    std::vector<std::pair<const DialogueNode*, std::size_t>> slots;
    const DialogueNode* heard = nullptr;
    for (const DialogueNode* n : p) {
      if (n->kind == NodeKind::user) {
        heard = n;
      } else if (n->kind == NodeKind::bot) {
        slots.emplace_back(heard, inv.class_of(n->id));
        heard = nullptr;
      }
    }
    std::vector<std::size_t> choice(slots.size(), 0);
    while (true) {
      Transition t{g.id, {}};
      for (std::size_t i = 0; i < slots.size(); ++i) {
        const auto* user = slots[i].first;
        t.steps.push_back({user ? user->texts[choice[i]] : std::string(), slots[i].second});
      }
      out.push_back(std::move(t));
      // Odometer: last slot varies fastest.
      std::size_t i = slots.size();
      bool carry = true;
      while (carry && i > 0) {
        --i;
        const auto* user = slots[i].first;
        const std::size_t variants = user ? user->texts.size() : 1;
        if (++choice[i] < variants) {
          carry = false;
        } else {
          choice[i] = 0;
        }
      }
      if (carry) break;
    }
  }
  return out;
}

// ---- masks ----

ActionMaskTable::ActionMaskTable(std::vector<int> start, std::vector<std::vector<int>> rows)
    : start_(std::move(start)), rows_(std::move(rows)) {
  if (rows_.size() != start_.size()) throw ValidationError("mask table must have one row per class");
  for (const auto& r : rows_) {
    if (r.size() != start_.size()) throw ValidationError("mask row length must equal class count");
  }
}

bool ActionMaskTable::all_zero(const std::vector<int>& m) {
  return std::all_of(m.begin(), m.end(), [](int v) { return v == 0; });
}

namespace {

std::string mask_row_string(const std::vector<int>& row) {
  std::string s;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) s += ' ';
    s += row[i] ? '1' : '0';
  }
  return s;
}

}  // namespace

std::string ActionMaskTable::to_tsv() const {
  std::string out = "start\t" + mask_row_string(start_) + "\n";
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    out += std::to_string(i) + "\t" + mask_row_string(rows_[i]) + "\n";
  }
  return out;
}

ActionMaskTable ActionMaskTable::from_tsv(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::vector<int> start;
  std::vector<std::vector<int>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError(source, lineno, "expected 'key<TAB>bits'");
    const std::string key = line.substr(0, tab);
    std::istringstream bits(line.substr(tab + 1));
    std::vector<int> row;
    int b;
    while (bits >> b) {
      if (b != 0 && b != 1) throw ParseError(source, lineno, "mask entries must be 0 or 1");
      row.push_back(b);
    }
    if (key == "start") {
      start = std::move(row);
    } else {
      if (key != std::to_string(rows.size())) throw ParseError(source, lineno, "mask rows out of order");
      rows.push_back(std::move(row));
    }
  }
  try {
    return ActionMaskTable(std::move(start), std::move(rows));
  } catch (const ValidationError& e) {
    throw ParseError(source, 0, e.what());
  }
}

ActionMaskTable derive_action_masks(const DialogueGraph& g, const Inventory& inv) {
  const std::size_t K = inv.size();
  std::vector<int> start(K, 0);
  start[inv.class_of(g.start)] = 1;
  std::vector<std::vector<int>> rows(K, std::vector<int>(K, 0));
  for (const auto& c : inv.classes()) {
    std::vector<std::string> frontier(g.node(c.node_id).next);
    std::set<std::string> seen;
    while (!frontier.empty()) {
      std::string id = frontier.back();
      frontier.pop_back();
      if (!seen.insert(id).second) continue;
      const auto& n = g.node(id);
      if (n.kind == NodeKind::bot) {
        rows[c.id][inv.class_of(id)] = 1;
      } else {
        frontier.insert(frontier.end(), n.next.begin(), n.next.end());
      }
    }
  }
  return ActionMaskTable(std::move(start), std::move(rows));
}

std::vector<std::string> function_route(const DialogueGraph& g, const Inventory& inv,
                                        std::size_t from, std::size_t to) {
  if (from >= inv.size()) return {};
  const std::string& target = inv.at(to).node_id;
  std::vector<std::string> fns;
  std::function<bool(const std::string&)> search = [&](const std::string& id) {
    if (id == target) return true;
    const auto& n = g.node(id);
    if (n.kind == NodeKind::bot) return false;
    if (n.kind == NodeKind::function) fns.push_back(id);
    for (const auto& s : n.next) {
      if (search(s)) return true;
    }
    if (n.kind == NodeKind::function) fns.pop_back();
    return false;
  };
  for (const auto& s : g.node(inv.at(from).node_id).next) {
    if (search(s)) return fns;
  }
  return {};
}

}  // namespace topicflow::dialogue
