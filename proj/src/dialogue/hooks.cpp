#include "topicflow/dialogue/hooks.hpp"

#include <set>

#include "topicflow/error.hpp"

namespace topicflow::dialogue {

void HookRegistry::add_can_start(const std::string& dialogue_id, CanStartHook h) {
  can_start_[dialogue_id] = std::move(h);
}

void HookRegistry::add_function(const std::string& name, FunctionHook h) { functions_[name] = std::move(h); }

void HookRegistry::add_text_action(const std::string& name, TextActionHook h) {
  text_actions_[name] = std::move(h);
}

void HookRegistry::add_mask(const std::string& dialogue_id, MaskHook h) { masks_[dialogue_id] = std::move(h); }

namespace {

template <typename Map>
const typename Map::mapped_type* find_hook(const Map& m, const std::string& key) {
  auto it = m.find(key);
  return it == m.end() ? nullptr : &it->second;
}

}  // namespace

const CanStartHook* HookRegistry::can_start(const std::string& dialogue_id) const {
  return find_hook(can_start_, dialogue_id);
}

const FunctionHook* HookRegistry::function(const std::string& name) const { return find_hook(functions_, name); }

const TextActionHook* HookRegistry::text_action(const std::string& name) const {
  return find_hook(text_actions_, name);
}

const MaskHook* HookRegistry::mask(const std::string& dialogue_id) const { return find_hook(masks_, dialogue_id); }

std::vector<std::string> HookRegistry::missing(const DialogueGraph& g) const {
  std::set<std::string> out;
  for (const auto& n : g.nodes()) {
    if (n.kind == NodeKind::function && !function(n.hook)) out.insert("function " + n.hook);
    if (n.kind == NodeKind::bot) {
      for (const auto& t : n.texts) {
        for (const auto& p : placeholders(t)) {
          if (!text_action(p)) out.insert("text action {" + p + "}");
        }
      }
    }
  }
  return {out.begin(), out.end()};
}

void HookRegistry::require(const DialogueGraph& g) const {
  auto miss = missing(g);
  if (miss.empty()) return;
  std::string msg = "dialogue " + g.id + " uses unregistered hooks:";
  for (const auto& m : miss) msg += " " + m;
  throw ConfigError(msg);
}

std::string resolve_text_actions(const std::string& text, const HookRegistry& hooks, HookContext& ctx) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    auto open = text.find('{', pos);
    auto close = open == std::string::npos ? std::string::npos : text.find('}', open);
    if (close == std::string::npos) {
      out += text.substr(pos);
      return out;
    }
    out += text.substr(pos, open - pos);
    const std::string name = text.substr(open + 1, close - open - 1);
    const auto* hook = hooks.text_action(name);
    if (!hook) throw HookError("unregistered text action {" + name + "}");
    out += (*hook)(ctx);
    pos = close + 1;
  }
}

}  // namespace topicflow::dialogue
