#include "topicflow/hcn/realize.hpp"

#include <algorithm>

#include <spdlog/spdlog.h>

#include "topicflow/error.hpp"

namespace topicflow::hcn {

using dialogue::NodeKind;

Realization realize(const dialogue::DialogueGraph& g, const dialogue::Inventory& inv, std::size_t class_id,
                    const dialogue::HookRegistry& hooks, dialogue::HookContext& ctx) {
  Realization r;
  std::string node_id = inv.at(class_id).node_id;
  std::size_t depth = 0;
  while (g.node(node_id).kind == NodeKind::function) {
    if (++depth > kFunctionDepthCap) {
      throw HookError(g.id + ": function chain deeper than " + std::to_string(kFunctionDepthCap));
    }
    const auto& node = g.node(node_id);
    const auto* hook = hooks.function(node.hook);
    if (!hook) throw HookError(g.id + ": unregistered function " + node.hook);
    r.functions.push_back(node.hook);
    std::string next = (*hook)(ctx);
    if (std::find(node.next.begin(), node.next.end(), next) == node.next.end()) {
      throw HookError(g.id + ": function " + node.hook + " returned '" + next + "', not a successor of " + node_id);
    }
    node_id = std::move(next);
  }
  const auto& node = g.node(node_id);
  r.node_id = node_id;
  r.class_id = inv.class_of(node_id);
  const std::size_t variant = ctx.rng ? ctx.rng->below(node.texts.size()) : 0;
  r.text = dialogue::resolve_text_actions(node.texts.at(variant), hooks, ctx);
  return r;
}

Realization realize_predicted(const dialogue::DialogueGraph& g, const dialogue::Inventory& inv, std::size_t last,
                              std::size_t predicted, const dialogue::HookRegistry& hooks,
                              dialogue::HookContext& ctx) {
  auto route = dialogue::function_route(g, inv, last, predicted);
  if (route.empty()) return realize(g, inv, predicted, hooks, ctx);
  return realize(g, inv, inv.class_of(route.front()), hooks, ctx);
}

bool has_executed(const AttributeMap& session, const std::string& dialogue_id) {
  auto it = session.find(kExecutedKey);
  if (it == session.end()) return false;
  const auto* list = std::get_if<std::vector<std::string>>(&it->second);
  return list && std::find(list->begin(), list->end(), dialogue_id) != list->end();
}

void mark_executed(AttributeMap& session, const std::string& dialogue_id) {
  if (has_executed(session, dialogue_id)) return;
  auto& v = session[kExecutedKey];
  if (!std::holds_alternative<std::vector<std::string>>(v)) v = std::vector<std::string>{};
  std::get<std::vector<std::string>>(v).push_back(dialogue_id);
}

bool can_start(const std::string& dialogue_id, const dialogue::HookRegistry& hooks, dialogue::HookContext& ctx) {
  if (has_executed(ctx.session, dialogue_id)) return false;
  const auto* hook = hooks.can_start(dialogue_id);
  if (!hook) return true;
  try {
    return (*hook)(ctx);
  } catch (const std::exception& e) {
    spdlog::warn("can_start hook for {} failed: {}", dialogue_id, e.what());
    return false;
  }
}

}  // namespace topicflow::hcn
