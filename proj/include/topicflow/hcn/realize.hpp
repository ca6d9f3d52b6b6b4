#pragma once

#include <string>
#include <vector>

#include "topicflow/dialogue/dialogue.hpp"
#include "topicflow/dialogue/hooks.hpp"

namespace topicflow::hcn {

constexpr std::size_t kFunctionDepthCap = 8;
inline const std::string kExecutedKey = "executed_dialogues";

struct Realization {
  std::size_t class_id = 0;  // the text class finally spoken
  std::string node_id;
  std::string text;
  std::vector<std::string> functions;  // hook names in execution order
};

/// Function classes run their hook and continue with the returned successor
/// (chained, at most kFunctionDepthCap deep); text classes pick a variant with
/// ctx.rng (first variant without one) and resolve text actions.
Realization realize(const dialogue::DialogueGraph& g, const dialogue::Inventory& inv, std::size_t class_id,
                    const dialogue::HookRegistry& hooks, dialogue::HookContext& ctx);

/// Realizes a predicted Bot class reached from `last`. When the authored route
/// crosses Function nodes, the first one runs and its result decides the
/// spoken class, which can differ from `predicted`.
Realization realize_predicted(const dialogue::DialogueGraph& g, const dialogue::Inventory& inv, std::size_t last,
                              std::size_t predicted, const dialogue::HookRegistry& hooks,
                              dialogue::HookContext& ctx);

bool has_executed(const AttributeMap& session, const std::string& dialogue_id);
void mark_executed(AttributeMap& session, const std::string& dialogue_id);

/// False when the dialogue already ran this session or its hook says no. A
/// throwing hook counts as "no" and is logged.
bool can_start(const std::string& dialogue_id, const dialogue::HookRegistry& hooks, dialogue::HookContext& ctx);

}  // namespace topicflow::hcn
