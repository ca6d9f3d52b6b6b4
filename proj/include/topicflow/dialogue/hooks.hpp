#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "topicflow/dialogue/dialogue.hpp"
#include "topicflow/tensor/rng.hpp"
#include "topicflow/value.hpp"

namespace topicflow::dialogue {

/// What hook code may see and change during one turn.
struct HookContext {
  std::string dialogue_id;
  std::string focus_entity;
  std::string focus_type;
  AttributeMap& session;
  AttributeMap& user;
  tensor::Rng* rng = nullptr;
};

using CanStartHook = std::function<bool(HookContext&)>;
/// Returns the id of the node to continue with (must be a successor).
using FunctionHook = std::function<std::string(HookContext&)>;
using TextActionHook = std::function<std::string(HookContext&)>;
/// May clear entries of the derived mask row; never sets new ones.
using MaskHook = std::function<void(HookContext&, std::vector<int>&)>;

class HookRegistry {
 public:
  void add_can_start(const std::string& dialogue_id, CanStartHook h);
  void add_function(const std::string& name, FunctionHook h);
  void add_text_action(const std::string& name, TextActionHook h);
  void add_mask(const std::string& dialogue_id, MaskHook h);

  const CanStartHook* can_start(const std::string& dialogue_id) const;
  const FunctionHook* function(const std::string& name) const;
  const TextActionHook* text_action(const std::string& name) const;
  const MaskHook* mask(const std::string& dialogue_id) const;

  /// Every hook name the graph references that has no registration.
  std::vector<std::string> missing(const DialogueGraph& g) const;
  /// Throws ConfigError listing missing() when non-empty.
  void require(const DialogueGraph& g) const;

 private:
  std::map<std::string, CanStartHook> can_start_;
  std::map<std::string, FunctionHook> functions_;
  std::map<std::string, TextActionHook> text_actions_;
  std::map<std::string, MaskHook> masks_;
};

/// Replaces each `{name}` left to right with its text-action output.
std::string resolve_text_actions(const std::string& text, const HookRegistry& hooks, HookContext& ctx);

}  // namespace topicflow::dialogue
