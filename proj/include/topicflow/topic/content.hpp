#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "topicflow/dialogue/hooks.hpp"

namespace topicflow::topic {

/// Local snippets for GenericEntity dialogues. One line per entry:
/// "kind<TAB>keyword,keyword<TAB>text", kind in {funfact, showerthought, news}.
class ContentStore {
 public:
  struct Entry {
    std::string kind;
    std::vector<std::string> keywords;  // lower case
    std::string text;
  };

  static ContentStore parse(const std::string& text, const std::string& source);
  static ContentStore load(const std::filesystem::path& path);

  void add(Entry e);
  std::size_t size() const { return entries_.size(); }
  /// Texts of `kind` whose keyword is a case-insensitive substring of the
  /// entity (or the entity of the keyword), in file order.
  std::vector<std::string> find(const std::string& kind, const std::string& entity) const;
  bool has(const std::string& kind, const std::string& entity) const { return !find(kind, entity).empty(); }

 private:
  std::vector<Entry> entries_;
};

bool is_content_kind(const std::string& kind);

/// For each dialogue -> kind pair: a can-start hook requiring content for the
/// focus entity. Also one text action per kind ("{funfact}" ...) returning a
/// matching snippet picked with ctx.rng. The store must outlive the registry.
void register_content_hooks(dialogue::HookRegistry& hooks, const ContentStore& store,
                            const std::map<std::string, std::string>& dialogue_kinds);

}  // namespace topicflow::topic
