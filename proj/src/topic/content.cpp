#include "topicflow/topic/content.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "topicflow/error.hpp"

namespace topicflow::topic {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

}  // namespace

bool is_content_kind(const std::string& kind) {
  return kind == "funfact" || kind == "showerthought" || kind == "news";
}

ContentStore ContentStore::parse(const std::string& text, const std::string& source) {
  ContentStore store;
  std::istringstream in(text);
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line[0] == '#') continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) throw ParseError(source, no, "expected kind<TAB>keywords<TAB>text");
    Entry e;
    e.kind = line.substr(0, t1);
    if (!is_content_kind(e.kind)) throw ParseError(source, no, "unknown content kind '" + e.kind + "'");
    std::stringstream kw(line.substr(t1 + 1, t2 - t1 - 1));
    std::string k;
    while (std::getline(kw, k, ',')) {
      k = lower(trim(k));
      if (!k.empty()) e.keywords.push_back(k);
    }
    if (e.keywords.empty()) throw ParseError(source, no, "no keywords");
    e.text = trim(line.substr(t2 + 1));
    if (e.text.empty()) throw ParseError(source, no, "empty text");
    store.add(std::move(e));
  }
  return store;
}

ContentStore ContentStore::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read content store " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

void ContentStore::add(Entry e) { entries_.push_back(std::move(e)); }

std::vector<std::string> ContentStore::find(const std::string& kind, const std::string& entity) const {
  std::vector<std::string> out;
  const std::string ent = lower(trim(entity));
  if (ent.empty()) return out;
  for (const auto& e : entries_) {
    if (e.kind != kind) continue;
    for (const auto& k : e.keywords) {
      if (ent.find(k) != std::string::npos || k.find(ent) != std::string::npos) {
        out.push_back(e.text);
        break;
      }
    }
  }
  return out;
}

void register_content_hooks(dialogue::HookRegistry& hooks, const ContentStore& store,
                            const std::map<std::string, std::string>& dialogue_kinds) {
  std::set<std::string> kinds;
  for (const auto& [id, kind] : dialogue_kinds) {
    if (!is_content_kind(kind)) throw ConfigError("dialogue " + id + ": unknown content kind " + kind);
    kinds.insert(kind);
    hooks.add_can_start(id, [&store, kind = kind](dialogue::HookContext& ctx) {
      return store.has(kind, ctx.focus_entity);
    });
  }
  for (const auto& kind : kinds) {
    hooks.add_text_action(kind, [&store, kind](dialogue::HookContext& ctx) {
      auto texts = store.find(kind, ctx.focus_entity);
      if (texts.empty()) throw HookError("no " + kind + " about '" + ctx.focus_entity + "'");
      return texts[ctx.rng ? ctx.rng->below(texts.size()) : 0];
    });
  }
}

}  // namespace topicflow::topic
