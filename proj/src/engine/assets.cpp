#include "topicflow/engine/assets.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <sstream>

#include "topicflow/error.hpp"
#include "topicflow/nlu/tokenizer.hpp"

namespace topicflow::engine {

CompiledDialogue compile_dialogue(dialogue::DialogueGraph g) {
  dialogue::validate(g);
  CompiledDialogue c;
  c.inventory = dialogue::Inventory(g);
  c.masks = dialogue::derive_action_masks(g, c.inventory);
  c.transitions = dialogue::compile_transitions(g, c.inventory);
  c.graph = std::move(g);
  return c;
}

std::map<std::string, CompiledDialogue> load_dialogues(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ConfigError("dialogue directory " + dir.string() + " does not exist");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const auto ext = e.path().extension();
    if (e.is_regular_file() && (ext == ".yaml" || ext == ".yml")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::map<std::string, CompiledDialogue> out;
  for (const auto& f : files) {
    auto g = dialogue::parse_dialogue(f);
    const std::string id = g.id;
    if (out.count(id)) throw ValidationError(f.string() + ": duplicate dialogue id " + id);
    out.emplace(id, compile_dialogue(std::move(g)));
  }
  return out;
}

KnowledgeBase KnowledgeBase::parse(const std::string& text, const std::string& source) {
  KnowledgeBase kb;
  std::istringstream in(text);
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cols;
    std::stringstream ls(line);
    std::string col;
    while (std::getline(ls, col, '\t')) cols.push_back(col);
    if (cols.size() != 3) throw ParseError(source, no, "expected entity<TAB>attribute<TAB>value");
    kb.add(cols[0], cols[1], cols[2]);
  }
  return kb;
}

KnowledgeBase KnowledgeBase::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read knowledge base " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

void KnowledgeBase::add(const std::string& entity, const std::string& attribute, const std::string& value) {
  facts_[nlu::lowercase(entity)][attribute] = value;
}

std::optional<std::string> KnowledgeBase::get(const std::string& entity, const std::string& attribute) const {
  auto it = facts_.find(nlu::lowercase(entity));
  if (it == facts_.end()) return std::nullopt;
  auto a = it->second.find(attribute);
  if (a == it->second.end()) return std::nullopt;
  return a->second;
}

std::string extract_name(const std::string& utterance) {
  static const std::regex intro(R"((?:my name is|call me|i am|i'm|the name is|name's)\s+([A-Za-z][A-Za-z'-]*))",
                                std::regex::icase);
  static const std::set<std::string> not_names{"no", "yes", "not", "nothing", "secret", "fine", "good", "ok",
                                               "okay", "here", "a", "the", "sure", "why", "what"};
  std::smatch m;
  std::string candidate;
  if (std::regex_search(utterance, m, intro)) {
    candidate = m[1].str();
  } else {
    const auto w = nlu::words(utterance);
    auto raw = utterance;
    raw.erase(std::remove_if(raw.begin(), raw.end(), [](char ch) { return ch == '.' || ch == '!'; }), raw.end());
    if (w.size() == 1 && !raw.empty() && std::isupper(static_cast<unsigned char>(raw.front()))) candidate = raw;
  }
  if (candidate.empty() || not_names.count(nlu::lowercase(candidate))) return {};
  candidate[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(candidate[0])));
  return candidate;
}

void register_demo_hooks(dialogue::HookRegistry& hooks, const KnowledgeBase& kb, const topic::ContentStore& content,
                         const std::map<std::string, std::string>& content_dialogues) {
  hooks.add_function("remember_name", [](dialogue::HookContext& ctx) -> std::string {
    std::string name;
    if (auto p = get_string(ctx.session, "person_name")) name = *p;
    if (name.empty()) {
      if (auto u = get_string(ctx.session, "last_utterance")) name = extract_name(*u);
    }
    if (name.empty()) return "greet_anon";
    ctx.user["name"] = name;
    return "greet_known";
  });
  hooks.add_function("remember_hobby", [](dialogue::HookContext& ctx) -> std::string {
    if (auto u = get_string(ctx.session, "last_utterance"); u && !u->empty()) ctx.user["hobby"] = *u;
    return "ack";
  });
  hooks.add_function("writer_popularity", [&kb](dialogue::HookContext& ctx) -> std::string {
    auto fans = kb.get(ctx.focus_entity, "fans");
    if (!fans) return "known";
    try {
      return std::stod(*fans) >= kFamousFans ? "famous" : "known";
    } catch (const std::exception&) {
      throw HookError("knowledge base: fans of " + ctx.focus_entity + " is not a number");
    }
  });
  hooks.add_text_action("user_name", [](dialogue::HookContext& ctx) -> std::string {
    if (auto n = get_string(ctx.user, "name")) return *n;
    throw HookError("no user name known");
  });
  hooks.add_text_action("focus", [](dialogue::HookContext& ctx) -> std::string {
    if (ctx.focus_entity.empty()) throw HookError(ctx.dialogue_id + ": no focus entity");
    return ctx.focus_entity;
  });
  hooks.add_can_start("movie_opinion", [](dialogue::HookContext& ctx) { return ctx.focus_type == "movie"; });
  hooks.add_can_start("writer_popularity", [](dialogue::HookContext& ctx) { return ctx.focus_type == "writer"; });
  topic::register_content_hooks(hooks, content, content_dialogues);
}

std::unique_ptr<Assets> load_assets(const EngineConfig& cfg) {
  auto a = std::make_unique<Assets>();
  a->dialogues = load_dialogues(cfg.dialogues);
  std::set<std::string> ids;
  for (const auto& [id, _] : a->dialogues) ids.insert(id);
  a->topics = topic::load_topic_graph(cfg.topics, &ids);
  a->content = std::make_unique<topic::ContentStore>(topic::ContentStore::load(cfg.content));
  a->kb = std::make_unique<KnowledgeBase>(KnowledgeBase::load(cfg.kb));
  a->paraphraser = Paraphraser::load(cfg.paraphrase_rules);
  register_demo_hooks(a->hooks, *a->kb, *a->content, cfg.content_dialogues);
  for (const auto& [id, d] : a->dialogues) a->hooks.require(d.graph);
  for (const auto& id : cfg.initial_dialogues) {
    if (!ids.count(id)) throw ConfigError("initial dialogue " + id + " is not defined");
  }
  for (const auto& [id, _] : cfg.content_dialogues) {
    if (!ids.count(id)) throw ConfigError("content dialogue " + id + " is not defined");
  }
  return a;
}

}  // namespace topicflow::engine
