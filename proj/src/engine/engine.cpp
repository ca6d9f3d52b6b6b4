#include "topicflow/engine/engine.hpp"

#include <algorithm>
#include <numeric>

#include <spdlog/spdlog.h>

#include "topicflow/error.hpp"
#include "topicflow/hcn/realize.hpp"
#include "topicflow/topicswitch/switch.hpp"

namespace topicflow::engine {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxBotSteps = 8;
constexpr std::size_t kMaxChains = 2;

bool wants_user(const dialogue::DialogueGraph& g, const std::string& node_id) {
  const auto& n = g.node(node_id);
  return std::any_of(n.next.begin(), n.next.end(),
                     [&](const std::string& s) { return g.node(s).kind == dialogue::NodeKind::user; });
}

}  // namespace

json to_json(const TurnResult& r) {
  json top = json::array();
  for (const auto& a : r.top_k) top.push_back({{"class", a.class_id}, {"node", a.node}, {"probability", a.probability}});
  json actions = json::array();
  for (const auto& a : r.actions) {
    actions.push_back({{"dialogue", a.dialogue}, {"class", a.class_id}, {"node", a.node}, {"entered", a.entered}});
  }
  return {{"session_id", r.session_id},
          {"turn", r.turn},
          {"response", r.response},
          {"topic", r.topic},
          {"dialogue", r.dialogue},
          {"switch", {{"decision", r.switched}, {"probability", r.switch_probability}}},
          {"action", r.action_class ? json(*r.action_class) : json(nullptr)},
          {"action_node", r.action_node},
          {"top_k", top},
          {"actions", actions},
          {"annotation", nlu::to_json(r.annotation)},
          {"paraphrase", r.paraphrase ? json(*r.paraphrase) : json(nullptr)},
          {"durable", r.durable}};
}

std::string encode_state(const SessionState& s) {
  json j = {{"topic", s.topic},
            {"dialogue", s.dialogue},
            {"focus_entity", s.focus_entity},
            {"focus_type", s.focus_type},
            {"last", s.dm.last},
            {"finished", s.dm.finished},
            {"h", s.dm.rnn.h},
            {"c", s.dm.rnn.c},
            {"trivia_run", s.trivia_run},
            {"last_prompt", s.last_prompt}};
  return j.dump();
}

SessionState decode_state(const std::string& blob) {
  SessionState s;
  if (blob.empty()) return s;
  try {
    const auto j = json::parse(blob);
    s.topic = j.at("topic").get<std::string>();
    s.dialogue = j.at("dialogue").get<std::string>();
    s.focus_entity = j.at("focus_entity").get<std::string>();
    s.focus_type = j.at("focus_type").get<std::string>();
    s.dm.last = j.at("last").get<std::size_t>();
    s.dm.finished = j.at("finished").get<bool>();
    s.dm.rnn.h = j.at("h").get<std::vector<double>>();
    s.dm.rnn.c = j.at("c").get<std::vector<double>>();
    s.trivia_run = j.at("trivia_run").get<std::size_t>();
    s.last_prompt = j.value("last_prompt", "");
  } catch (const json::exception& e) {
    throw ParseError("dm_state", 0, e.what());
  }
  return s;
}

std::uint64_t turn_seed(std::uint64_t seed, const std::string& session_id, std::size_t turn) {
  std::uint64_t h = 14695981039346656037ull;  // FNV-1a
  for (unsigned char ch : session_id) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return seed * 0x9E3779B97F4A7C15ull ^ h ^ (static_cast<std::uint64_t>(turn) << 32 | turn);
}

std::unique_ptr<context::ContextStore> make_store(const EngineConfig& cfg) {
  if (cfg.context_dir.empty()) return std::make_unique<context::MemoryContextStore>();
  return std::make_unique<context::FileContextStore>(cfg.context_dir);
}

struct Engine::Turn {
  context::Context ctx;
  SessionState st;
  AttributeMap user;
  tensor::Rng rng;
  std::vector<std::string> texts;
  TurnResult result;

  dialogue::HookContext hooks(const std::string& dialogue_id) {
    return dialogue::HookContext{dialogue_id, st.focus_entity, st.focus_type, ctx.session, user, &rng};
  }
};

Engine::Engine(EngineConfig cfg, std::unique_ptr<context::ContextStore> store) : cfg_(std::move(cfg)) {
  validate_config(cfg_, true);
  assets_ = load_assets(cfg_);
  models_ = load_models(cfg_.models, assets_->dialogues);
  store_ = store ? std::move(store) : make_store(cfg_);
}

Engine::Engine(EngineConfig cfg, std::unique_ptr<Assets> assets, std::unique_ptr<Models> models,
               std::unique_ptr<context::ContextStore> store)
    : cfg_(std::move(cfg)), assets_(std::move(assets)), models_(std::move(models)), store_(std::move(store)) {
  if (!assets_ || !models_) throw ConfigError("engine needs assets and models");
  if (!store_) store_ = make_store(cfg_);
}

std::mutex& Engine::session_mutex(const std::string& session_id) {
  std::lock_guard lock(sessions_mutex_);
  auto& m = session_mutexes_[session_id];
  if (!m) m = std::make_unique<std::mutex>();
  return *m;
}

bool Engine::eligible(Turn& t, const std::string& dialogue_id) {
  if (!models_->hcn.count(dialogue_id)) return false;
  if (cfg_.content_dialogues.count(dialogue_id) && t.st.trivia_run >= cfg_.trivia_cap) return false;
  auto hc = t.hooks(dialogue_id);
  return hcn::can_start(dialogue_id, assets_->hooks, hc);
}

bool Engine::advance(Turn& t, const std::string& utterance) {
  const auto& d = assets_->dialogues.at(t.st.dialogue);
  const auto& model = models_->hcn.at(t.st.dialogue);
  const std::size_t before = t.texts.size(), actions_before = t.result.actions.size();
  std::string u = utterance;
  for (std::size_t step = 0; step < kMaxBotSteps && !t.st.dm.finished; ++step) {
    auto hc = t.hooks(t.st.dialogue);
    std::vector<int> extra;
    const auto* mask_hook = assets_->hooks.mask(t.st.dialogue);
    if (mask_hook) {
      extra = d.masks.after(t.st.dm.last);
      (*mask_hook)(hc, extra);
    }
    auto choice = model.predict(t.st.dm, model.featurize(u, t.st.dm.last), mask_hook ? &extra : nullptr);
    if (!choice.class_id) {
      t.st.dm.finished = true;
      break;
    }
    hcn::Realization r;
    try {
      r = hcn::realize_predicted(d.graph, d.inventory, t.st.dm.last, *choice.class_id, assets_->hooks, hc);
    } catch (const HookError& e) {
      spdlog::warn("dialogue {} abandoned: {}", t.st.dialogue, e.what());
      t.texts.resize(before);
      t.result.actions.resize(actions_before);
      t.st.dm.finished = true;
      return false;
    }
    const bool entered = t.st.dm.last == d.inventory.size();
    t.st.dm = std::move(choice.state);
    t.st.dm.last = r.class_id;
    t.st.dm.finished = dialogue::ActionMaskTable::all_zero(d.masks.after(r.class_id));
    t.texts.push_back(r.text);

    auto& res = t.result;
    res.actions.push_back({t.st.dialogue, r.class_id, r.node_id, entered});
    res.dialogue = t.st.dialogue;
    res.action_class = r.class_id;
    res.action_node = r.node_id;
    std::vector<std::size_t> order(choice.distribution.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return choice.distribution[a] > choice.distribution[b]; });
    res.top_k.clear();
    for (std::size_t k : order) {
      if (res.top_k.size() >= cfg_.top_k || choice.distribution[k] <= 0.0) break;
      res.top_k.push_back({k, d.inventory.at(k).node_id, choice.distribution[k]});
    }
    if (wants_user(d.graph, r.node_id)) break;
    u.clear();
  }
  return t.texts.size() > before;
}

bool Engine::enter(Turn& t, const std::string& topic, const std::string& dialogue_id) {
  const auto& model = models_->hcn.at(dialogue_id);
  t.st.topic = topic;
  t.st.dialogue = dialogue_id;
  t.st.dm = model.initial_state();
  hcn::mark_executed(t.ctx.session, dialogue_id);
  t.st.trivia_run = cfg_.content_dialogues.count(dialogue_id) ? t.st.trivia_run + 1 : 0;
  return advance(t, "");
}

bool Engine::enter_from_topic(Turn& t, const std::string& topic) {
  const auto& g = assets_->topics;
  if (!g.contains(topic)) return false;
  if (g.node(topic).kind == dialogue::TopicKind::recommendation) return false;
  const bool initial = std::any_of(cfg_.initial_dialogues.begin(), cfg_.initial_dialogues.end(),
                                   [&](const std::string& id) { return g.owner(id) == topic; });
  // Each failed entry marks the dialogue executed, so this terminates.
  for (std::size_t attempt = 0; attempt <= assets_->dialogues.size(); ++attempt) {
    std::optional<std::string> pick;
    if (initial) {
      for (const auto& id : cfg_.initial_dialogues) {
        if (eligible(t, id)) {
          pick = id;
          break;
        }
      }
    } else {
      pick = topic::select_subdialogue(
          g, topic, [&](const std::string& id) { return eligible(t, id); }, t.rng, cfg_.decay);
    }
    if (!pick) return false;
    if (enter(t, g.owner(*pick).value_or(topic), *pick)) return true;
  }
  return false;
}

void Engine::enter_recommendation(Turn& t) {
  const auto rec = assets_->topics.find_kind(dialogue::TopicKind::recommendation);
  if (rec) {
    const auto& ids = assets_->topics.node(*rec).dialogues;
    std::vector<std::string> usable;
    for (const auto& id : ids) {
      if (models_->hcn.count(id)) usable.push_back(id);
    }
    if (!usable.empty() && enter(t, *rec, usable[t.rng.below(usable.size())])) return;
  }
  t.st.topic = rec.value_or("");
  t.st.dialogue.clear();
  t.st.dm = hcn::DmState{};
  t.st.dm.finished = true;
  t.texts.push_back(cfg_.fallback_response);
  t.result.action_class.reset();
  t.result.action_node.clear();
  t.result.top_k.clear();
}

void Engine::chain(Turn& t) {
  for (std::size_t k = 0; k < kMaxChains; ++k) {
    if (!t.st.dm.finished) return;
    const auto& g = assets_->topics;
    if (g.contains(t.st.topic) && g.node(t.st.topic).kind == dialogue::TopicKind::recommendation) return;
    if (!enter_from_topic(t, t.st.topic)) {
      enter_recommendation(t);
      return;
    }
  }
}

TurnResult Engine::respond(const std::string& session_id, const std::string& user_id, const std::string& text) {
  std::lock_guard session_lock(session_mutex(session_id));
  Turn t{store_->begin_turn(session_id, user_id, text), {}, {}, tensor::Rng(0), {}, {}};
  t.rng = tensor::Rng(turn_seed(cfg_.seed, session_id, t.ctx.turn));
  const bool first = t.ctx.history.empty();
  if (!first) t.st = decode_state(t.ctx.history.front().dm_state);

  t.ctx.annotation = models_->nlu->annotate(text);
  const auto& ann = t.ctx.annotation;
  t.ctx.session["last_utterance"] = text;
  t.ctx.session.erase("person_name");
  for (const auto& e : ann.entities) {
    if (e.type == "person_name") {
      t.ctx.session["person_name"] = e.text;
      break;
    }
  }
  t.user = store_->user_attributes(user_id);
  const AttributeMap user_before = t.user;

  auto route_by_message = [&] {
    const auto res = topic::resolve_topic(assets_->topics, ann.entities, ann.intent.label);
    if (res.node.empty()) {
      enter_recommendation(t);
      return;
    }
    t.st.focus_entity = res.focus_entity;
    t.st.focus_type = res.focus_type;
    if (!enter_from_topic(t, res.node)) enter_recommendation(t);
  };

  const std::string initial_topic =
      cfg_.initial_dialogues.empty() ? "" : assets_->topics.owner(cfg_.initial_dialogues.front()).value_or("");
  if (first) {
    if (!enter_from_topic(t, initial_topic)) enter_recommendation(t);
  } else {
    const auto& prev = t.ctx.history.front();
    t.result.switch_probability = topicswitch::detect_switch(
        *models_->detector, t.st.last_prompt.empty() ? prev.response : t.st.last_prompt, text);
    t.result.switched = t.result.switch_probability > cfg_.switch_threshold;
    const bool active = !t.st.dialogue.empty() && models_->hcn.count(t.st.dialogue) && !t.st.dm.finished;
    const bool at_recommendation = !assets_->topics.contains(t.st.topic) ||
                                   assets_->topics.node(t.st.topic).kind == dialogue::TopicKind::recommendation;
    if (t.result.switched) {
      route_by_message();
    } else if (active) {
      advance(t, text);
    } else if (at_recommendation) {
      route_by_message();
    } else if (!enter_from_topic(t, t.st.topic)) {
      enter_recommendation(t);
    }
  }
  chain(t);
  if (t.texts.empty()) enter_recommendation(t);
  t.st.last_prompt = t.texts.back();

  std::string response;
  for (const auto& s : t.texts) response += (response.empty() ? "" : " ") + s;
  if (auto p = assets_->paraphraser.paraphrase(text, t.rng, cfg_.paraphrase_probability)) {
    t.result.paraphrase = *p;
    response = prepend_restatement(*p, response);
  }

  auto& res = t.result;
  res.session_id = session_id;
  res.turn = t.ctx.turn;
  res.response = response;
  res.topic = t.st.topic;
  res.dialogue = t.st.dialogue;
  res.annotation = ann;

  t.ctx.topic_node = t.st.topic;
  t.ctx.dialogue_id = t.st.dialogue;
  t.ctx.dm_state = encode_state(t.st);
  if (auto it = t.ctx.session.find(hcn::kExecutedKey); it != t.ctx.session.end()) {
    if (const auto* v = std::get_if<std::vector<std::string>>(&it->second)) t.ctx.executed_dialogues = *v;
  }
  t.ctx.response = response;
  try {
    for (const auto& [k, v] : t.user) {
      auto it = user_before.find(k);
      if (it == user_before.end() || it->second != v) store_->set_user_attribute(user_id, k, v);
    }
    store_->commit_turn(t.ctx);
  } catch (const context::StorageError& e) {
    spdlog::warn("turn {} of session {} not stored: {}", t.ctx.turn, session_id, e.what());
    res.durable = false;
  }
  return res;
}

}  // namespace topicflow::engine

namespace topicflow::engine {

std::string format_exchange(const std::string& message, const std::string& response) {
  return "> " + message + "\n< " + response + "\n";
}

}  // namespace topicflow::engine
