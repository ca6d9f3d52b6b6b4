#include "topicflow/eval/babi.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "topicflow/error.hpp"
#include "topicflow/hcn/training.hpp"

namespace topicflow::eval {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

}  // namespace

std::vector<RawDialogue> parse_babi(const std::string& text, const std::string& source) {
  std::vector<RawDialogue> out;
  RawDialogue cur;
  std::istringstream in(text);
  std::string line;
  std::size_t no = 0;
  long last_index = 0;
  auto flush = [&] {
    if (!cur.turns.empty()) out.push_back(std::move(cur));
    else if (!cur.facts.empty()) throw ParseError(source, cur.line, "dialogue without turns");
    cur = RawDialogue{};
    last_index = 0;
  };
  while (std::getline(in, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) {
      flush();
      continue;
    }
    const auto sp = line.find(' ');
    long index = 0;
    try {
      std::size_t used = 0;
      index = std::stol(line.substr(0, sp), &used);
      if (used != sp) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ParseError(source, no, "expected a line number");
    }
    if (sp == std::string::npos) throw ParseError(source, no, "empty line body");
    if (index == 1 && last_index != 0) flush();
    if (index != last_index + 1) throw ParseError(source, no, "line number " + std::to_string(index) + " out of order");
    last_index = index;
    if (cur.turns.empty() && cur.facts.empty()) cur.line = no;
    const std::string body = line.substr(sp + 1);
    const auto tab = body.find('\t');
    if (tab == std::string::npos) {
      auto f = split_ws(body);
      if (f.size() != 3) throw ParseError(source, no, "knowledge-base fact needs 3 fields");
      cur.facts.push_back(std::move(f));
    } else {
      std::string bot = body.substr(tab + 1);
      if (bot.empty()) throw ParseError(source, no, "empty bot response");
      cur.turns.emplace_back(body.substr(0, tab), std::move(bot));
    }
  }
  flush();
  return out;
}

Normalizer Normalizer::parse(const std::string& text, const std::string& source) {
  Normalizer n;
  std::istringstream in(text);
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto f = split(line, '\t');
    const std::string& kind = f[0];
    if (kind == "relation" && f.size() == 3) {
      n.relations_.emplace_back(f[1], f[2]);
    } else if (kind == "name" && f.size() == 2) {
      n.name_placeholder_ = f[1];
    } else if (kind == "api_call" && f.size() >= 2) {
      n.api_slots_.assign(f.begin() + 1, f.end());
    } else if (kind == "regex" && f.size() == 3) {
      try {
        n.regexes_.emplace_back(std::regex(f[1]), f[2]);
      } catch (const std::regex_error& e) {
        throw ParseError(source, no, std::string("bad regex: ") + e.what());
      }
    } else {
      throw ParseError(source, no, "unknown or malformed rule '" + kind + "'");
    }
  }
  return n;
}

Normalizer Normalizer::load(const std::filesystem::path& path) { return parse(read_file(path), path.string()); }

void Normalizer::learn(const std::vector<RawDialogue>& dialogues) {
  std::map<std::string, std::string> placeholder(relations_.begin(), relations_.end());
  std::map<std::string, std::size_t> rank;
  for (std::size_t i = 0; i < relations_.size(); ++i) rank[relations_[i].first] = i;
  std::map<std::string, std::size_t> best;  // value -> rank of the relation that owns it
  auto offer = [&](const std::string& value, const std::string& relation) {
    auto r = rank.find(relation);
    if (r == rank.end() || placeholder.count(value)) return;
    auto b = best.find(value);
    if (b == best.end() || r->second < b->second) {
      best[value] = r->second;
      lexicon_[value] = relations_[r->second].second;
    }
  };
  for (const auto& d : dialogues) {
    for (const auto& f : d.facts) {
      if (!name_placeholder_.empty()) lexicon_.emplace(f[0], name_placeholder_);
      offer(f[2], f[1]);
    }
    for (const auto& [user, bot] : d.turns) {
      auto w = split_ws(bot);
      if (w.empty() || w[0] != "api_call") continue;
      for (std::size_t k = 1; k < w.size() && k - 1 < api_slots_.size(); ++k) offer(w[k], api_slots_[k - 1]);
    }
  }
  // names win over attribute values they might collide with
  if (!name_placeholder_.empty()) {
    for (const auto& d : dialogues) {
      for (const auto& f : d.facts) lexicon_[f[0]] = name_placeholder_;
    }
  }
}

std::string Normalizer::normalize(const std::string& response) const {
  std::string out;
  for (const auto& w : split_ws(response)) {
    if (!out.empty()) out += ' ';
    auto it = lexicon_.find(w);
    out += it == lexicon_.end() ? w : it->second;
  }
  for (const auto& [re, rep] : regexes_) out = std::regex_replace(out, re, rep);
  return out;
}

BabiData build_babi(const std::vector<RawDialogue>& train, const std::vector<RawDialogue>& valid,
                    const std::vector<RawDialogue>& test, Normalizer normalizer) {
  for (const auto* part : {&train, &valid, &test}) normalizer.learn(*part);
  BabiData data;
  std::set<std::string> classes;
  for (const auto* part : {&train, &valid, &test}) {
    for (const auto& d : *part) {
      for (const auto& t : d.turns) classes.insert(normalizer.normalize(t.second));
    }
  }
  data.classes.assign(classes.begin(), classes.end());
  auto convert = [&](const std::vector<RawDialogue>& raw, std::vector<EvalDialogue>& dst) {
    for (const auto& d : raw) {
      EvalDialogue e;
      for (const auto& [user, bot] : d.turns) {
        const std::string norm = normalizer.normalize(bot);
        const auto id = static_cast<std::size_t>(
            std::lower_bound(data.classes.begin(), data.classes.end(), norm) - data.classes.begin());
        e.turns.emplace_back(user, id);
        e.raw_responses.push_back(bot);
      }
      dst.push_back(std::move(e));
    }
  };
  convert(train, data.train);
  convert(valid, data.valid);
  convert(test, data.test);
  return data;
}

BabiData load_babi6(const std::filesystem::path& dir, const Normalizer& normalizer) {
  auto read = [&](const char* name) { return parse_babi(read_file(dir / name), (dir / name).string()); };
  return build_babi(read(kBabi6Train), read(kBabi6Valid), read(kBabi6Test), normalizer);
}

dialogue::Inventory babi_inventory(const BabiData& data) {
  std::vector<dialogue::ResponseClass> cs;
  for (std::size_t i = 0; i < data.classes.size(); ++i) cs.push_back({i, "c" + std::to_string(i), dialogue::NodeKind::bot});
  return dialogue::Inventory(std::move(cs));
}

dialogue::ActionMaskTable babi_masks(std::size_t classes) {
  std::vector<int> ones(classes, 1);
  return dialogue::ActionMaskTable(ones, std::vector<std::vector<int>>(classes, ones));
}

std::vector<dialogue::Transition> babi_transitions(const std::vector<EvalDialogue>& ds) {
  std::vector<dialogue::Transition> out;
  for (const auto& d : ds) {
    dialogue::Transition t{"babi6", {}};
    for (const auto& [user, cls] : d.turns) t.steps.push_back({user == "<SILENCE>" ? "" : user, cls});
    out.push_back(std::move(t));
  }
  return out;
}

BabiRun run_babi6(const BabiData& data, const hcn::HcnConfig& cfg,
                  const std::function<void(std::size_t, double)>& on_epoch) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto train = babi_transitions(data.train);
  const auto valid = babi_transitions(data.valid);
  const auto test = babi_transitions(data.test);
  const auto inv = babi_inventory(data);
  const auto masks = babi_masks(inv.size());
  hcn::ModelFactory make = [&](const std::vector<dialogue::Transition>& ts) {
    std::vector<std::string> utterances;
    for (const auto& t : ts) {
      for (const auto& s : t.steps) utterances.push_back(s.utterance);
    }
    return hcn::HcnModel("babi6", inv, masks, utterances, cfg, {});
  };
  BabiRun run;
  hcn::HcnModel best;
  double best_acc = -1.0;
  hcn::train_epochs(make, train, cfg.max_epochs, [&](std::size_t e, const hcn::HcnModel& m) {
    const double acc = hcn::turn_accuracy(m, valid);
    run.valid_curve.push_back(acc);
    if (on_epoch) on_epoch(e, acc);
    if (acc > best_acc + 1e-12) {
      best_acc = acc;
      best = m;
      run.epochs = e;
    }
  });
  nlohmann::json fp = cfg;
  run.valid = report(hcn::predict_all(best, valid), hcn::gold_labels(valid), fp.dump());
  run.test = report(hcn::predict_all(best, test), hcn::gold_labels(test), fp.dump());
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return run;
}

}  // namespace topicflow::eval
