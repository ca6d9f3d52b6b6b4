#include "topicflow/engine/paraphrase.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "topicflow/error.hpp"
#include "topicflow/nlu/tokenizer.hpp"

namespace topicflow::engine {

Paraphraser::Paraphraser(std::vector<Rule> rules) : rules_(std::move(rules)) {
  std::stable_sort(rules_.begin(), rules_.end(),
                   [](const Rule& a, const Rule& b) { return a.from.size() > b.from.size(); });
}

Paraphraser Paraphraser::parse(const std::string& text, const std::string& source) {
  std::vector<Rule> rules;
  std::istringstream in(text);
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError(source, no, "expected from<TAB>to");
    Rule r{nlu::words(line.substr(0, tab)), nlu::words(line.substr(tab + 1))};
    if (r.from.empty() || r.to.empty()) throw ParseError(source, no, "empty side in paraphrase rule");
    rules.push_back(std::move(r));
  }
  return Paraphraser(std::move(rules));
}

Paraphraser Paraphraser::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read paraphrase rules " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

bool Paraphraser::eligible(const std::string& message) {
  const auto w = nlu::words(message);
  if (w.size() < 2 || w.size() > 9) return false;
  return std::any_of(w.begin(), w.end(), [](const std::string& t) { return t == "i" || t == "you"; });
}

std::string Paraphraser::restate(const std::string& message) const {
  const auto toks = nlu::tokenize(message);
  std::vector<std::string> w, out;
  for (const auto& t : toks) w.push_back(t.text);
  std::size_t i = 0;
  while (i < w.size()) {
    const Rule* hit = nullptr;
    for (const auto& r : rules_) {
      if (i + r.from.size() <= w.size() && std::equal(r.from.begin(), r.from.end(), w.begin() + static_cast<std::ptrdiff_t>(i))) {
        hit = &r;
        break;
      }
    }
    if (hit) {
      out.insert(out.end(), hit->to.begin(), hit->to.end());
      i += hit->from.size();
    } else {
      // unmatched words keep their original spelling
      out.push_back(message.substr(toks[i].begin, toks[i].end - toks[i].begin));
      ++i;
    }
  }
  return nlu::join(out);
}

std::optional<std::string> Paraphraser::paraphrase(const std::string& message, tensor::Rng& rng,
                                                   double probability) const {
  if (!eligible(message)) return std::nullopt;
  if (!rng.bernoulli(probability)) return std::nullopt;
  return restate(message);
}

std::string prepend_restatement(const std::string& restatement, const std::string& response) {
  return restatement + ". " + response;
}

}  // namespace topicflow::engine
