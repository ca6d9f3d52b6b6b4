#include "topicflow/eval/hpo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "topicflow/error.hpp"

namespace topicflow::eval {

using nlohmann::json;

SearchSpace babi_search_space() {
  SearchSpace s;
  s.numeric["lstm_size"] = {32, 512, true, true};
  s.numeric["filters"] = {4, 64, true, true};
  s.numeric["lstm_keep"] = {0.5, 1.0};
  s.numeric["conv_keep"] = {0.5, 1.0};
  s.numeric["fc_keep"] = {0.5, 1.0};
  s.numeric["input_lstm_keep"] = {0.5, 1.0};
  s.numeric["learning_rate"] = {1e-4, 1e-2, true};
  s.numeric["beta1"] = {0.8, 0.99};
  s.numeric["epsilon"] = {1e-9, 1e-6, true};
  s.choices["activation"] = {"relu", "tanh", "sigmoid"};
  s.choices["input_activation"] = {"relu", "tanh", "sigmoid"};
  return s;
}

json sample_params(const SearchSpace& space, tensor::Rng& rng) {
  json p = json::object();
  for (const auto& [name, r] : space.numeric) {
    if (r.hi < r.lo) throw ValidationError("search space: " + name + " has hi < lo");
    if (r.log_scale && r.lo <= 0) throw ValidationError("search space: log range " + name + " must be positive");
    const double u = rng.uniform();
    double v = r.log_scale ? std::exp(std::log(r.lo) + u * (std::log(r.hi) - std::log(r.lo))) : r.lo + u * (r.hi - r.lo);
    if (r.integer) {
      p[name] = static_cast<long long>(std::clamp(std::round(v), std::ceil(r.lo), std::floor(r.hi)));
    } else {
      p[name] = std::clamp(v, r.lo, r.hi);
    }
  }
  for (const auto& [name, options] : space.choices) {
    if (options.empty()) throw ValidationError("search space: " + name + " has no choices");
    p[name] = options[rng.below(options.size())];
  }
  return p;
}

HpoResult hpo_random_search(const SearchSpace& space, std::size_t budget, std::uint64_t seed,
                            const std::function<double(const json&)>& evaluate) {
  if (budget == 0) throw ValidationError("random search: zero budget");
  tensor::Rng rng(seed);
  HpoResult r;
  for (std::size_t i = 0; i < budget; ++i) {
    Trial t{i, sample_params(space, rng), 0.0};
    t.score = evaluate(t.params);
    if (r.trials.empty() || t.score > r.best_score) {
      r.best = t.params;
      r.best_score = t.score;
    }
    r.trials.push_back(std::move(t));
  }
  return r;
}

hcn::HcnConfig apply_params(hcn::HcnConfig cfg, const json& p) {
  for (const auto& [k, v] : p.items()) {
    if (k == "lstm_size") cfg.lstm_size = v.get<std::size_t>();
    else if (k == "filters") cfg.filters = v.get<std::size_t>();
    else if (k == "lstm_keep") cfg.lstm_keep = v.get<double>();
    else if (k == "conv_keep") cfg.conv_keep = v.get<double>();
    else if (k == "fc_keep") cfg.fc_keep = v.get<double>();
    else if (k == "input_lstm_keep") cfg.input_lstm_keep = v.get<double>();
    else if (k == "learning_rate") cfg.train.learning_rate = v.get<double>();
    else if (k == "beta1") cfg.train.beta1 = v.get<double>();
    else if (k == "epsilon") cfg.train.epsilon = v.get<double>();
    else if (k == "activation") cfg.activation = v.get<std::string>();
    else if (k == "input_activation") cfg.input_activation = v.get<std::string>();
    else throw ValidationError("unknown hyperparameter " + k);
  }
  return cfg;
}

void write_trial_log(const std::filesystem::path& path, const HpoResult& r) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  for (const auto& t : r.trials) out << json{{"trial", t.index}, {"params", t.params}, {"score", t.score}}.dump() << "\n";
}

std::string format_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size(), 0);
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& row : rows) {
    if (row.size() != header.size()) throw ValidationError("table row has " + std::to_string(row.size()) + " cells");
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  auto line = [&](const std::vector<std::string>& cells) {
    std::string s;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c) s += "  ";
      s += cells[c];
      if (c + 1 < cells.size()) s += std::string(width[c] - cells[c].size(), ' ');
    }
    return s + "\n";
  };
  std::string out = line(header);
  std::vector<std::string> rule;
  for (auto w : width) rule.push_back(std::string(w, '-'));
  out += line(rule);
  for (const auto& row : rows) out += line(row);
  return out;
}

}  // namespace topicflow::eval
