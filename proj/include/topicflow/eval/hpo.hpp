#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "topicflow/hcn/model.hpp"

namespace topicflow::eval {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  bool log_scale = false;
  bool integer = false;
};

/// Sampled in key order: numeric ranges first, then categorical choices.
struct SearchSpace {
  std::map<std::string, Range> numeric;
  std::map<std::string, std::vector<std::string>> choices;
};

/// Ranges for the bAbI preset hyperparameters.
SearchSpace babi_search_space();

struct Trial {
  std::size_t index = 0;
  nlohmann::json params;
  double score = 0.0;  // validation turn accuracy
};

struct HpoResult {
  nlohmann::json best;
  double best_score = 0.0;
  std::vector<Trial> trials;
};

nlohmann::json sample_params(const SearchSpace& space, tensor::Rng& rng);

/// Seeded random search. `evaluate` scores one parameter set; the first of
/// equally scored trials wins.
HpoResult hpo_random_search(const SearchSpace& space, std::size_t budget, std::uint64_t seed,
                            const std::function<double(const nlohmann::json&)>& evaluate);

/// Overrides the named fields of an HCN config (lstm_size, filters, lstm_keep,
/// conv_keep, fc_keep, input_lstm_keep, learning_rate, beta1, epsilon,
/// activation, input_activation).
hcn::HcnConfig apply_params(hcn::HcnConfig cfg, const nlohmann::json& params);

/// One JSON record per trial.
void write_trial_log(const std::filesystem::path& path, const HpoResult& r);

/// Aligned columns; numbers are already formatted by the caller.
std::string format_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows);

}  // namespace topicflow::eval
