#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "topicflow/error.hpp"

namespace topicflow::eval {

using Labels = std::vector<std::vector<std::size_t>>;  // per dialogue, per turn

inline void check_aligned(const Labels& preds, const Labels& golds) {
  if (preds.size() != golds.size()) throw ValidationError("prediction and gold dialogue counts differ");
  for (std::size_t d = 0; d < preds.size(); ++d) {
    if (preds[d].size() != golds[d].size()) {
      throw ValidationError("dialogue " + std::to_string(d) + ": prediction and gold turn counts differ");
    }
  }
}

inline double turn_accuracy(const Labels& preds, const Labels& golds) {
  check_aligned(preds, golds);
  std::size_t ok = 0, total = 0;
  for (std::size_t d = 0; d < preds.size(); ++d) {
    for (std::size_t t = 0; t < preds[d].size(); ++t, ++total) ok += preds[d][t] == golds[d][t];
  }
  return total ? static_cast<double>(ok) / static_cast<double>(total) : 0.0;
}

inline double dialogue_accuracy(const Labels& preds, const Labels& golds) {
  check_aligned(preds, golds);
  if (preds.empty()) return 0.0;
  std::size_t ok = 0;
  for (std::size_t d = 0; d < preds.size(); ++d) ok += preds[d] == golds[d];
  return static_cast<double>(ok) / static_cast<double>(preds.size());
}

/// Mean over dialogues of each dialogue's turn accuracy.
inline double macro_turn_accuracy(const Labels& preds, const Labels& golds) {
  check_aligned(preds, golds);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t d = 0; d < preds.size(); ++d) {
    if (golds[d].empty()) continue;
    std::size_t ok = 0;
    for (std::size_t t = 0; t < preds[d].size(); ++t) ok += preds[d][t] == golds[d][t];
    sum += static_cast<double>(ok) / static_cast<double>(golds[d].size());
    ++n;
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

struct MetricsReport {
  double turn_accuracy = 0.0;
  double macro_turn_accuracy = 0.0;
  double dialogue_accuracy = 0.0;
  std::size_t dialogues = 0;
  std::size_t turns = 0;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> confusion;  // (gold, predicted) -> count
  std::string fingerprint;
};

inline MetricsReport report(const Labels& preds, const Labels& golds, std::string fingerprint = "") {
  MetricsReport r;
  r.turn_accuracy = turn_accuracy(preds, golds);
  r.dialogue_accuracy = dialogue_accuracy(preds, golds);
  r.macro_turn_accuracy = macro_turn_accuracy(preds, golds);
  r.dialogues = golds.size();
  for (std::size_t d = 0; d < golds.size(); ++d) {
    for (std::size_t t = 0; t < golds[d].size(); ++t) ++r.confusion[{golds[d][t], preds[d][t]}];
    r.turns += golds[d].size();
  }
  r.fingerprint = std::move(fingerprint);
  // Against the pooled turn accuracy this can fail when lengths differ.
  if (r.dialogue_accuracy > r.macro_turn_accuracy + 1e-12) {
    throw std::logic_error("dialogue accuracy above per-dialogue turn accuracy");
  }
  return r;
}

}  // namespace topicflow::eval
