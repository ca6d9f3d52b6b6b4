#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

#include <nlohmann/json.hpp>

#include "topicflow/tensor/adam.hpp"
#include "topicflow/tensor/rng.hpp"

namespace topicflow::tensor {

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch = 16;
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip = 5.0;  // <= 0 disables clipping
  std::uint64_t seed = 1;

  AdamConfig adam() const { return {learning_rate, beta1, beta2, epsilon}; }
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

inline void scale_grads(const std::vector<Param*>& params, double s) {
  for (Param* p : params) {
    for (double& g : p->grad.values()) g *= s;
  }
}

/// Shuffled minibatch training. `step(i, rng)` runs forward/backward for
/// example i, accumulating gradients, and returns its loss. Gradients are
/// averaged over the batch before clipping and the Adam update. Returns the
/// mean loss of each epoch.
template <typename Step>
std::vector<double> run_epochs(std::size_t n, std::size_t epochs, const TrainConfig& cfg,
                               const std::vector<Param*>& params, AdamState& adam, Rng& rng,
                               Step&& step) {
  std::vector<double> losses;
  std::vector<std::size_t> order(n);
  const std::size_t batch = cfg.batch ? cfg.batch : 1;
  for (std::size_t e = 0; e < epochs; ++e) {
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    double total = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(n, start + batch);
      zero_grads(params);
      for (std::size_t k = start; k < end; ++k) total += step(order[k], rng);
      scale_grads(params, 1.0 / static_cast<double>(end - start));
      if (cfg.clip > 0) clip_grad_norm(params, cfg.clip);
      adam_update(params, adam);
    }
    losses.push_back(n ? total / static_cast<double>(n) : 0.0);
  }
  return losses;
}

}  // namespace topicflow::tensor
