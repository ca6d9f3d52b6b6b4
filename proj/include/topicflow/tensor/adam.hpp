#pragma once

#include <vector>

#include "topicflow/tensor/tensor.hpp"

namespace topicflow::tensor {

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::size_t step = 0;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
};

AdamState make_adam_state(const std::vector<Param*>& params, AdamConfig config);

/// One bias-corrected Adam step using each parameter's accumulated gradient.
/// Frozen parameters are skipped; gradients are left untouched.
void adam_update(const std::vector<Param*>& params, AdamState& state);

void zero_grads(const std::vector<Param*>& params);
/// Rescales all gradients so their joint L2 norm is at most `max_norm`.
double clip_grad_norm(const std::vector<Param*>& params, double max_norm);

}  // namespace topicflow::tensor
