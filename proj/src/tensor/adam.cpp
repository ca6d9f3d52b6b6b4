#include "topicflow/tensor/adam.hpp"

#include <cmath>

#include "topicflow/error.hpp"

namespace topicflow::tensor {

AdamState make_adam_state(const std::vector<Param*>& params, AdamConfig config) {
  AdamState s;
  s.config = config;
  for (const Param* p : params) {
    s.first_moment.emplace_back(p->value.shape(), 0.0);
    s.second_moment.emplace_back(p->value.shape(), 0.0);
  }
  return s;
}

void adam_update(const std::vector<Param*>& params, AdamState& state) {
  if (params.size() != state.first_moment.size()) {
    throw ValidationError("adam: parameter count changed since state creation");
  }
  ++state.step;
  const auto& c = state.config;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Param& p = *params[i];
    if (!p.trainable) continue;
    if (!p.grad.same_shape(state.first_moment[i])) {
      throw ValidationError("adam: shape mismatch for " + p.name);
    }
    auto& m = state.first_moment[i].values();
    auto& v = state.second_moment[i].values();
    auto& w = p.value.values();
    const auto& g = p.grad.values();
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g[k];
      v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g[k] * g[k];
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      w[k] -= c.learning_rate * mhat / (std::sqrt(vhat) + c.epsilon);
    }
  }
}

void zero_grads(const std::vector<Param*>& params) {
  for (Param* p : params) p->zero_grad();
}

double clip_grad_norm(const std::vector<Param*>& params, double max_norm) {
  double sq = 0.0;
  for (const Param* p : params) {
    if (!p->trainable) continue;
    for (double g : p->grad.values()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (Param* p : params) {
      for (double& g : p->grad.values()) g *= scale;
    }
  }
  return norm;
}

}  // namespace topicflow::tensor
