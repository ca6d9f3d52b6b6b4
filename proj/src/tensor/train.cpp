#include "topicflow/tensor/train.hpp"

namespace topicflow::tensor {

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"epochs", c.epochs},   {"batch", c.batch}, {"learning_rate", c.learning_rate},
       {"beta1", c.beta1},     {"beta2", c.beta2}, {"epsilon", c.epsilon},
       {"clip", c.clip},       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  c.epochs = j.value("epochs", c.epochs);
  c.batch = j.value("batch", c.batch);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.epsilon = j.value("epsilon", c.epsilon);
  c.clip = j.value("clip", c.clip);
  c.seed = j.value("seed", c.seed);
}

}  // namespace topicflow::tensor
