#pragma once

#include <functional>

#include "topicflow/eval/metrics.hpp"
#include "topicflow/hcn/model.hpp"

namespace topicflow::hcn {

struct TransitionSplit {
  std::vector<dialogue::Transition> train, valid, test;
};

/// Shuffled 80/10/10 split by whole transitions.
TransitionSplit split_transitions(const std::vector<dialogue::Transition>& all, std::uint64_t seed);

using ModelFactory = std::function<HcnModel(const std::vector<dialogue::Transition>& train)>;

/// Trains a fresh model for `epochs` epochs; `after_epoch(epoch, model)` runs
/// after each one.
HcnModel train_epochs(const ModelFactory& make, const std::vector<dialogue::Transition>& train,
                      std::size_t epochs, const std::function<void(std::size_t, const HcnModel&)>& after_epoch = {},
                      std::vector<double>* losses = nullptr);

eval::Labels predict_all(const HcnModel& m, const std::vector<dialogue::Transition>& ts);
eval::Labels gold_labels(const std::vector<dialogue::Transition>& ts);
double turn_accuracy(const HcnModel& m, const std::vector<dialogue::Transition>& ts);

struct EpochSelection {
  std::size_t epochs = 0;
  std::vector<std::vector<double>> fold_curves;  // validation turn accuracy per epoch
  std::vector<double> mean_curve;
};

/// k-fold over whole transitions (contiguous folds of a seeded shuffle).
/// Picks the epoch with the best mean validation turn accuracy; ties go to
/// fewer epochs.
EpochSelection cv_select_epochs(const ModelFactory& make, const std::vector<dialogue::Transition>& train,
                                std::size_t folds, std::size_t max_epochs, std::uint64_t seed);

struct HcnTrainResult {
  HcnModel model;
  TransitionSplit split;
  EpochSelection selection;
  double train_accuracy = 0.0;
  double valid_accuracy = 0.0;
  double test_accuracy = 0.0;
};

/// Full protocol: split, cross-validate the epoch count on the training part,
/// retrain on all of it.
HcnTrainResult train_hcn(const std::string& dialogue_id, const dialogue::Inventory& inv,
                         const dialogue::ActionMaskTable& masks, const std::vector<dialogue::Transition>& transitions,
                         const HcnConfig& cfg, FrozenFeaturizers frozen);

}  // namespace topicflow::hcn
