#include "topicflow/hcn/training.hpp"

#include "topicflow/error.hpp"

namespace topicflow::hcn {

using dialogue::Transition;

TransitionSplit split_transitions(const std::vector<Transition>& all, std::uint64_t seed) {
  std::vector<std::size_t> order(all.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  tensor::Rng rng(seed);
  rng.shuffle(order);
  const std::size_t n_test = all.size() / 10;
  const std::size_t n_valid = all.size() / 10;
  const std::size_t n_train = all.size() - n_test - n_valid;
  TransitionSplit s;
  for (std::size_t k = 0; k < order.size(); ++k) {
    auto& dst = k < n_train ? s.train : (k < n_train + n_valid ? s.valid : s.test);
    dst.push_back(all[order[k]]);
  }
  return s;
}

HcnModel train_epochs(const ModelFactory& make, const std::vector<Transition>& train, std::size_t epochs,
                      const std::function<void(std::size_t, const HcnModel&)>& after_epoch,
                      std::vector<double>* losses) {
  HcnModel m = make(train);
  const auto& cfg = m.config().train;
  auto params = m.params();
  auto adam = tensor::make_adam_state(params, cfg.adam());
  tensor::Rng rng(cfg.seed + 1);
  for (std::size_t e = 1; e <= epochs; ++e) {
    auto l = tensor::run_epochs(train.size(), 1, cfg, params, adam, rng,
                                [&](std::size_t i, tensor::Rng& r) { return m.train_transition(train[i], &r); });
    if (losses) losses->push_back(l.front());
    m.set_epochs_used(e);
    if (after_epoch) after_epoch(e, m);
  }
  return m;
}

eval::Labels predict_all(const HcnModel& m, const std::vector<Transition>& ts) {
  eval::Labels out;
  for (const auto& t : ts) out.push_back(m.predict_transition(t));
  return out;
}

eval::Labels gold_labels(const std::vector<Transition>& ts) {
  eval::Labels out;
  for (const auto& t : ts) {
    std::vector<std::size_t> g;
    for (const auto& s : t.steps) g.push_back(s.class_id);
    out.push_back(std::move(g));
  }
  return out;
}

double turn_accuracy(const HcnModel& m, const std::vector<Transition>& ts) {
  return eval::turn_accuracy(predict_all(m, ts), gold_labels(ts));
}

EpochSelection cv_select_epochs(const ModelFactory& make, const std::vector<Transition>& train, std::size_t folds,
                                std::size_t max_epochs, std::uint64_t seed) {
  if (folds < 2) throw ValidationError("cross-validation needs at least 2 folds");
  if (train.size() < folds) {
    throw ValidationError("cross-validation: " + std::to_string(train.size()) + " transitions for " +
                          std::to_string(folds) + " folds");
  }
  if (max_epochs == 0) throw ValidationError("cross-validation: max_epochs must be positive");
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  tensor::Rng rng(seed);
  rng.shuffle(order);

  EpochSelection sel;
  sel.mean_curve.assign(max_epochs, 0.0);
  for (std::size_t f = 0; f < folds; ++f) {
    const std::size_t lo = f * train.size() / folds, hi = (f + 1) * train.size() / folds;
    std::vector<Transition> fit, held;
    for (std::size_t k = 0; k < order.size(); ++k) (k >= lo && k < hi ? held : fit).push_back(train[order[k]]);
    std::vector<double> curve;
    train_epochs(make, fit, max_epochs, [&](std::size_t, const HcnModel& m) { curve.push_back(turn_accuracy(m, held)); });
    for (std::size_t e = 0; e < max_epochs; ++e) sel.mean_curve[e] += curve[e] / static_cast<double>(folds);
    sel.fold_curves.push_back(std::move(curve));
  }
  std::size_t best = 0;
  for (std::size_t e = 1; e < max_epochs; ++e) {
    if (sel.mean_curve[e] > sel.mean_curve[best] + 1e-12) best = e;
  }
  sel.epochs = best + 1;
  return sel;
}

HcnTrainResult train_hcn(const std::string& dialogue_id, const dialogue::Inventory& inv,
                         const dialogue::ActionMaskTable& masks, const std::vector<Transition>& transitions,
                         const HcnConfig& cfg, FrozenFeaturizers frozen) {
  if (transitions.size() < cfg.folds) {
    throw ValidationError(dialogue_id + ": " + std::to_string(transitions.size()) + " transitions, need at least " +
                          std::to_string(cfg.folds));
  }
  ModelFactory make = [&](const std::vector<Transition>& train) {
    std::vector<std::string> utterances;
    for (const auto& t : train) {
      for (const auto& s : t.steps) utterances.push_back(s.utterance);
    }
    return HcnModel(dialogue_id, inv, masks, utterances, cfg, frozen);
  };
  HcnTrainResult r;
  r.split = split_transitions(transitions, cfg.train.seed);
  r.selection = cv_select_epochs(make, r.split.train, cfg.folds, cfg.max_epochs, cfg.train.seed);
  r.model = train_epochs(make, r.split.train, r.selection.epochs);
  r.train_accuracy = turn_accuracy(r.model, r.split.train);
  r.valid_accuracy = turn_accuracy(r.model, r.split.valid);
  r.test_accuracy = turn_accuracy(r.model, r.split.test);
  return r;
}

}  // namespace topicflow::hcn
