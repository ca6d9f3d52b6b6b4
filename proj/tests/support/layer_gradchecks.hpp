#pragma once

// Finite-difference gradient checks for every tensor-core layer. Each check
// draws `points` random parameter/input configurations and reports the worst
// relative error between backprop and central differences.

#include <functional>

#include "unit/gradcheck.hpp"
#include "topicflow/tensor/adam.hpp"
#include "topicflow/tensor/crf.hpp"
#include "topicflow/tensor/layers.hpp"

namespace topicflow::testing {

using tensor::Rng;
using tensor::Vec;

inline Vec random_vec(Rng& rng, std::size_t n, double scale = 1.0) {
  Vec v(n);
  for (auto& x : v) x = rng.uniform(-scale, scale);
  return v;
}

inline std::vector<Vec> random_seq(Rng& rng, std::size_t T, std::size_t n) {
  std::vector<Vec> xs;
  for (std::size_t t = 0; t < T; ++t) xs.push_back(random_vec(rng, n));
  return xs;
}

inline void randomize(const std::vector<tensor::Param*>& ps, Rng& rng, double scale = 0.8) {
  for (auto* p : ps) {
    for (auto& v : p->value.values()) v = rng.uniform(-scale, scale);
  }
}

inline GradCheckResult gradcheck_dense(std::size_t points, std::uint64_t seed) {
  GradCheckResult res;
  for (std::size_t pt = 0; pt < points; ++pt) {
    Rng rng(seed + pt);
    tensor::Dense layer("d", 4, 3, rng);
    randomize(layer.params(), rng);
    Vec x = random_vec(rng, 4);
    Vec r = random_vec(rng, 3);
    auto loss = [&] { return tensor::dot(layer.forward(x), r); };
    tensor::zero_grads(layer.params());
    Vec dx = layer.backward(x, r);
    check_params(layer.params(), loss, res);
    check_values(x, dx, loss, res);
  }
  return res;
}

inline GradCheckResult gradcheck_text_cnn(std::size_t points, std::uint64_t seed,
                                          tensor::Activation act) {
  GradCheckResult res;
  for (std::size_t pt = 0; pt < points; ++pt) {
    Rng rng(seed + pt);
    tensor::TextCnnConfig cfg;
    cfg.widths = {1, 2, 3};
    cfg.filters = 2;
    cfg.activation = act;
    tensor::TextCnn cnn("c", 3, cfg, rng);
    randomize(cnn.params(), rng);
    const std::size_t T = 1 + rng.below(5);
    std::vector<Vec> xs = random_seq(rng, T, 3);
    Vec pad(3, 0.0);
    Vec r = random_vec(rng, cnn.output_dim());
    auto loss = [&] { return tensor::dot(cnn.forward(xs, pad, nullptr), r); };
    tensor::zero_grads(cnn.params());
    tensor::TextCnn::Cache cache;
    cnn.forward(xs, pad, &cache);
    auto dxs = cnn.backward(cache, r);
    check_params(cnn.params(), loss, res);
    for (std::size_t t = 0; t < T; ++t) check_values(xs[t], dxs[t], loss, res);
  }
  return res;
}

inline GradCheckResult gradcheck_embedding(std::size_t points, std::uint64_t seed) {
  GradCheckResult res;
  for (std::size_t pt = 0; pt < points; ++pt) {
    Rng rng(seed + pt);
    tensor::Vocabulary vocab;
    for (const char* w : {"a", "b", "c", "d"}) vocab.add(w);
    auto table = tensor::make_embedding_table(vocab, 3, nullptr, true, 0.5);
    tensor::Embedding emb("e", table);
    tensor::TextCnnConfig cfg;
    cfg.widths = {1, 2};
    cfg.filters = 2;
    cfg.activation = tensor::Activation::tanh;
    tensor::TextCnn cnn("c", 3, cfg, rng);
    randomize(cnn.params(), rng);
    std::vector<std::size_t> ids;
    for (std::size_t t = 0, T = 1 + rng.below(4); t < T; ++t) ids.push_back(1 + rng.below(5));
    Vec r = random_vec(rng, cnn.output_dim());
    auto loss = [&] { return tensor::dot(tensor::text_cnn_features(ids, emb, cnn), r); };
    tensor::zero_grads(emb.params());
    tensor::zero_grads(cnn.params());
    tensor::TextCnn::Cache cache;
    cnn.forward(emb.forward(ids), emb.padding_row(), &cache);
    emb.backward(ids, cnn.backward(cache, r));
    // Padding row is frozen by construction; check the others.
    std::vector<double> analytic(emb.table.grad.values().begin() + 3, emb.table.grad.values().end());
    std::vector<double> values(emb.table.value.values().begin() + 3, emb.table.value.values().end());
    auto loss_rows = [&] {
      std::copy(values.begin(), values.end(), emb.table.value.values().begin() + 3);
      return loss();
    };
    check_values(values, analytic, loss_rows, res);
    std::copy(values.begin(), values.end(), emb.table.value.values().begin() + 3);
  }
  return res;
}

inline GradCheckResult gradcheck_lstm(std::size_t points, std::uint64_t seed) {
  GradCheckResult res;
  for (std::size_t pt = 0; pt < points; ++pt) {
    Rng rng(seed + pt);
    tensor::Lstm lstm("l", 3, 3, rng);
    randomize(lstm.params(), rng);
    const std::size_t T = 1 + rng.below(4);
    std::vector<Vec> xs = random_seq(rng, T, 3);
    std::vector<Vec> rs = random_seq(rng, T, 3);
    auto loss = [&] {
      auto hs = lstm.sequence(xs, nullptr);
      double s = 0;
      for (std::size_t t = 0; t < T; ++t) s += tensor::dot(hs[t], rs[t]);
      return s;
    };
    tensor::zero_grads(lstm.params());
    std::vector<tensor::Lstm::StepCache> caches;
    lstm.sequence(xs, &caches);
    auto dxs = lstm.sequence_backward(caches, rs);
    check_params(lstm.params(), loss, res);
    for (std::size_t t = 0; t < T; ++t) check_values(xs[t], dxs[t], loss, res);
  }
  return res;
}

inline GradCheckResult gradcheck_gru(std::size_t points, std::uint64_t seed) {
  GradCheckResult res;
  for (std::size_t pt = 0; pt < points; ++pt) {
    Rng rng(seed + pt);
    tensor::Gru gru("g", 3, 3, rng);
    randomize(gru.params(), rng);
    const std::size_t T = 1 + rng.below(4);
    std::vector<Vec> xs = random_seq(rng, T, 3);
    std::vector<Vec> rs = random_seq(rng, T, 3);
    auto loss = [&] {
      auto hs = gru.sequence(xs, nullptr);
      double s = 0;
      for (std::size_t t = 0; t < T; ++t) s += tensor::dot(hs[t], rs[t]);
      return s;
    };
    tensor::zero_grads(gru.params());
    std::vector<tensor::Gru::StepCache> caches;
    gru.sequence(xs, &caches);
    auto dxs = gru.sequence_backward(caches, rs);
    check_params(gru.params(), loss, res);
    for (std::size_t t = 0; t < T; ++t) check_values(xs[t], dxs[t], loss, res);
  }
  return res;
}

inline GradCheckResult gradcheck_birnn(std::size_t points, std::uint64_t seed, tensor::CellKind kind) {
  GradCheckResult res;
  for (std::size_t pt = 0; pt < points; ++pt) {
    Rng rng(seed + pt);
    tensor::BiRnn rnn("b", kind, 3, 2, rng);
    randomize(rnn.params(), rng);
    const std::size_t T = 1 + rng.below(4);
    std::vector<Vec> xs = random_seq(rng, T, 3);
    std::vector<Vec> rs = random_seq(rng, T, 4);
    Vec rf = random_vec(rng, 4);
    auto loss = [&] {
      tensor::BiRnn::Cache c;
      auto ys = rnn.forward(xs, &c);
      double s = tensor::dot(tensor::BiRnn::final_state(c), rf);
      for (std::size_t t = 0; t < T; ++t) s += tensor::dot(ys[t], rs[t]);
      return s;
    };
    tensor::zero_grads(rnn.params());
    tensor::BiRnn::Cache cache;
    rnn.forward(xs, &cache);
    auto dxs = rnn.backward(cache, rs, rf);
    check_params(rnn.params(), loss, res);
    for (std::size_t t = 0; t < T; ++t) check_values(xs[t], dxs[t], loss, res);
  }
  return res;
}

inline GradCheckResult gradcheck_crf(std::size_t points, std::uint64_t seed) {
  GradCheckResult res;
  for (std::size_t pt = 0; pt < points; ++pt) {
    Rng rng(seed + pt);
    const std::size_t T = 1 + rng.below(4), K = 2 + rng.below(3);
    tensor::Tensor e({T, K}, random_vec(rng, T * K, 2.0));
    tensor::Tensor tr({K, K}, random_vec(rng, K * K, 2.0));
    std::vector<std::size_t> tags(T);
    for (auto& t : tags) t = rng.below(K);
    tensor::Tensor de({T, K}, 0.0), dtr({K, K}, 0.0);
    tensor::crf_nll_backward(e, tr, tags, de, dtr);
    auto loss = [&] { return -tensor::crf_log_likelihood(e, tr, tags); };
    check_values(e.values(), de.values(), loss, res);
    check_values(tr.values(), dtr.values(), loss, res);
  }
  return res;
}

inline GradCheckResult gradcheck_softmax_ce(std::size_t points, std::uint64_t seed) {
  GradCheckResult res;
  for (std::size_t pt = 0; pt < points; ++pt) {
    Rng rng(seed + pt);
    const std::size_t K = 2 + rng.below(5);
    Vec logits = random_vec(rng, K, 3.0);
    const std::size_t gold = rng.below(K);
    Vec d;
    tensor::softmax_cross_entropy(logits, gold, &d);
    auto loss = [&] { return tensor::softmax_cross_entropy(logits, gold, nullptr); };
    check_values(logits, d, loss, res);
  }
  return res;
}

struct NamedGradCheck {
  const char* name;
  std::function<GradCheckResult()> run;
};

inline std::vector<NamedGradCheck> all_layer_gradchecks(std::size_t points, std::uint64_t seed) {
  return {
      {"dense", [=] { return gradcheck_dense(points, seed); }},
      {"embedding", [=] { return gradcheck_embedding(points, seed); }},
      {"text_cnn_relu", [=] { return gradcheck_text_cnn(points, seed, tensor::Activation::relu); }},
      {"text_cnn_tanh", [=] { return gradcheck_text_cnn(points, seed, tensor::Activation::tanh); }},
      {"lstm", [=] { return gradcheck_lstm(points, seed); }},
      {"gru", [=] { return gradcheck_gru(points, seed); }},
      {"bilstm", [=] { return gradcheck_birnn(points, seed, tensor::CellKind::lstm); }},
      {"bigru", [=] { return gradcheck_birnn(points, seed, tensor::CellKind::gru); }},
      {"crf", [=] { return gradcheck_crf(points, seed); }},
      {"softmax_cross_entropy", [=] { return gradcheck_softmax_ce(points, seed); }},
  };
}

}  // namespace topicflow::testing
