#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "topicflow/tensor/embedding.hpp"
#include "topicflow/tensor/rng.hpp"
#include "topicflow/tensor/tensor.hpp"

namespace topicflow::tensor {

enum class Activation { identity, relu, tanh, sigmoid };

Activation parse_activation(std::string_view name);
std::string_view activation_name(Activation a);
double activate(Activation a, double x);
/// Derivative expressed through the activation output y = f(x).
double activation_grad(Activation a, double y);

double sigmoid(double x);
double logsumexp(std::span<const double> v);
Vec softmax(std::span<const double> logits);
/// -log softmax(logits)[gold]; writes d(loss)/d(logits) when `dlogits` is given.
double softmax_cross_entropy(std::span<const double> logits, std::size_t gold, Vec* dlogits);
std::size_t argmax(std::span<const double> v);

/// Inverted dropout mask: entries are 0 or 1/keep.
Vec dropout_mask(std::size_t n, double keep, Rng& rng);
void apply_mask(std::span<double> x, std::span<const double> mask);

/// y = W x + b.
class Dense {
 public:
  Dense() = default;
  Dense(const std::string& name, std::size_t in, std::size_t out, Rng& rng);

  std::size_t in_dim() const { return weight.value.cols(); }
  std::size_t out_dim() const { return weight.value.rows(); }

  Vec forward(std::span<const double> x) const;
  /// Accumulates parameter gradients and returns d(loss)/dx.
  Vec backward(std::span<const double> x, std::span<const double> dy);
  std::vector<Param*> params() { return {&weight, &bias}; }

  Param weight;
  Param bias;
};

/// Trainable lookup table. The padding row never receives gradient.
class Embedding {
 public:
  Embedding() = default;
  Embedding(const std::string& name, const EmbeddingTable& table);

  std::size_t dim() const { return table.value.cols(); }
  std::vector<std::size_t> encode(const std::vector<std::string>& tokens) const {
    return vocabulary.encode(tokens);
  }
  std::vector<Vec> forward(const std::vector<std::size_t>& ids) const;
  void backward(const std::vector<std::size_t>& ids, const std::vector<Vec>& dxs);
  std::span<const double> padding_row() const { return table.value.row(Vocabulary::kPad); }
  std::vector<Param*> params() { return {&table}; }

  Vocabulary vocabulary;
  Param table;
};

struct TextCnnConfig {
  std::vector<std::size_t> widths{1, 2, 3, 4, 5};
  std::size_t filters = 32;
  Activation activation = Activation::relu;
};

/// Multi-width 1-D convolution over a sequence of vectors followed by global
/// max pooling over time. Same padding; inputs shorter than the widest filter
/// are right-padded to that width first.
class TextCnn {
 public:
  struct Cache {
    std::vector<Vec> inputs;            // padded sequence actually convolved
    std::size_t original_length = 0;
    std::vector<std::size_t> argmax;    // per output feature: winning position
    Vec output;                         // pooled activations
  };

  TextCnn() = default;
  TextCnn(const std::string& name, std::size_t input_dim, TextCnnConfig config, Rng& rng);

  std::size_t output_dim() const { return config_.widths.size() * config_.filters; }
  std::size_t input_dim() const { return input_dim_; }
  const TextCnnConfig& config() const { return config_; }

  Vec forward(const std::vector<Vec>& xs, std::span<const double> pad, Cache* cache) const;
  /// Returns d(loss)/dx for the original (unpadded) positions.
  std::vector<Vec> backward(const Cache& cache, std::span<const double> dy);
  std::vector<Param*> params();

  std::vector<Param> weights;  // one [filters x (width*input_dim)] per width
  std::vector<Param> biases;

 private:
  double window_response(const std::vector<Vec>& xs, std::span<const double> pad, std::size_t g,
                         std::size_t f, std::size_t t) const;

  std::size_t input_dim_ = 0;
  TextCnnConfig config_;
};

/// Embedding lookup followed by TextCnn; the pooled feature vector.
Vec text_cnn_features(const std::vector<std::size_t>& ids, const Embedding& embedding,
                      const TextCnn& cnn);

class Lstm {
 public:
  struct State {
    Vec h;
    Vec c;
  };
  struct StepCache {
    Vec x, h_prev, c_prev, i, f, g, o, c, tanh_c;
  };
  struct StepGrad {
    Vec dx, dh_prev, dc_prev;
  };

  Lstm() = default;
  Lstm(const std::string& name, std::size_t input_dim, std::size_t hidden, Rng& rng);

  std::size_t input_dim() const { return weight.value.cols() - hidden(); }
  std::size_t hidden() const { return bias.value.size() / 4; }
  State zero_state() const { return {Vec(hidden(), 0.0), Vec(hidden(), 0.0)}; }

  State step(std::span<const double> x, const State& state, StepCache* cache) const;
  StepGrad step_backward(const StepCache& cache, std::span<const double> dh,
                         std::span<const double> dc);
  /// Runs from `init` (zero when empty); returns hidden states.
  std::vector<Vec> sequence(const std::vector<Vec>& xs, std::vector<StepCache>* caches,
                            const State* init = nullptr) const;
  /// BPTT. `dhs[t]` is the loss gradient w.r.t. the hidden output at t.
  std::vector<Vec> sequence_backward(const std::vector<StepCache>& caches,
                                     const std::vector<Vec>& dhs);
  std::vector<Param*> params() { return {&weight, &bias}; }

  Param weight;  // [4H x (X+H)], gate order i f g o
  Param bias;    // [4H]
};

class Gru {
 public:
  struct StepCache {
    Vec x, h_prev, z, r, n, rh;
  };

  Gru() = default;
  Gru(const std::string& name, std::size_t input_dim, std::size_t hidden, Rng& rng);

  std::size_t hidden() const { return bias.value.size() / 3; }
  std::size_t input_dim() const { return input_weight.value.cols(); }

  Vec step(std::span<const double> x, std::span<const double> h, StepCache* cache) const;
  std::vector<Vec> sequence(const std::vector<Vec>& xs, std::vector<StepCache>* caches) const;
  std::vector<Vec> sequence_backward(const std::vector<StepCache>& caches,
                                     const std::vector<Vec>& dhs);
  std::vector<Param*> params() { return {&input_weight, &recurrent_weight, &bias}; }

  Param input_weight;      // [3H x X], blocks z r n
  Param recurrent_weight;  // [3H x H]
  Param bias;              // [3H]
};

enum class CellKind { lstm, gru };
CellKind parse_cell(std::string_view name);

/// Bidirectional recurrence; per-step outputs are [forward_h ; backward_h].
class BiRnn {
 public:
  struct Cache {
    std::vector<Lstm::StepCache> lf, lb;
    std::vector<Gru::StepCache> gf, gb;
    std::vector<Vec> hf, hb;  // backward states stored in original time order
  };

  BiRnn() = default;
  BiRnn(const std::string& name, CellKind kind, std::size_t input_dim, std::size_t hidden,
        Rng& rng);

  std::size_t hidden() const { return hidden_; }
  std::size_t output_dim() const { return 2 * hidden_; }
  CellKind kind() const { return kind_; }

  std::vector<Vec> forward(const std::vector<Vec>& xs, Cache* cache) const;
  /// [forward state at T-1 ; backward state at 0].
  static Vec final_state(const Cache& cache);
  /// `dys` per step (size 2H each, may be empty for no gradient); `dfinal` on final_state.
  std::vector<Vec> backward(const Cache& cache, const std::vector<Vec>& dys,
                            std::span<const double> dfinal = {});
  std::vector<Param*> params();

  Lstm forward_lstm, backward_lstm;
  Gru forward_gru, backward_gru;

 private:
  CellKind kind_ = CellKind::lstm;
  std::size_t hidden_ = 0;
};

/// Convenience wrapper over two LSTMs.
std::vector<Vec> bilstm_sequence(const Lstm& forward, const Lstm& backward,
                                 const std::vector<Vec>& xs);

}  // namespace topicflow::tensor
