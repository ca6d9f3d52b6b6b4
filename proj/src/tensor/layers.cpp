#include "topicflow/tensor/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "topicflow/error.hpp"

namespace topicflow::tensor {

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "identity" || name == "linear" || name == "none") return Activation::identity;
  throw ValidationError("unknown activation '" + std::string(name) + "'");
}

std::string_view activation_name(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
    case Activation::identity: return "identity";
  }
  return "identity";
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double activate(Activation a, double x) {
  switch (a) {
    case Activation::relu: return x > 0 ? x : 0.0;
    case Activation::tanh: return std::tanh(x);
    case Activation::sigmoid: return sigmoid(x);
    case Activation::identity: return x;
  }
  return x;
}

double activation_grad(Activation a, double y) {
  switch (a) {
    case Activation::relu: return y > 0 ? 1.0 : 0.0;
    case Activation::tanh: return 1.0 - y * y;
    case Activation::sigmoid: return y * (1.0 - y);
    case Activation::identity: return 1.0;
  }
  return 1.0;
}

double logsumexp(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

Vec softmax(std::span<const double> logits) {
  Vec p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double m = *std::max_element(p.begin(), p.end());
  double s = 0.0;
  for (auto& x : p) {
    x = std::exp(x - m);
    s += x;
  }
  for (auto& x : p) x /= s;
  return p;
}

double softmax_cross_entropy(std::span<const double> logits, std::size_t gold, Vec* dlogits) {
  const double lse = logsumexp(logits);
  if (dlogits) {
    dlogits->resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) (*dlogits)[i] = std::exp(logits[i] - lse);
    (*dlogits)[gold] -= 1.0;
  }
  return lse - logits[gold];
}

std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

Vec dropout_mask(std::size_t n, double keep, Rng& rng) {
  Vec m(n, 1.0);
  if (keep >= 1.0) return m;
  for (auto& x : m) x = rng.uniform() < keep ? 1.0 / keep : 0.0;
  return m;
}

void apply_mask(std::span<double> x, std::span<const double> mask) {
  if (mask.empty()) return;
  for (std::size_t i = 0; i < x.size(); ++i) x[i] *= mask[i];
}

namespace {

Tensor xavier(std::size_t rows, std::size_t cols, Rng& rng) {
  Tensor t = Tensor::matrix(rows, cols);
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  for (auto& v : t.values()) v = rng.uniform(-limit, limit);
  return t;
}

// y += W x for a row-major [rows x cols] block starting at `col0`.
void matvec_add(const Tensor& w, std::span<const double> x, std::size_t col0, std::span<double> y) {
  const std::size_t cols = w.cols();
  for (std::size_t r = 0; r < y.size(); ++r) {
    const double* row = w.values().data() + r * cols + col0;
    double s = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) s += row[c] * x[c];
    y[r] += s;
  }
}

// dW[:, col0:col0+|x|] += dy x^T ; dx += W[:, col0:]^T dy
void matvec_backward(const Tensor& w, Tensor& dw, std::span<const double> x,
                     std::span<const double> dy, std::size_t col0, std::span<double> dx) {
  const std::size_t cols = w.cols();
  for (std::size_t r = 0; r < dy.size(); ++r) {
    const double g = dy[r];
    if (g == 0.0) continue;
    const double* wrow = w.values().data() + r * cols + col0;
    double* grow = dw.values().data() + r * cols + col0;
    for (std::size_t c = 0; c < x.size(); ++c) {
      grow[c] += g * x[c];
      if (!dx.empty()) dx[c] += g * wrow[c];
    }
  }
}

}  // namespace

// ---------------------------------------------------------------- Dense

Dense::Dense(const std::string& name, std::size_t in, std::size_t out, Rng& rng)
    : weight(name + ".weight", xavier(out, in, rng)), bias(name + ".bias", Tensor::vector(out)) {}

Vec Dense::forward(std::span<const double> x) const {
  Vec y(bias.value.values());
  matvec_add(weight.value, x, 0, y);
  return y;
}

Vec Dense::backward(std::span<const double> x, std::span<const double> dy) {
  Vec dx(x.size(), 0.0);
  matvec_backward(weight.value, weight.grad, x, dy, 0, dx);
  for (std::size_t i = 0; i < dy.size(); ++i) bias.grad[i] += dy[i];
  return dx;
}

// ---------------------------------------------------------------- Embedding

Embedding::Embedding(const std::string& name, const EmbeddingTable& t)
    : vocabulary(t.vocabulary), table(name, t.vectors, t.trainable) {}

std::vector<Vec> Embedding::forward(const std::vector<std::size_t>& ids) const {
  std::vector<Vec> out;
  out.reserve(ids.size());
  for (auto id : ids) {
    auto r = table.value.row(id);
    out.emplace_back(r.begin(), r.end());
  }
  return out;
}

void Embedding::backward(const std::vector<std::size_t>& ids, const std::vector<Vec>& dxs) {
  if (!table.trainable) return;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] == Vocabulary::kPad || dxs[i].empty()) continue;
    axpy(1.0, dxs[i], table.grad.row(ids[i]));
  }
}

// ---------------------------------------------------------------- TextCnn

TextCnn::TextCnn(const std::string& name, std::size_t input_dim, TextCnnConfig config, Rng& rng)
    : input_dim_(input_dim), config_(std::move(config)) {
  if (config_.widths.empty() || config_.filters == 0) {
    throw ValidationError("convolution needs at least one width and one filter");
  }
  for (auto w : config_.widths) {
    if (w == 0) throw ValidationError("convolution width must be positive");
    const std::string tag = name + ".w" + std::to_string(w);
    weights.emplace_back(tag + ".weight", xavier(config_.filters, w * input_dim_, rng));
    biases.emplace_back(tag + ".bias", Tensor::vector(config_.filters));
  }
}

std::vector<Param*> TextCnn::params() {
  std::vector<Param*> out;
  for (std::size_t g = 0; g < weights.size(); ++g) {
    out.push_back(&weights[g]);
    out.push_back(&biases[g]);
  }
  return out;
}

Vec TextCnn::forward(const std::vector<Vec>& xs, std::span<const double> pad, Cache* cache) const {
  const std::size_t max_w = *std::max_element(config_.widths.begin(), config_.widths.end());
  std::vector<Vec> inputs = xs;
  while (inputs.size() < max_w) inputs.emplace_back(pad.begin(), pad.end());
  const std::size_t T = inputs.size();
  const std::size_t F = config_.filters;
  const std::size_t d = input_dim_;

  Vec out(output_dim(), -std::numeric_limits<double>::infinity());
  std::vector<std::size_t> arg(output_dim(), 0);
  Vec pre(F);
  for (std::size_t g = 0; g < config_.widths.size(); ++g) {
    const std::size_t w = config_.widths[g];
    const std::size_t left = (w - 1) / 2;
    const Tensor& W = weights[g].value;
    for (std::size_t t = 0; t < T; ++t) {
      std::copy(biases[g].value.values().begin(), biases[g].value.values().end(), pre.begin());
      for (std::size_t k = 0; k < w; ++k) {
        const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(t + k) - static_cast<std::ptrdiff_t>(left);
        std::span<const double> x =
            (pos < 0 || pos >= static_cast<std::ptrdiff_t>(T)) ? pad : std::span<const double>(inputs[pos]);
        matvec_add(W, x, k * d, pre);
      }
      for (std::size_t f = 0; f < F; ++f) {
        const double y = activate(config_.activation, pre[f]);
        const std::size_t j = g * F + f;
        if (y > out[j]) {
          out[j] = y;
          arg[j] = t;
        }
      }
    }
  }
  if (cache) {
    cache->inputs = std::move(inputs);
    cache->original_length = xs.size();
    cache->argmax = std::move(arg);
    cache->output = out;
  }
  return out;
}

std::vector<Vec> TextCnn::backward(const Cache& cache, std::span<const double> dy) {
  const std::size_t T = cache.inputs.size();
  const std::size_t F = config_.filters;
  const std::size_t d = input_dim_;
  std::vector<Vec> dinputs(T, Vec(d, 0.0));
  for (std::size_t g = 0; g < config_.widths.size(); ++g) {
    const std::size_t w = config_.widths[g];
    const std::size_t left = (w - 1) / 2;
    const Tensor& W = weights[g].value;
    Tensor& dW = weights[g].grad;
    for (std::size_t f = 0; f < F; ++f) {
      const std::size_t j = g * F + f;
      const double dpre = dy[j] * activation_grad(config_.activation, cache.output[j]);
      if (dpre == 0.0) continue;
      biases[g].grad[f] += dpre;
      const std::size_t t = cache.argmax[j];
      for (std::size_t k = 0; k < w; ++k) {
        const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(t + k) - static_cast<std::ptrdiff_t>(left);
        if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(T)) continue;
        const double* wrow = W.values().data() + f * W.cols() + k * d;
        double* grow = dW.values().data() + f * W.cols() + k * d;
        const Vec& x = cache.inputs[pos];
        Vec& dx = dinputs[pos];
        for (std::size_t c = 0; c < d; ++c) {
          grow[c] += dpre * x[c];
          dx[c] += dpre * wrow[c];
        }
      }
    }
  }
  dinputs.resize(cache.original_length);
  return dinputs;
}

Vec text_cnn_features(const std::vector<std::size_t>& ids, const Embedding& embedding,
                      const TextCnn& cnn) {
  return cnn.forward(embedding.forward(ids), embedding.padding_row(), nullptr);
}

// ---------------------------------------------------------------- LSTM

Lstm::Lstm(const std::string& name, std::size_t input_dim, std::size_t hidden, Rng& rng)
    : weight(name + ".weight", xavier(4 * hidden, input_dim + hidden, rng)),
      bias(name + ".bias", Tensor::vector(4 * hidden)) {
  for (std::size_t k = hidden; k < 2 * hidden; ++k) bias.value[k] = 1.0;
}

Lstm::State Lstm::step(std::span<const double> x, const State& state, StepCache* cache) const {
  const std::size_t H = hidden();
  const std::size_t X = x.size();
  Vec z(bias.value.values());
  matvec_add(weight.value, x, 0, z);
  matvec_add(weight.value, state.h, X, z);
  Vec i(H), f(H), g(H), o(H), c(H), tc(H), h(H);
  for (std::size_t k = 0; k < H; ++k) {
    i[k] = sigmoid(z[k]);
    f[k] = sigmoid(z[H + k]);
    g[k] = std::tanh(z[2 * H + k]);
    o[k] = sigmoid(z[3 * H + k]);
    c[k] = f[k] * state.c[k] + i[k] * g[k];
    tc[k] = std::tanh(c[k]);
    h[k] = o[k] * tc[k];
  }
  if (cache) {
    cache->x.assign(x.begin(), x.end());
    cache->h_prev = state.h;
    cache->c_prev = state.c;
    cache->i = i;
    cache->f = f;
    cache->g = g;
    cache->o = o;
    cache->c = c;
    cache->tanh_c = tc;
  }
  return {std::move(h), std::move(c)};
}

Lstm::StepGrad Lstm::step_backward(const StepCache& k, std::span<const double> dh,
                                   std::span<const double> dc_in) {
  const std::size_t H = hidden();
  const std::size_t X = k.x.size();
  Vec dz(4 * H);
  StepGrad out{Vec(X, 0.0), Vec(H, 0.0), Vec(H, 0.0)};
  for (std::size_t j = 0; j < H; ++j) {
    const double dhj = dh.empty() ? 0.0 : dh[j];
    const double dcj = (dc_in.empty() ? 0.0 : dc_in[j]) + dhj * k.o[j] * (1.0 - k.tanh_c[j] * k.tanh_c[j]);
    const double d_o = dhj * k.tanh_c[j];
    const double d_i = dcj * k.g[j];
    const double d_f = dcj * k.c_prev[j];
    const double d_g = dcj * k.i[j];
    out.dc_prev[j] = dcj * k.f[j];
    dz[j] = d_i * k.i[j] * (1.0 - k.i[j]);
    dz[H + j] = d_f * k.f[j] * (1.0 - k.f[j]);
    dz[2 * H + j] = d_g * (1.0 - k.g[j] * k.g[j]);
    dz[3 * H + j] = d_o * k.o[j] * (1.0 - k.o[j]);
  }
  matvec_backward(weight.value, weight.grad, k.x, dz, 0, out.dx);
  matvec_backward(weight.value, weight.grad, k.h_prev, dz, X, out.dh_prev);
  for (std::size_t j = 0; j < 4 * H; ++j) bias.grad[j] += dz[j];
  return out;
}

std::vector<Vec> Lstm::sequence(const std::vector<Vec>& xs, std::vector<StepCache>* caches,
                                const State* init) const {
  State s = init ? *init : zero_state();
  std::vector<Vec> hs;
  hs.reserve(xs.size());
  if (caches) caches->assign(xs.size(), {});
  for (std::size_t t = 0; t < xs.size(); ++t) {
    s = step(xs[t], s, caches ? &(*caches)[t] : nullptr);
    hs.push_back(s.h);
  }
  return hs;
}

std::vector<Vec> Lstm::sequence_backward(const std::vector<StepCache>& caches,
                                         const std::vector<Vec>& dhs) {
  const std::size_t H = hidden();
  std::vector<Vec> dxs(caches.size());
  Vec dh_next(H, 0.0), dc_next(H, 0.0);
  for (std::size_t t = caches.size(); t-- > 0;) {
    Vec dh = dh_next;
    if (t < dhs.size() && !dhs[t].empty()) axpy(1.0, dhs[t], dh);
    StepGrad g = step_backward(caches[t], dh, dc_next);
    dxs[t] = std::move(g.dx);
    dh_next = std::move(g.dh_prev);
    dc_next = std::move(g.dc_prev);
  }
  return dxs;
}

std::vector<Vec> bilstm_sequence(const Lstm& forward, const Lstm& backward,
                                 const std::vector<Vec>& xs) {
  auto hf = forward.sequence(xs, nullptr);
  std::vector<Vec> rev(xs.rbegin(), xs.rend());
  auto hb = backward.sequence(rev, nullptr);
  std::vector<Vec> out(xs.size());
  for (std::size_t t = 0; t < xs.size(); ++t) out[t] = concat({hf[t], hb[xs.size() - 1 - t]});
  return out;
}

// ---------------------------------------------------------------- GRU

Gru::Gru(const std::string& name, std::size_t input_dim, std::size_t hidden, Rng& rng)
    : input_weight(name + ".input_weight", xavier(3 * hidden, input_dim, rng)),
      recurrent_weight(name + ".recurrent_weight", xavier(3 * hidden, hidden, rng)),
      bias(name + ".bias", Tensor::vector(3 * hidden)) {}

Vec Gru::step(std::span<const double> x, std::span<const double> h, StepCache* cache) const {
  const std::size_t H = hidden();
  Vec zx(bias.value.values());
  matvec_add(input_weight.value, x, 0, zx);
  Vec zh(3 * H, 0.0);
  matvec_add(recurrent_weight.value, h, 0, zh);
  Vec z(H), r(H), n(H), rh(H), out(H);
  for (std::size_t k = 0; k < H; ++k) {
    z[k] = sigmoid(zx[k] + zh[k]);
    r[k] = sigmoid(zx[H + k] + zh[H + k]);
    rh[k] = zh[2 * H + k];
    n[k] = std::tanh(zx[2 * H + k] + r[k] * rh[k]);
    out[k] = (1.0 - z[k]) * n[k] + z[k] * h[k];
  }
  if (cache) {
    cache->x.assign(x.begin(), x.end());
    cache->h_prev.assign(h.begin(), h.end());
    cache->z = std::move(z);
    cache->r = std::move(r);
    cache->n = std::move(n);
    cache->rh = std::move(rh);
  }
  return out;
}

std::vector<Vec> Gru::sequence(const std::vector<Vec>& xs, std::vector<StepCache>* caches) const {
  Vec h(hidden(), 0.0);
  std::vector<Vec> hs;
  if (caches) caches->assign(xs.size(), {});
  for (std::size_t t = 0; t < xs.size(); ++t) {
    h = step(xs[t], h, caches ? &(*caches)[t] : nullptr);
    hs.push_back(h);
  }
  return hs;
}

std::vector<Vec> Gru::sequence_backward(const std::vector<StepCache>& caches,
                                        const std::vector<Vec>& dhs) {
  const std::size_t H = hidden();
  std::vector<Vec> dxs(caches.size());
  Vec dh_next(H, 0.0);
  for (std::size_t t = caches.size(); t-- > 0;) {
    const StepCache& k = caches[t];
    Vec dh = dh_next;
    if (t < dhs.size() && !dhs[t].empty()) axpy(1.0, dhs[t], dh);
    Vec dzx(3 * H), dzh(3 * H);
    Vec dh_prev(H, 0.0);
    for (std::size_t j = 0; j < H; ++j) {
      const double dn = dh[j] * (1.0 - k.z[j]);
      const double dz = dh[j] * (k.h_prev[j] - k.n[j]);
      dh_prev[j] = dh[j] * k.z[j];
      const double dan = dn * (1.0 - k.n[j] * k.n[j]);
      const double dr = dan * k.rh[j];
      const double daz = dz * k.z[j] * (1.0 - k.z[j]);
      const double dar = dr * k.r[j] * (1.0 - k.r[j]);
      dzx[j] = daz;
      dzx[H + j] = dar;
      dzx[2 * H + j] = dan;
      dzh[j] = daz;
      dzh[H + j] = dar;
      dzh[2 * H + j] = dan * k.r[j];
    }
    Vec dx(k.x.size(), 0.0);
    matvec_backward(input_weight.value, input_weight.grad, k.x, dzx, 0, dx);
    matvec_backward(recurrent_weight.value, recurrent_weight.grad, k.h_prev, dzh, 0, dh_prev);
    for (std::size_t j = 0; j < 3 * H; ++j) bias.grad[j] += dzx[j];
    dxs[t] = std::move(dx);
    dh_next = std::move(dh_prev);
  }
  return dxs;
}

// ---------------------------------------------------------------- BiRnn

CellKind parse_cell(std::string_view name) {
  if (name == "lstm") return CellKind::lstm;
  if (name == "gru") return CellKind::gru;
  throw ValidationError("unknown recurrent cell '" + std::string(name) + "'");
}

BiRnn::BiRnn(const std::string& name, CellKind kind, std::size_t input_dim, std::size_t hidden,
             Rng& rng)
    : kind_(kind), hidden_(hidden) {
  if (kind == CellKind::lstm) {
    forward_lstm = Lstm(name + ".fw", input_dim, hidden, rng);
    backward_lstm = Lstm(name + ".bw", input_dim, hidden, rng);
  } else {
    forward_gru = Gru(name + ".fw", input_dim, hidden, rng);
    backward_gru = Gru(name + ".bw", input_dim, hidden, rng);
  }
}

std::vector<Param*> BiRnn::params() {
  std::vector<Param*> out;
  auto add = [&](std::vector<Param*> ps) { out.insert(out.end(), ps.begin(), ps.end()); };
  if (kind_ == CellKind::lstm) {
    add(forward_lstm.params());
    add(backward_lstm.params());
  } else {
    add(forward_gru.params());
    add(backward_gru.params());
  }
  return out;
}

std::vector<Vec> BiRnn::forward(const std::vector<Vec>& xs, Cache* cache) const {
  const std::size_t T = xs.size();
  std::vector<Vec> rev(xs.rbegin(), xs.rend());
  std::vector<Vec> hf, hb_rev;
  if (kind_ == CellKind::lstm) {
    hf = forward_lstm.sequence(xs, cache ? &cache->lf : nullptr);
    hb_rev = backward_lstm.sequence(rev, cache ? &cache->lb : nullptr);
  } else {
    hf = forward_gru.sequence(xs, cache ? &cache->gf : nullptr);
    hb_rev = backward_gru.sequence(rev, cache ? &cache->gb : nullptr);
  }
  std::vector<Vec> out(T);
  std::vector<Vec> hb(T);
  for (std::size_t t = 0; t < T; ++t) {
    hb[t] = hb_rev[T - 1 - t];
    out[t] = concat({hf[t], hb[t]});
  }
  if (cache) {
    cache->hf = std::move(hf);
    cache->hb = std::move(hb);
  }
  return out;
}

Vec BiRnn::final_state(const Cache& cache) {
  if (cache.hf.empty()) return {};
  return concat({cache.hf.back(), cache.hb.front()});
}

std::vector<Vec> BiRnn::backward(const Cache& cache, const std::vector<Vec>& dys,
                                 std::span<const double> dfinal) {
  const std::size_t T = cache.hf.size();
  const std::size_t H = hidden_;
  std::vector<Vec> df(T, Vec(H, 0.0)), db_rev(T, Vec(H, 0.0));
  for (std::size_t t = 0; t < T; ++t) {
    if (t < dys.size() && !dys[t].empty()) {
      for (std::size_t j = 0; j < H; ++j) {
        df[t][j] += dys[t][j];
        db_rev[T - 1 - t][j] += dys[t][H + j];
      }
    }
  }
  if (!dfinal.empty() && T > 0) {
    for (std::size_t j = 0; j < H; ++j) {
      df[T - 1][j] += dfinal[j];
      db_rev[T - 1][j] += dfinal[H + j];  // backward state at time 0 is its last step
    }
  }
  std::vector<Vec> dxf, dxb_rev;
  if (kind_ == CellKind::lstm) {
    dxf = forward_lstm.sequence_backward(cache.lf, df);
    dxb_rev = backward_lstm.sequence_backward(cache.lb, db_rev);
  } else {
    dxf = forward_gru.sequence_backward(cache.gf, df);
    dxb_rev = backward_gru.sequence_backward(cache.gb, db_rev);
  }
  std::vector<Vec> dxs(T);
  for (std::size_t t = 0; t < T; ++t) {
    dxs[t] = std::move(dxf[t]);
    axpy(1.0, dxb_rev[T - 1 - t], dxs[t]);
  }
  return dxs;
}

}  // namespace topicflow::tensor
