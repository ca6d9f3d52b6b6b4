#include "topicflow/hcn/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "topicflow/error.hpp"
#include "topicflow/nlu/tokenizer.hpp"
#include "topicflow/tensor/snapshot.hpp"

namespace topicflow::hcn {

using nlohmann::json;
using tensor::Param;
using tensor::Rng;

InputKind parse_input_kind(const std::string& s) {
  if (s == "plain") return InputKind::plain;
  if (s == "cnn") return InputKind::cnn;
  if (s == "rnn") return InputKind::rnn;
  throw ConfigError("unknown HCN input '" + s + "' (plain, cnn, rnn)");
}

std::string input_kind_name(InputKind k) {
  switch (k) {
    case InputKind::plain:
      return "plain";
    case InputKind::cnn:
      return "cnn";
    default:
      return "rnn";
  }
}

void to_json(json& j, const HcnConfig& c) {
  j = {{"input", c.input},
       {"embedding", c.embedding},
       {"lstm_size", c.lstm_size},
       {"widths", c.widths},
       {"filters", c.filters},
       {"input_hidden", c.input_hidden},
       {"bag_of_words", c.bag_of_words},
       {"lstm_keep", c.lstm_keep},
       {"input_lstm_keep", c.input_lstm_keep},
       {"conv_keep", c.conv_keep},
       {"fc_keep", c.fc_keep},
       {"activation", c.activation},
       {"input_activation", c.input_activation},
       {"max_epochs", c.max_epochs},
       {"folds", c.folds},
       {"train", c.train}};
}

void from_json(const json& j, HcnConfig& c) {
  c.input = j.value("input", c.input);
  if (j.contains("embedding")) c.embedding = j["embedding"].get<nlu::EmbeddingConfig>();
  c.lstm_size = j.value("lstm_size", c.lstm_size);
  c.widths = j.value("widths", c.widths);
  c.filters = j.value("filters", c.filters);
  c.input_hidden = j.value("input_hidden", c.input_hidden);
  c.bag_of_words = j.value("bag_of_words", c.bag_of_words);
  c.lstm_keep = j.value("lstm_keep", c.lstm_keep);
  c.input_lstm_keep = j.value("input_lstm_keep", c.input_lstm_keep);
  c.conv_keep = j.value("conv_keep", c.conv_keep);
  c.fc_keep = j.value("fc_keep", c.fc_keep);
  c.activation = j.value("activation", c.activation);
  c.input_activation = j.value("input_activation", c.input_activation);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.folds = j.value("folds", c.folds);
  if (j.contains("train")) c.train = j["train"].get<tensor::TrainConfig>();
}

const std::vector<std::string>& babi_variants() {
  static const std::vector<std::string> v = {"word2vec", "word2vec+cnn", "word2vec+rnn",
                                             "fasttext", "fasttext+cnn", "fasttext+rnn"};
  return v;
}

HcnConfig babi_preset(const std::string& variant) {
  struct Row {
    const char* input;
    std::size_t lstm, filters;
    double lstm_keep, input_keep, conv_keep, fc_keep, lr;
    const char *act, *input_act;
    double eps, beta1;
  };
  static const std::map<std::string, Row> rows = {
      {"word2vec", {"plain", 85, 0, 0.92, 1.0, 1.0, 0.59, 0.001, "tanh", "tanh", 1e-8, 0.5}},
      {"word2vec+cnn", {"cnn", 109, 6, 0.79, 1.0, 0.84, 0.93, 0.005, "tanh", "tanh", 0.1, 0.5}},
      {"word2vec+rnn", {"rnn", 219, 0, 0.74, 0.91, 1.0, 0.98, 0.00005, "relu", "tanh", 1e-8, 0.9}},
      {"fasttext", {"plain", 55, 0, 0.85, 1.0, 1.0, 0.82, 0.008, "relu", "tanh", 1e-8, 0.9}},
      {"fasttext+cnn", {"cnn", 245, 21, 0.80, 1.0, 0.72, 0.79, 0.0001, "relu", "tanh", 1e-8, 0.5}},
      {"fasttext+rnn", {"rnn", 505, 0, 0.94, 0.97, 1.0, 0.76, 0.0003, "relu", "tanh", 1e-8, 0.5}},
  };
  auto it = rows.find(variant);
  if (it == rows.end()) throw ConfigError("unknown bAbI preset '" + variant + "'");
  const Row& r = it->second;
  HcnConfig c;
  c.input = r.input;
  c.lstm_size = r.lstm;
  if (r.filters) c.filters = r.filters;
  c.lstm_keep = r.lstm_keep;
  c.input_lstm_keep = r.input_keep;
  c.conv_keep = r.conv_keep;
  c.fc_keep = r.fc_keep;
  c.activation = r.act;
  c.input_activation = r.input_act;
  c.train.learning_rate = r.lr;
  c.train.epsilon = r.eps;
  c.train.beta1 = r.beta1;
  c.train.batch = 1;
  c.embedding.dim = 300;
  c.embedding.trainable = false;
  return c;
}

Vec TurnFeatures::concat() const {
  Vec out;
  out.reserve(trained.size() + sentiment.size() + dialogue_act.size() + prev_action.size());
  for (const Vec* part : {&trained, &sentiment, &dialogue_act, &prev_action}) {
    out.insert(out.end(), part->begin(), part->end());
  }
  return out;
}

Vec masked_distribution(std::span<const double> logits, const std::vector<int>& mask) {
  if (mask.size() != logits.size()) throw ValidationError("mask and logits differ in length");
  Vec out(logits.size(), 0.0);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < logits.size(); ++k) {
    if (mask[k]) top = std::max(top, logits[k]);
  }
  if (top == -std::numeric_limits<double>::infinity()) return out;
  double sum = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    if (mask[k]) sum += out[k] = std::exp(logits[k] - top);
  }
  for (auto& v : out) v /= sum;
  return out;
}

namespace {

Vec drop(Vec& x, double keep, Rng* rng) {
  if (!rng || keep >= 1.0) return {};
  Vec m = tensor::dropout_mask(x.size(), keep, *rng);
  tensor::apply_mask(x, m);
  return m;
}

void undrop(Vec& dx, const Vec& mask) {
  if (!mask.empty()) tensor::apply_mask(dx, mask);
}

std::vector<int> combine(const std::vector<int>& a, const std::vector<int>* b) {
  std::vector<int> out = a;
  if (b) {
    for (std::size_t k = 0; k < out.size() && k < b->size(); ++k) out[k] = out[k] && (*b)[k];
  }
  return out;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + p.string());
  out << text;
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("missing model file " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

struct HcnModel::InputCache {
  std::vector<std::size_t> ids;
  std::size_t real = 0;  // non-pad tokens (plain)
  tensor::TextCnn::Cache cnn;
  std::vector<tensor::Lstm::StepCache> steps;
  Vec activated;  // rnn input layer output before dropout
  Vec mask;
};

HcnModel::HcnModel(std::string dialogue_id, dialogue::Inventory inventory, dialogue::ActionMaskTable masks,
                   const std::vector<std::string>& utterances, HcnConfig cfg, FrozenFeaturizers frozen)
    : dialogue_id_(std::move(dialogue_id)),
      inventory_(std::move(inventory)),
      masks_(std::move(masks)),
      config_(std::move(cfg)),
      frozen_(frozen) {
  if (masks_.size() != inventory_.size()) throw ValidationError("mask table does not cover the inventory");
  parse_input_kind(config_.input);
  sentiment_dim_ = frozen_.sentiment ? frozen_.sentiment->feature_dim() : 0;
  act_dim_ = frozen_.dialogue_act ? frozen_.dialogue_act->feature_dim() : 0;
  std::vector<std::vector<std::string>> sentences;
  for (const auto& u : utterances) sentences.push_back(nlu::words(u));
  Rng rng(config_.train.seed);
  build(nlu::build_vocabulary(sentences), rng);
}

void HcnModel::build(const tensor::Vocabulary& vocab, Rng& rng) {
  embedding_ = nlu::make_embedding("embedding", vocab, config_.embedding);
  const InputKind kind = parse_input_kind(config_.input);
  if (kind == InputKind::cnn) {
    cnn_ = tensor::TextCnn("cnn", embedding_.dim(),
                           {config_.widths, config_.filters, tensor::parse_activation(config_.activation)}, rng);
  } else if (kind == InputKind::rnn) {
    input_rnn_ = tensor::Lstm("input_rnn", embedding_.dim(), config_.input_hidden, rng);
  }
  rnn_ = tensor::Lstm("rnn", feature_dim(), config_.lstm_size, rng);
  fc_ = tensor::Dense("fc", config_.lstm_size, config_.lstm_size, rng);
  output_ = tensor::Dense("output", config_.lstm_size, inventory_.size(), rng);
}

std::size_t HcnModel::trained_dim() const {
  switch (parse_input_kind(config_.input)) {
    case InputKind::plain:
      return embedding_.dim() + (config_.bag_of_words ? embedding_.vocabulary.size() : 0);
    case InputKind::cnn:
      return cnn_.output_dim();
    default:
      return config_.input_hidden;
  }
}

std::size_t HcnModel::feature_dim() const { return trained_dim() + sentiment_dim_ + act_dim_ + inventory_.size(); }

std::vector<Param*> HcnModel::params() {
  std::vector<Param*> ps = embedding_.params();
  const InputKind kind = parse_input_kind(config_.input);
  if (kind == InputKind::cnn) {
    for (auto* p : cnn_.params()) ps.push_back(p);
  } else if (kind == InputKind::rnn) {
    for (auto* p : input_rnn_.params()) ps.push_back(p);
  }
  for (auto* p : rnn_.params()) ps.push_back(p);
  for (auto* p : fc_.params()) ps.push_back(p);
  for (auto* p : output_.params()) ps.push_back(p);
  return ps;
}

Vec HcnModel::input_forward(const std::string& utterance, InputCache* cache, Rng* rng) const {
  InputCache local;
  InputCache& c = cache ? *cache : local;
  c.ids = embedding_.encode(nlu::words(utterance));
  const InputKind kind = parse_input_kind(config_.input);
  Vec out;
  if (kind == InputKind::plain) {
    const std::size_t d = embedding_.dim();
    out.assign(trained_dim(), 0.0);
    c.real = c.ids.size();
    for (auto id : c.ids) {
      auto row = embedding_.table.value.row(id);
      for (std::size_t k = 0; k < d; ++k) out[k] += row[k];
      if (config_.bag_of_words) out[d + id] = 1.0;
    }
    if (c.real) {
      for (std::size_t k = 0; k < d; ++k) out[k] /= static_cast<double>(c.real);
    }
    return out;
  }
  if (c.ids.empty()) c.ids.push_back(tensor::Vocabulary::kPad);
  if (kind == InputKind::cnn) {
    out = cnn_.forward(embedding_.forward(c.ids), embedding_.padding_row(), &c.cnn);
    c.mask = drop(out, config_.conv_keep, rng);
    return out;
  }
  auto hs = input_rnn_.sequence(embedding_.forward(c.ids), &c.steps);
  const auto act = tensor::parse_activation(config_.input_activation);
  out = hs.back();
  for (auto& v : out) v = tensor::activate(act, v);
  c.activated = out;
  c.mask = drop(out, config_.input_lstm_keep, rng);
  return out;
}

void HcnModel::input_backward(const InputCache& c, std::span<const double> d) {
  const InputKind kind = parse_input_kind(config_.input);
  if (kind == InputKind::plain) {
    if (!embedding_.table.trainable || c.real == 0) return;
    const std::size_t dim = embedding_.dim();
    Vec share(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(dim));
    for (auto& v : share) v /= static_cast<double>(c.real);
    embedding_.backward(c.ids, std::vector<Vec>(c.ids.size(), share));
    return;
  }
  Vec dy(d.begin(), d.end());
  undrop(dy, c.mask);
  if (kind == InputKind::cnn) {
    embedding_.backward(c.ids, cnn_.backward(c.cnn, dy));
    return;
  }
  const auto act = tensor::parse_activation(config_.input_activation);
  for (std::size_t k = 0; k < dy.size(); ++k) dy[k] *= tensor::activation_grad(act, c.activated[k]);
  std::vector<Vec> dhs(c.steps.size(), Vec(config_.input_hidden, 0.0));
  dhs.back() = dy;
  embedding_.backward(c.ids, input_rnn_.sequence_backward(c.steps, dhs));
}

DmState HcnModel::initial_state() const {
  DmState s;
  s.rnn = rnn_.zero_state();
  s.last = inventory_.size();
  s.finished = dialogue::ActionMaskTable::all_zero(masks_.after(s.last));
  return s;
}

TurnFeatures HcnModel::featurize(const std::string& utterance, std::size_t prev_action) const {
  TurnFeatures f;
  f.trained = input_forward(utterance, nullptr, nullptr);
  const auto toks = nlu::words(utterance);
  if (frozen_.sentiment) f.sentiment = frozen_.sentiment->features(toks);
  if (frozen_.dialogue_act) f.dialogue_act = frozen_.dialogue_act->features(toks);
  f.prev_action.assign(inventory_.size(), 0.0);
  if (prev_action < inventory_.size()) f.prev_action[prev_action] = 1.0;
  return f;
}

Vec HcnModel::logits(const DmState& state, const TurnFeatures& f, DmState* next) const {
  auto st = rnn_.step(f.concat(), state.rnn, nullptr);
  Vec z = fc_.forward(st.h);
  const auto act = tensor::parse_activation(config_.activation);
  for (auto& v : z) v = tensor::activate(act, v);
  if (next) next->rnn = std::move(st);
  return output_.forward(z);
}

ActionChoice HcnModel::predict(const DmState& state, const TurnFeatures& f, const std::vector<int>* extra) const {
  ActionChoice out;
  out.state = state;
  const auto mask = combine(masks_.after(state.last), extra);
  if (state.finished || dialogue::ActionMaskTable::all_zero(mask)) {
    out.state.finished = true;
    out.distribution.assign(inventory_.size(), 0.0);
    return out;
  }
  DmState next = state;
  out.distribution = masked_distribution(logits(state, f, &next), mask);
  const std::size_t k = tensor::argmax(out.distribution);
  out.class_id = k;
  next.last = k;
  next.finished = dialogue::ActionMaskTable::all_zero(masks_.after(k));
  out.state = std::move(next);
  return out;
}

ActionChoice HcnModel::step(const DmState& state, const std::string& utterance) const {
  return predict(state, featurize(utterance, state.last));
}

double HcnModel::train_transition(const dialogue::Transition& t, Rng* rng) {
  struct Turn {
    InputCache input;
    tensor::Lstm::StepCache rnn;
    Vec h, fc_in, a, out_in, h_mask, fc_mask;
    Vec dlogits;
  };
  const std::size_t N = inventory_.size();
  const std::size_t T = t.steps.size();
  const auto act = tensor::parse_activation(config_.activation);
  std::vector<Turn> turns(T);
  tensor::Lstm::State state = rnn_.zero_state();
  std::size_t prev = N;
  double loss = 0.0;
  for (std::size_t s = 0; s < T; ++s) {
    Turn& tr = turns[s];
    const auto& step = t.steps[s];
    TurnFeatures f;
    f.trained = input_forward(step.utterance, &tr.input, rng);
    const auto toks = nlu::words(step.utterance);
    if (frozen_.sentiment) f.sentiment = frozen_.sentiment->features(toks);
    if (frozen_.dialogue_act) f.dialogue_act = frozen_.dialogue_act->features(toks);
    f.prev_action.assign(N, 0.0);
    if (prev < N) f.prev_action[prev] = 1.0;

    state = rnn_.step(f.concat(), state, &tr.rnn);
    tr.fc_in = state.h;
    tr.h_mask = drop(tr.fc_in, config_.lstm_keep, rng);
    tr.a = fc_.forward(tr.fc_in);
    for (auto& v : tr.a) v = tensor::activate(act, v);
    tr.out_in = tr.a;
    tr.fc_mask = drop(tr.out_in, config_.fc_keep, rng);
    Vec z = output_.forward(tr.out_in);

    const auto& mask = masks_.after(prev);
    if (step.class_id >= N || !mask[step.class_id]) {
      throw ValidationError(dialogue_id_ + ": gold class " + std::to_string(step.class_id) + " is masked at turn " +
                            std::to_string(s + 1));
    }
    Vec p = masked_distribution(z, mask);
    loss -= std::log(std::max(p[step.class_id], 1e-300));
    p[step.class_id] -= 1.0;
    tr.dlogits = std::move(p);
    prev = step.class_id;
  }

  Vec dh_next(config_.lstm_size, 0.0), dc_next(config_.lstm_size, 0.0);
  const std::size_t tdim = trained_dim();
  for (std::size_t s = T; s-- > 0;) {
    Turn& tr = turns[s];
    Vec da = output_.backward(tr.out_in, tr.dlogits);
    undrop(da, tr.fc_mask);
    for (std::size_t k = 0; k < da.size(); ++k) da[k] *= tensor::activation_grad(act, tr.a[k]);
    Vec dh = fc_.backward(tr.fc_in, da);
    undrop(dh, tr.h_mask);
    for (std::size_t k = 0; k < dh.size(); ++k) dh[k] += dh_next[k];
    auto g = rnn_.step_backward(tr.rnn, dh, dc_next);
    dh_next = std::move(g.dh_prev);
    dc_next = std::move(g.dc_prev);
    input_backward(tr.input, std::span<const double>(g.dx).first(tdim));
  }
  return loss;
}

std::vector<std::size_t> HcnModel::predict_transition(const dialogue::Transition& t) const {
  std::vector<std::size_t> out(t.steps.size(), inventory_.size());
  DmState state = initial_state();
  for (std::size_t s = 0; s < t.steps.size(); ++s) {
    auto choice = step(state, t.steps[s].utterance);
    if (!choice.class_id) break;
    out[s] = *choice.class_id;
    state = choice.state;
  }
  return out;
}

void HcnModel::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  json meta = {{"dialogue_id", dialogue_id_},   {"config", config_},
               {"sentiment_dim", sentiment_dim_}, {"dialogue_act_dim", act_dim_},
               {"epochs_used", epochs_used_}};
  write_text(dir / "config.json", meta.dump(2) + "\n");
  write_text(dir / "inventory.tsv", inventory_.to_tsv());
  write_text(dir / "mask.tsv", masks_.to_tsv());
  embedding_.vocabulary.save(dir / "vocab.txt");
  tensor::save_snapshot(dir / "model.bin", const_cast<HcnModel*>(this)->params());
}

HcnModel HcnModel::load(const std::filesystem::path& dir, FrozenFeaturizers frozen) {
  json meta;
  try {
    meta = json::parse(read_text(dir / "config.json"));
  } catch (const json::exception& e) {
    throw ParseError((dir / "config.json").string(), 0, e.what());
  }
  HcnModel m;
  m.dialogue_id_ = meta.at("dialogue_id").get<std::string>();
  m.config_ = meta.at("config").get<HcnConfig>();
  m.config_.embedding.pretrained.clear();
  m.epochs_used_ = meta.value("epochs_used", std::size_t{0});
  m.frozen_ = frozen;
  m.sentiment_dim_ = frozen.sentiment ? frozen.sentiment->feature_dim() : 0;
  m.act_dim_ = frozen.dialogue_act ? frozen.dialogue_act->feature_dim() : 0;
  if (m.sentiment_dim_ != meta.at("sentiment_dim").get<std::size_t>() ||
      m.act_dim_ != meta.at("dialogue_act_dim").get<std::size_t>()) {
    throw ConfigError(dir.string() + ": frozen featurizers do not match the trained model");
  }
  m.inventory_ = dialogue::Inventory::from_tsv(read_text(dir / "inventory.tsv"), (dir / "inventory.tsv").string());
  m.masks_ = dialogue::ActionMaskTable::from_tsv(read_text(dir / "mask.tsv"), (dir / "mask.tsv").string());
  Rng rng(0);
  m.build(tensor::Vocabulary::load(dir / "vocab.txt"), rng);
  tensor::restore_params(tensor::load_snapshot(dir / "model.bin"), m.params(), (dir / "model.bin").string());
  return m;
}

}  // namespace topicflow::hcn
