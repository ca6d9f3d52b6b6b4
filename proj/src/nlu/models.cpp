#include "topicflow/nlu/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "topicflow/error.hpp"
#include "topicflow/nlu/tokenizer.hpp"
#include "topicflow/tensor/snapshot.hpp"

namespace topicflow::nlu {

using nlohmann::json;
using tensor::Activation;
using tensor::Param;
using tensor::Rng;
using tensor::Tensor;

// ---- config serialization ----

void to_json(json& j, const EmbeddingConfig& c) {
  j = {{"dim", c.dim}, {"pretrained", c.pretrained}, {"trainable", c.trainable}};
}

void from_json(const json& j, EmbeddingConfig& c) {
  c.dim = j.value("dim", c.dim);
  c.pretrained = j.value("pretrained", c.pretrained);
  c.trainable = j.value("trainable", c.trainable);
}



void to_json(json& j, const ClassifierConfig& c) {
  j = {{"embedding", c.embedding}, {"widths", c.widths},       {"filters", c.filters},
       {"hidden", c.hidden},       {"activation", c.activation}, {"conv_keep", c.conv_keep},
       {"fc_keep", c.fc_keep},     {"train", c.train}};
}

void from_json(const json& j, ClassifierConfig& c) {
  if (j.contains("embedding")) c.embedding = j["embedding"].get<EmbeddingConfig>();
  c.widths = j.value("widths", c.widths);
  c.filters = j.value("filters", c.filters);
  c.hidden = j.value("hidden", c.hidden);
  c.activation = j.value("activation", c.activation);
  c.conv_keep = j.value("conv_keep", c.conv_keep);
  c.fc_keep = j.value("fc_keep", c.fc_keep);
  if (j.contains("train")) c.train = j["train"].get<tensor::TrainConfig>();
}

void to_json(json& j, const TaggerConfig& c) {
  j = {{"embedding", c.embedding}, {"hidden", c.hidden}, {"cell", c.cell}, {"keep", c.keep}, {"train", c.train}};
}

void from_json(const json& j, TaggerConfig& c) {
  if (j.contains("embedding")) c.embedding = j["embedding"].get<EmbeddingConfig>();
  c.hidden = j.value("hidden", c.hidden);
  c.cell = j.value("cell", c.cell);
  c.keep = j.value("keep", c.keep);
  if (j.contains("train")) c.train = j["train"].get<tensor::TrainConfig>();
}

void to_json(json& j, const SentimentConfig& c) {
  j = {{"embedding", c.embedding}, {"hidden", c.hidden}, {"cell", c.cell},
       {"max_tokens", c.max_tokens}, {"train", c.train}};
}

void from_json(const json& j, SentimentConfig& c) {
  if (j.contains("embedding")) c.embedding = j["embedding"].get<EmbeddingConfig>();
  c.hidden = j.value("hidden", c.hidden);
  c.cell = j.value("cell", c.cell);
  c.max_tokens = j.value("max_tokens", c.max_tokens);
  if (j.contains("train")) c.train = j["train"].get<tensor::TrainConfig>();
}

// ---- shared helpers ----

tensor::Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& sentences) {
  tensor::Vocabulary v;
  for (const auto& s : sentences) {
    for (const auto& t : s) v.add(t);
  }
  return v;
}

tensor::Embedding make_embedding(const std::string& name, const tensor::Vocabulary& vocab,
                                 const EmbeddingConfig& cfg) {
  if (!cfg.pretrained.empty()) {
    auto pre = tensor::load_embeddings(cfg.pretrained, cfg.dim);
    return tensor::Embedding(name, tensor::make_embedding_table(vocab, cfg.dim, &pre, cfg.trainable));
  }
  return tensor::Embedding(name, tensor::make_embedding_table(vocab, cfg.dim, nullptr, cfg.trainable));
}

namespace {

std::vector<std::string> lower_all(const std::vector<std::string>& tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(lowercase(t));
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("missing model file " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path.string(), 0, e.what());
  }
}

void save_model(const std::filesystem::path& dir, const json& meta, const tensor::Vocabulary& vocab,
                const std::vector<Param*>& params) {
  std::filesystem::create_directories(dir);
  write_text(dir / "config.json", meta.dump(2) + "\n");
  vocab.save(dir / "vocab.txt");
  tensor::save_snapshot(dir / "model.bin", params);
}

void restore(const std::filesystem::path& dir, const std::vector<Param*>& params) {
  tensor::restore_params(tensor::load_snapshot(dir / "model.bin"), params, (dir / "model.bin").string());
}

std::vector<std::string> sorted_labels(const std::vector<std::string>& raw) {
  std::set<std::string> s(raw.begin(), raw.end());
  return {s.begin(), s.end()};
}

std::size_t label_index(const std::vector<std::string>& labels, const std::string& l) {
  return static_cast<std::size_t>(std::lower_bound(labels.begin(), labels.end(), l) - labels.begin());
}

// Applies dropout in place during training; returns the mask (empty when off).
Vec drop(Vec& x, double keep, Rng* rng) {
  if (!rng || keep >= 1.0) return {};
  Vec m = tensor::dropout_mask(x.size(), keep, *rng);
  tensor::apply_mask(x, m);
  return m;
}

void undrop(Vec& dx, const Vec& mask) {
  if (!mask.empty()) tensor::apply_mask(dx, mask);
}

}  // namespace

// ---- CnnClassifier ----

void CnnClassifier::build(const tensor::Vocabulary& vocab, Rng& rng) {
  embedding = make_embedding("embedding", vocab, config_.embedding);
  tensor::TextCnnConfig tc{config_.widths, config_.filters, tensor::parse_activation(config_.activation)};
  cnn = tensor::TextCnn("cnn", embedding.dim(), tc, rng);
  if (config_.hidden > 0) {
    hidden = tensor::Dense("hidden", cnn.output_dim(), config_.hidden, rng);
    output = tensor::Dense("output", config_.hidden, labels_.size(), rng);
  } else {
    output = tensor::Dense("output", cnn.output_dim(), labels_.size(), rng);
  }
}

std::vector<Param*> CnnClassifier::params() {
  std::vector<Param*> ps = embedding.params();
  for (auto* p : cnn.params()) ps.push_back(p);
  if (config_.hidden > 0) {
    for (auto* p : hidden.params()) ps.push_back(p);
  }
  for (auto* p : output.params()) ps.push_back(p);
  return ps;
}

std::vector<std::size_t> CnnClassifier::ids(const std::vector<std::string>& tokens) const {
  auto out = embedding.encode(lower_all(tokens));
  if (out.empty()) out.push_back(tensor::Vocabulary::kPad);
  return out;
}

Vec CnnClassifier::hidden_forward(const std::vector<std::size_t>& token_ids) const {
  Vec pooled = cnn.forward(embedding.forward(token_ids), embedding.padding_row(), nullptr);
  if (config_.hidden == 0) return pooled;
  Vec h = hidden.forward(pooled);
  const Activation act = tensor::parse_activation(config_.activation);
  for (auto& v : h) v = tensor::activate(act, v);
  return h;
}

Vec CnnClassifier::features(const std::vector<std::string>& tokens) const { return hidden_forward(ids(tokens)); }

std::size_t CnnClassifier::feature_dim() const { return config_.hidden > 0 ? config_.hidden : cnn.output_dim(); }

Vec CnnClassifier::distribution(const std::vector<std::string>& tokens) const {
  return tensor::softmax(output.forward(hidden_forward(ids(tokens))));
}

double CnnClassifier::accuracy(const std::vector<LabeledText>& data) const {
  if (data.empty()) return 0.0;
  std::size_t ok = 0;
  for (const auto& ex : data) ok += labels_[tensor::argmax(distribution(words(ex.text)))] == ex.label;
  return static_cast<double>(ok) / static_cast<double>(data.size());
}

CnnClassifier CnnClassifier::train(const std::vector<LabeledText>& data, const ClassifierConfig& cfg,
                                   std::vector<double>* epoch_losses) {
  if (data.empty()) throw ValidationError("classifier: empty dataset");
  CnnClassifier m;
  m.config_ = cfg;
  std::vector<std::string> raw;
  std::vector<std::vector<std::string>> sentences;
  for (const auto& ex : data) {
    raw.push_back(ex.label);
    sentences.push_back(words(ex.text));
  }
  m.labels_ = sorted_labels(raw);
  if (m.labels_.size() < 2) throw ValidationError("classifier: need at least two labels");
  Rng rng(cfg.train.seed);
  m.build(build_vocabulary(sentences), rng);

  std::vector<std::vector<std::size_t>> ids;
  std::vector<std::size_t> gold;
  for (std::size_t i = 0; i < data.size(); ++i) {
    ids.push_back(m.ids(sentences[i]));
    gold.push_back(label_index(m.labels_, data[i].label));
  }
  const Activation act = tensor::parse_activation(cfg.activation);
  auto params = m.params();
  auto adam = tensor::make_adam_state(params, cfg.train.adam());
  auto losses = tensor::run_epochs(data.size(), cfg.train.epochs, cfg.train, params, adam, rng,
                                   [&](std::size_t i, Rng& r) {
    tensor::TextCnn::Cache cache;
    auto xs = m.embedding.forward(ids[i]);
    Vec pooled = m.cnn.forward(xs, m.embedding.padding_row(), &cache);
    Vec m1 = drop(pooled, cfg.conv_keep, &r);
    Vec h, m2;
    const Vec* top = &pooled;
    if (cfg.hidden > 0) {
      h = m.hidden.forward(pooled);
      for (auto& v : h) v = tensor::activate(act, v);
      m2 = drop(h, cfg.fc_keep, &r);
      top = &h;
    }
    Vec dlogits;
    const double loss = tensor::softmax_cross_entropy(m.output.forward(*top), gold[i], &dlogits);
    Vec dtop = m.output.backward(*top, dlogits);
    Vec dpooled;
    if (cfg.hidden > 0) {
      undrop(dtop, m2);
      for (std::size_t k = 0; k < dtop.size(); ++k) {
        // h is post-dropout; recover the activation output where kept.
        const double y = m2.empty() ? h[k] : (m2[k] == 0.0 ? 0.0 : h[k] / m2[k]);
        dtop[k] *= tensor::activation_grad(act, y);
      }
      dpooled = m.hidden.backward(pooled, dtop);
    } else {
      dpooled = std::move(dtop);
    }
    undrop(dpooled, m1);
    m.embedding.backward(ids[i], m.cnn.backward(cache, dpooled));
    return loss;
  });
  if (epoch_losses) *epoch_losses = losses;
  return m;
}

void CnnClassifier::save(const std::filesystem::path& dir) const {
  json meta = {{"kind", "cnn_classifier"}, {"config", config_}, {"labels", labels_}};
  save_model(dir, meta, embedding.vocabulary, const_cast<CnnClassifier*>(this)->params());
}

CnnClassifier CnnClassifier::load(const std::filesystem::path& dir) {
  json meta = read_json(dir / "config.json");
  CnnClassifier m;
  m.config_ = meta.at("config").get<ClassifierConfig>();
  m.config_.embedding.pretrained.clear();
  m.labels_ = meta.at("labels").get<std::vector<std::string>>();
  Rng rng(0);
  m.build(tensor::Vocabulary::load(dir / "vocab.txt"), rng);
  restore(dir, m.params());
  return m;
}

// ---- EntityTagger ----

void EntityTagger::build(const tensor::Vocabulary& vocab, Rng& rng) {
  embedding = make_embedding("embedding", vocab, config_.embedding);
  rnn = tensor::BiRnn("rnn", tensor::parse_cell(config_.cell), embedding.dim(), config_.hidden, rng);
  projection = tensor::Dense("projection", rnn.output_dim(), tagset_.size(), rng);
  transitions = Param("transitions", Tensor::matrix(tagset_.size(), tagset_.size()));
}

std::vector<Param*> EntityTagger::params() {
  std::vector<Param*> ps = embedding.params();
  for (auto* p : rnn.params()) ps.push_back(p);
  for (auto* p : projection.params()) ps.push_back(p);
  ps.push_back(&transitions);
  return ps;
}

Tensor EntityTagger::emissions(const std::vector<std::string>& tokens) const {
  auto hs = rnn.forward(embedding.forward(embedding.encode(lower_all(tokens))), nullptr);
  Tensor e = Tensor::matrix(hs.size(), tagset_.size());
  for (std::size_t t = 0; t < hs.size(); ++t) {
    Vec row = projection.forward(hs[t]);
    std::copy(row.begin(), row.end(), e.row(t).begin());
  }
  return e;
}

std::vector<std::string> EntityTagger::tag(const std::vector<std::string>& tokens) const {
  if (tokens.empty()) return {};
  std::vector<std::string> out;
  for (auto k : tensor::crf_viterbi(emissions(tokens), transitions.value)) out.push_back(tagset_.label(k));
  return out;
}

namespace {

std::vector<std::string> types_of(const std::vector<std::vector<std::string>>& tag_lists) {
  std::set<std::string> types;
  for (const auto& tags : tag_lists) {
    for (const auto& t : tags) {
      if (t != "O") types.insert(t.substr(2));
    }
  }
  return {types.begin(), types.end()};
}

// Forward/backward of BiRnn -> dropout -> projection -> CRF for one sentence.
// Returns the NLL and leaves d(loss)/d(rnn inputs) in `dxs`.
double crf_head_step(const tensor::BiRnn& rnn_layer, tensor::Dense& proj, Param& trans,
                     tensor::BiRnn::Cache& cache, const std::vector<Vec>& hs,
                     const std::vector<std::size_t>& gold, double keep, Rng* rng,
                     std::vector<Vec>& dys) {
  (void)rnn_layer;
  (void)cache;
  const std::size_t T = hs.size(), K = trans.value.rows();
  Tensor e = Tensor::matrix(T, K);
  std::vector<Vec> dropped(T), masks(T);
  for (std::size_t t = 0; t < T; ++t) {
    dropped[t] = hs[t];
    masks[t] = drop(dropped[t], keep, rng);
    Vec row = proj.forward(dropped[t]);
    std::copy(row.begin(), row.end(), e.row(t).begin());
  }
  Tensor de = Tensor::matrix(T, K);
  const double nll = tensor::crf_nll_backward(e, trans.value, gold, de, trans.grad);
  dys.assign(T, {});
  for (std::size_t t = 0; t < T; ++t) {
    dys[t] = proj.backward(dropped[t], de.row(t));
    undrop(dys[t], masks[t]);
  }
  return nll;
}

}  // namespace

EntityTagger EntityTagger::train(const std::vector<TaggedSentence>& data, const TaggerConfig& cfg,
                                 const std::vector<std::string>& types, std::vector<double>* epoch_losses) {
  if (data.empty()) throw ValidationError("entity tagger: empty dataset");
  EntityTagger m;
  m.config_ = cfg;
  std::vector<std::vector<std::string>> sentences, tag_lists;
  for (const auto& s : data) {
    if (s.tokens.size() != s.tags.size() || s.tokens.empty()) {
      throw ValidationError("entity tagger: sentence with mismatched or empty tags");
    }
    sentences.push_back(lower_all(s.tokens));
    tag_lists.push_back(s.tags);
  }
  m.tagset_ = TagSet(types.empty() ? types_of(tag_lists) : types);
  Rng rng(cfg.train.seed);
  m.build(build_vocabulary(sentences), rng);

  std::vector<std::vector<std::size_t>> ids, gold;
  for (std::size_t i = 0; i < data.size(); ++i) {
    ids.push_back(m.embedding.encode(sentences[i]));
    std::vector<std::size_t> g;
    for (const auto& t : tag_lists[i]) g.push_back(m.tagset_.index(t));
    gold.push_back(std::move(g));
  }
  auto params = m.params();
  auto adam = tensor::make_adam_state(params, cfg.train.adam());
  auto losses = tensor::run_epochs(data.size(), cfg.train.epochs, cfg.train, params, adam, rng,
                                   [&](std::size_t i, Rng& r) {
    tensor::BiRnn::Cache cache;
    auto hs = m.rnn.forward(m.embedding.forward(ids[i]), &cache);
    std::vector<Vec> dys;
    const double nll = crf_head_step(m.rnn, m.projection, m.transitions, cache, hs, gold[i], cfg.keep, &r, dys);
    m.embedding.backward(ids[i], m.rnn.backward(cache, dys));
    return nll;
  });
  if (epoch_losses) *epoch_losses = losses;
  return m;
}

void EntityTagger::save(const std::filesystem::path& dir) const {
  json meta = {{"kind", "entity_tagger"}, {"config", config_}, {"types", tagset_.types()}};
  save_model(dir, meta, embedding.vocabulary, const_cast<EntityTagger*>(this)->params());
}

EntityTagger EntityTagger::load(const std::filesystem::path& dir) {
  json meta = read_json(dir / "config.json");
  EntityTagger m;
  m.config_ = meta.at("config").get<TaggerConfig>();
  m.config_.embedding.pretrained.clear();
  m.tagset_ = TagSet(meta.at("types").get<std::vector<std::string>>());
  Rng rng(0);
  m.build(tensor::Vocabulary::load(dir / "vocab.txt"), rng);
  restore(dir, m.params());
  return m;
}

// ---- CombinedModel ----

std::vector<JointExample> join_examples(const std::vector<LabeledText>& intents,
                                        const std::vector<TaggedSentence>& entities) {
  if (intents.size() != entities.size()) throw ValidationError("intent and entity datasets differ in length");
  std::vector<JointExample> out;
  for (std::size_t i = 0; i < intents.size(); ++i) {
    auto toks = words(intents[i].text);
    if (toks != lower_all(entities[i].tokens)) {
      throw ValidationError("example " + std::to_string(i + 1) + ": intent text and entity tokens differ");
    }
    out.push_back({entities[i].tokens, entities[i].tags, intents[i].label});
  }
  return out;
}

std::vector<Param*> CombinedModel::params() {
  std::vector<Param*> ps = embedding.params();
  for (auto* p : first.params()) ps.push_back(p);
  for (auto* p : intent_output.params()) ps.push_back(p);
  for (auto* p : entity_head_params()) ps.push_back(p);
  return ps;
}

std::vector<Param*> CombinedModel::entity_head_params() {
  std::vector<Param*> ps = second.params();
  for (auto* p : projection.params()) ps.push_back(p);
  ps.push_back(&transitions);
  return ps;
}

Vec CombinedModel::intent_logits(const std::vector<std::string>& tokens) const {
  auto ids = embedding.encode(lower_all(tokens));
  if (ids.empty()) ids.push_back(tensor::Vocabulary::kPad);
  tensor::BiRnn::Cache c;
  first.forward(embedding.forward(ids), &c);
  return intent_output.forward(tensor::BiRnn::final_state(c));
}

Vec CombinedModel::intent_distribution(const std::vector<std::string>& tokens) const {
  return tensor::softmax(intent_logits(tokens));
}

std::vector<std::string> CombinedModel::tag(const std::vector<std::string>& tokens) const {
  if (tokens.empty()) return {};
  auto hs1 = first.forward(embedding.forward(embedding.encode(lower_all(tokens))), nullptr);
  auto hs2 = second.forward(hs1, nullptr);
  Tensor e = Tensor::matrix(hs2.size(), tagset_.size());
  for (std::size_t t = 0; t < hs2.size(); ++t) {
    Vec row = projection.forward(hs2[t]);
    std::copy(row.begin(), row.end(), e.row(t).begin());
  }
  std::vector<std::string> out;
  for (auto k : tensor::crf_viterbi(e, transitions.value)) out.push_back(tagset_.label(k));
  return out;
}

CombinedModel CombinedModel::train(const std::vector<JointExample>& data, const TaggerConfig& cfg,
                                   std::vector<double>* epoch_losses, bool detach_entity_head) {
  if (data.empty()) throw ValidationError("combined model: empty dataset");
  CombinedModel m;
  m.config_ = cfg;
  std::vector<std::vector<std::string>> sentences, tag_lists;
  std::vector<std::string> raw;
  for (const auto& ex : data) {
    if (ex.tokens.empty() || ex.tokens.size() != ex.tags.size()) {
      throw ValidationError("combined model: sentence with mismatched or empty tags");
    }
    sentences.push_back(lower_all(ex.tokens));
    tag_lists.push_back(ex.tags);
    raw.push_back(ex.intent);
  }
  m.labels_ = sorted_labels(raw);
  if (m.labels_.size() < 2) throw ValidationError("combined model: need at least two intents");
  m.tagset_ = TagSet(types_of(tag_lists));
  Rng rng(cfg.train.seed);
  m.embedding = make_embedding("embedding", build_vocabulary(sentences), cfg.embedding);
  const auto cell = tensor::parse_cell(cfg.cell);
  m.first = tensor::BiRnn("first", cell, m.embedding.dim(), cfg.hidden, rng);
  m.intent_output = tensor::Dense("intent", m.first.output_dim(), m.labels_.size(), rng);
  m.second = tensor::BiRnn("second", cell, m.first.output_dim(), cfg.hidden, rng);
  m.projection = tensor::Dense("projection", m.second.output_dim(), m.tagset_.size(), rng);
  m.transitions = Param("transitions", Tensor::matrix(m.tagset_.size(), m.tagset_.size()));

  std::vector<std::vector<std::size_t>> ids, gold;
  std::vector<std::size_t> intent_gold;
  for (std::size_t i = 0; i < data.size(); ++i) {
    ids.push_back(m.embedding.encode(sentences[i]));
    std::vector<std::size_t> g;
    for (const auto& t : tag_lists[i]) g.push_back(m.tagset_.index(t));
    gold.push_back(std::move(g));
    intent_gold.push_back(label_index(m.labels_, data[i].intent));
  }
  auto params = m.params();
  auto adam = tensor::make_adam_state(params, cfg.train.adam());
  auto losses = tensor::run_epochs(data.size(), cfg.train.epochs, cfg.train, params, adam, rng,
                                   [&](std::size_t i, Rng& r) {
    tensor::BiRnn::Cache c1, c2;
    auto hs1 = m.first.forward(m.embedding.forward(ids[i]), &c1);
    Vec final1 = tensor::BiRnn::final_state(c1);
    Vec dlogits;
    const double ce = tensor::softmax_cross_entropy(m.intent_output.forward(final1), intent_gold[i], &dlogits);
    Vec dfinal = m.intent_output.backward(final1, dlogits);
    auto hs2 = m.second.forward(hs1, &c2);
    std::vector<Vec> dys;
    const double nll = crf_head_step(m.second, m.projection, m.transitions, c2, hs2, gold[i], cfg.keep, &r, dys);
    auto dhs1 = m.second.backward(c2, dys);
    if (detach_entity_head) dhs1.clear();
    m.embedding.backward(ids[i], m.first.backward(c1, dhs1, dfinal));
    return ce + nll;
  });
  if (epoch_losses) *epoch_losses = losses;
  return m;
}

// ---- SentimentModel ----

void SentimentModel::build(const tensor::Vocabulary& vocab, Rng& rng) {
  embedding = make_embedding("embedding", vocab, config_.embedding);
  rnn = tensor::BiRnn("rnn", tensor::parse_cell(config_.cell), embedding.dim(), config_.hidden, rng);
  output = tensor::Dense("output", rnn.output_dim(), 1, rng);
}

std::vector<Param*> SentimentModel::params() {
  std::vector<Param*> ps = embedding.params();
  for (auto* p : rnn.params()) ps.push_back(p);
  for (auto* p : output.params()) ps.push_back(p);
  return ps;
}

std::vector<std::size_t> SentimentModel::ids(const std::string& text) const {
  auto toks = words(text);
  if (toks.size() > config_.max_tokens) toks.resize(config_.max_tokens);
  auto out = embedding.encode(toks);
  if (out.empty()) out.push_back(tensor::Vocabulary::kPad);
  return out;
}

double SentimentModel::score(const std::string& text) const {
  tensor::BiRnn::Cache c;
  rnn.forward(embedding.forward(ids(text)), &c);
  return tensor::sigmoid(output.forward(tensor::BiRnn::final_state(c))[0]);
}

double SentimentModel::accuracy(const std::vector<SentimentText>& data) const {
  if (data.empty()) return 0.0;
  std::size_t ok = 0;
  for (const auto& ex : data) ok += (score(ex.text) > 0.5) == (ex.label == 1);
  return static_cast<double>(ok) / static_cast<double>(data.size());
}

SentimentModel SentimentModel::train(const std::vector<SentimentText>& data, const SentimentConfig& cfg,
                                     std::vector<double>* epoch_losses) {
  if (data.empty()) throw ValidationError("sentiment: empty dataset");
  SentimentModel m;
  m.config_ = cfg;
  std::vector<std::vector<std::string>> sentences;
  for (const auto& ex : data) {
    auto toks = words(ex.text);
    if (toks.size() > cfg.max_tokens) toks.resize(cfg.max_tokens);
    sentences.push_back(std::move(toks));
  }
  Rng rng(cfg.train.seed);
  m.build(build_vocabulary(sentences), rng);
  std::vector<std::vector<std::size_t>> ids;
  for (const auto& ex : data) ids.push_back(m.ids(ex.text));
  auto params = m.params();
  auto adam = tensor::make_adam_state(params, cfg.train.adam());
  auto losses = tensor::run_epochs(data.size(), cfg.train.epochs, cfg.train, params, adam, rng,
                                   [&](std::size_t i, Rng&) {
    tensor::BiRnn::Cache c;
    m.rnn.forward(m.embedding.forward(ids[i]), &c);
    Vec fin = tensor::BiRnn::final_state(c);
    const double z = m.output.forward(fin)[0];
    const double p = tensor::sigmoid(z);
    const double y = data[i].label;
    const double eps = 1e-12;
    const double loss = -(y * std::log(p + eps) + (1 - y) * std::log(1 - p + eps));
    Vec dfin = m.output.backward(fin, Vec{p - y});
    m.embedding.backward(ids[i], m.rnn.backward(c, {}, dfin));
    return loss;
  });
  if (epoch_losses) *epoch_losses = losses;
  return m;
}

void SentimentModel::save(const std::filesystem::path& dir) const {
  json meta = {{"kind", "sentiment"}, {"config", config_}};
  save_model(dir, meta, embedding.vocabulary, const_cast<SentimentModel*>(this)->params());
}

SentimentModel SentimentModel::load(const std::filesystem::path& dir) {
  json meta = read_json(dir / "config.json");
  SentimentModel m;
  m.config_ = meta.at("config").get<SentimentConfig>();
  m.config_.embedding.pretrained.clear();
  Rng rng(0);
  m.build(tensor::Vocabulary::load(dir / "vocab.txt"), rng);
  restore(dir, m.params());
  return m;
}

double entity_sentiment(const SentimentModel& model, const std::string& entity,
                        const std::vector<std::string>& corpus, std::size_t top_n) {
  const std::string needle = lowercase(entity);
  if (needle.empty()) throw NoEvidence("empty entity");
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& doc : corpus) {
    if (n >= top_n) break;
    if (lowercase(doc).find(needle) == std::string::npos) continue;
    sum += model.score(doc);
    ++n;
  }
  if (n == 0) throw NoEvidence("no evidence for entity '" + entity + "'");
  return sum / static_cast<double>(n);
}

}  // namespace topicflow::nlu
