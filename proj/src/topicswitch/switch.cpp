#include "topicflow/topicswitch/switch.hpp"

#include <fstream>
#include <regex>
#include <sstream>

#include "topicflow/error.hpp"
#include "topicflow/nlu/tokenizer.hpp"
#include "topicflow/tensor/snapshot.hpp"

namespace topicflow::topicswitch {

using nlohmann::json;
using tensor::Param;
using tensor::Rng;

namespace {

std::string bot_text(const dialogue::DialogueGraph& g, const dialogue::Inventory& inv, std::size_t class_id,
                     Rng& rng) {
  static const std::regex placeholder(R"(\{[^}]*\})");
  const auto& node = g.node(inv.at(class_id).node_id);
  if (node.kind != dialogue::NodeKind::bot || node.texts.empty()) return "";
  const std::string raw = node.texts[rng.below(node.texts.size())];
  std::string t = std::regex_replace(raw, placeholder, "");
  std::string out;
  bool space = false;
  for (char c : t) {
    if (c == ' ') {
      space = !out.empty();
      continue;
    }
    if (space) out += ' ';
    space = false;
    out += c;
  }
  return out;
}

std::string flat(const std::string& s) {
  std::string out = s;
  for (char& c : out) {
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  }
  return out;
}

}  // namespace

std::vector<SwitchExample> generate_switch_dataset(const std::vector<SwitchSource>& sources,
                                                   const std::vector<nlu::LabeledText>& intents, double mix_rate,
                                                   std::uint64_t seed) {
  if (sources.empty()) throw ValidationError("switch corpus: no dialogue data");
  if (intents.empty()) throw ValidationError("switch corpus: no intent examples");
  if (!(mix_rate >= 0.0 && mix_rate <= 1.0)) throw ValidationError("switch corpus: mix_rate outside [0, 1]");
  Rng rng(seed);
  std::vector<SwitchExample> out;
  for (const auto& src : sources) {
    for (const auto& t : *src.transitions) {
      std::string previous;
      for (const auto& step : t.steps) {
        if (!step.utterance.empty()) {
          SwitchExample ex{previous, step.utterance, 0};
          if (rng.bernoulli(mix_rate)) {
            ex.message = intents[rng.below(intents.size())].text;
            ex.label = 1;
          }
          out.push_back(std::move(ex));
        }
        previous = bot_text(*src.graph, *src.inventory, step.class_id, rng);
      }
    }
  }
  return out;
}

std::string format_switch_corpus(const std::vector<SwitchExample>& data) {
  std::string out;
  for (const auto& ex : data) out += std::to_string(ex.label) + "\t" + flat(ex.previous) + "\t" + flat(ex.message) + "\n";
  return out;
}

std::vector<SwitchExample> parse_switch_corpus(const std::string& text, const std::string& source) {
  std::vector<SwitchExample> out;
  std::istringstream in(text);
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) throw ParseError(source, no, "expected label<TAB>previous<TAB>message");
    const std::string label = line.substr(0, t1);
    if (label != "0" && label != "1") throw ParseError(source, no, "label must be 0 or 1");
    SwitchExample ex{line.substr(t1 + 1, t2 - t1 - 1), line.substr(t2 + 1), label == "1" ? 1 : 0};
    if (ex.message.empty()) throw ParseError(source, no, "empty message");
    out.push_back(std::move(ex));
  }
  return out;
}

void to_json(json& j, const SwitchConfig& c) {
  j = {{"embedding", c.embedding}, {"widths", c.widths},       {"filters", c.filters},
       {"hidden", c.hidden},       {"activation", c.activation}, {"keep", c.keep},
       {"threshold", c.threshold}, {"mix_rate", c.mix_rate},     {"train", c.train}};
}

void from_json(const json& j, SwitchConfig& c) {
  if (j.contains("embedding")) c.embedding = j["embedding"].get<nlu::EmbeddingConfig>();
  c.widths = j.value("widths", c.widths);
  c.filters = j.value("filters", c.filters);
  c.hidden = j.value("hidden", c.hidden);
  c.activation = j.value("activation", c.activation);
  c.keep = j.value("keep", c.keep);
  c.threshold = j.value("threshold", c.threshold);
  c.mix_rate = j.value("mix_rate", c.mix_rate);
  if (j.contains("train")) c.train = j["train"].get<tensor::TrainConfig>();
}

void SwitchModel::build(const tensor::Vocabulary& vocab, Rng& rng) {
  embedding = nlu::make_embedding("embedding", vocab, config_.embedding);
  tensor::TextCnnConfig tc{config_.widths, config_.filters, tensor::parse_activation(config_.activation)};
  response_cnn = tensor::TextCnn("response_cnn", embedding.dim(), tc, rng);
  message_cnn = tensor::TextCnn("message_cnn", embedding.dim(), tc, rng);
  rnn = tensor::Lstm("rnn", response_cnn.output_dim() + message_cnn.output_dim(), config_.hidden, rng);
  output = tensor::Dense("output", config_.hidden, 2, rng);
}

std::vector<Param*> SwitchModel::params() {
  std::vector<Param*> ps = embedding.params();
  for (auto* p : response_cnn.params()) ps.push_back(p);
  for (auto* p : message_cnn.params()) ps.push_back(p);
  for (auto* p : rnn.params()) ps.push_back(p);
  for (auto* p : output.params()) ps.push_back(p);
  return ps;
}

std::vector<std::size_t> SwitchModel::ids(const std::string& text) const {
  auto out = embedding.encode(nlu::words(text));
  if (out.empty()) out.push_back(tensor::Vocabulary::kPad);
  return out;
}

Vec SwitchModel::distribution(const std::string& previous, const std::string& message) const {
  Vec x = response_cnn.forward(embedding.forward(ids(previous)), embedding.padding_row(), nullptr);
  Vec xm = message_cnn.forward(embedding.forward(ids(message)), embedding.padding_row(), nullptr);
  x.insert(x.end(), xm.begin(), xm.end());
  auto s = rnn.step(x, rnn.zero_state(), nullptr);
  return tensor::softmax(output.forward(s.h));
}

double SwitchModel::accuracy(const std::vector<SwitchExample>& data) const {
  if (data.empty()) return 0.0;
  std::size_t ok = 0;
  for (const auto& ex : data) ok += (detect_switch(*this, ex.previous, ex.message) > config_.threshold) == (ex.label == 1);
  return static_cast<double>(ok) / static_cast<double>(data.size());
}

SwitchModel SwitchModel::train(const std::vector<SwitchExample>& data, const SwitchConfig& cfg,
                               std::vector<double>* epoch_losses) {
  if (data.empty()) throw ValidationError("switch detector: empty dataset");
  SwitchModel m;
  m.config_ = cfg;
  std::vector<std::vector<std::string>> sentences;
  for (const auto& ex : data) {
    sentences.push_back(nlu::words(ex.previous));
    sentences.push_back(nlu::words(ex.message));
  }
  Rng rng(cfg.train.seed);
  m.build(nlu::build_vocabulary(sentences), rng);
  std::vector<std::vector<std::size_t>> prev_ids, msg_ids;
  for (const auto& ex : data) {
    prev_ids.push_back(m.ids(ex.previous));
    msg_ids.push_back(m.ids(ex.message));
  }
  auto params = m.params();
  auto adam = tensor::make_adam_state(params, cfg.train.adam());
  auto losses = tensor::run_epochs(data.size(), cfg.train.epochs, cfg.train, params, adam, rng,
                                   [&](std::size_t i, Rng& r) {
    tensor::TextCnn::Cache rc, mc;
    Vec fr = m.response_cnn.forward(m.embedding.forward(prev_ids[i]), m.embedding.padding_row(), &rc);
    Vec fm = m.message_cnn.forward(m.embedding.forward(msg_ids[i]), m.embedding.padding_row(), &mc);
    Vec x = fr;
    x.insert(x.end(), fm.begin(), fm.end());
    Vec mask;
    if (cfg.keep < 1.0) {
      mask = tensor::dropout_mask(x.size(), cfg.keep, r);
      tensor::apply_mask(x, mask);
    }
    tensor::Lstm::StepCache sc;
    auto s = m.rnn.step(x, m.rnn.zero_state(), &sc);
    Vec dlogits;
    const double loss =
        tensor::softmax_cross_entropy(m.output.forward(s.h), static_cast<std::size_t>(data[i].label), &dlogits);
    Vec dh = m.output.backward(s.h, dlogits);
    Vec dc(dh.size(), 0.0);
    Vec dx = m.rnn.step_backward(sc, dh, dc).dx;
    if (!mask.empty()) tensor::apply_mask(dx, mask);
    Vec dr(dx.begin(), dx.begin() + static_cast<std::ptrdiff_t>(fr.size()));
    Vec dm(dx.begin() + static_cast<std::ptrdiff_t>(fr.size()), dx.end());
    m.embedding.backward(prev_ids[i], m.response_cnn.backward(rc, dr));
    m.embedding.backward(msg_ids[i], m.message_cnn.backward(mc, dm));
    return loss;
  });
  if (epoch_losses) *epoch_losses = losses;
  return m;
}

void SwitchModel::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "config.json", std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + (dir / "config.json").string());
  out << json{{"kind", "switch_detector"}, {"config", config_}}.dump(2) << "\n";
  embedding.vocabulary.save(dir / "vocab.txt");
  tensor::save_snapshot(dir / "model.bin", const_cast<SwitchModel*>(this)->params());
}

SwitchModel SwitchModel::load(const std::filesystem::path& dir) {
  std::ifstream in(dir / "config.json");
  if (!in) throw ConfigError("missing model file " + (dir / "config.json").string());
  json meta;
  try {
    meta = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError((dir / "config.json").string(), 0, e.what());
  }
  SwitchModel m;
  m.config_ = meta.at("config").get<SwitchConfig>();
  m.config_.embedding.pretrained.clear();
  Rng rng(0);
  m.build(tensor::Vocabulary::load(dir / "vocab.txt"), rng);
  tensor::restore_params(tensor::load_snapshot(dir / "model.bin"), m.params(), (dir / "model.bin").string());
  return m;
}

double detect_switch(const SwitchModel& m, const std::string& previous, const std::string& message) {
  return m.distribution(previous, message)[1];
}

}  // namespace topicflow::topicswitch
