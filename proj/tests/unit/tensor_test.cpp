#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "support/crf_oracle.hpp"
#include "support/layer_gradchecks.hpp"
#include "topicflow/error.hpp"
#include "topicflow/tensor/adam.hpp"
#include "topicflow/tensor/crf.hpp"
#include "topicflow/tensor/embedding.hpp"
#include "topicflow/tensor/layers.hpp"
#include "topicflow/tensor/snapshot.hpp"

using namespace topicflow;
using namespace topicflow::tensor;
using topicflow::testing::enumerate_paths;
using topicflow::testing::random_vec;

namespace {

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
  auto dir = std::filesystem::temp_directory_path() / "topicflow_tensor_test";
  std::filesystem::create_directories(dir);
  auto p = dir / name;
  std::ofstream(p, std::ios::binary) << content;
  return p;
}

}  // namespace

TEST_CASE("softmax examples") {
  auto p = softmax(Vec{0, 0, 0, 0});
  for (double v : p) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));

  auto q = softmax(Vec{2, 1, 0});
  CHECK(q[0] == doctest::Approx(0.6652).epsilon(1e-4));
  CHECK(q[1] == doctest::Approx(0.2447).epsilon(1e-4));
  CHECK(q[2] == doctest::Approx(0.0900).epsilon(1e-3));

  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    Vec logits = random_vec(rng, 1 + rng.below(8), 20.0);
    auto a = softmax(logits);
    double sum = 0;
    for (double v : a) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
    const double c = rng.uniform(-50, 50);
    Vec shifted = logits;
    for (auto& x : shifted) x += c;
    auto b = softmax(shifted);
    CHECK(argmax(a) == argmax(b));
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-12);
  }
  // Large logits stay finite.
  auto big = softmax(Vec{1000, 999, -1000});
  CHECK(std::isfinite(big[0]));
  CHECK(big[2] == 0.0);
}

TEST_CASE("adam update") {
  SUBCASE("first step closed form") {
    Param p("w", Tensor::vector(1, 0.0));
    p.grad[0] = 1.0;
    auto state = make_adam_state({&p}, {0.001, 0.9, 0.999, 1e-8});
    adam_update({&p}, state);
    CHECK(std::abs(p.value[0] - (-0.001)) <= 1e-9);
    CHECK(state.step == 1);
  }
  SUBCASE("zero gradient leaves parameter unchanged") {
    Param p("w", Tensor::vector(3, 0.5));
    auto state = make_adam_state({&p}, {});
    for (int i = 0; i < 5; ++i) adam_update({&p}, state);
    for (double v : p.value.values()) CHECK(v == 0.5);
  }
  SUBCASE("frozen parameter skipped") {
    Param p("w", Tensor::vector(1, 2.0), false);
    p.grad[0] = 3.0;
    auto state = make_adam_state({&p}, {});
    adam_update({&p}, state);
    CHECK(p.value[0] == 2.0);
  }
  SUBCASE("identical runs are bit-identical") {
    auto run = [] {
      Rng rng(42);
      Dense d("d", 3, 2, rng);
      auto state = make_adam_state(d.params(), {0.01, 0.5, 0.999, 1e-8});
      for (int i = 0; i < 50; ++i) {
        zero_grads(d.params());
        Vec x = random_vec(rng, 3);
        Vec y = d.forward(x);
        d.backward(x, y);
        adam_update(d.params(), state);
      }
      return d.weight.value;
    };
    CHECK(run() == run());
  }
}

TEST_CASE("crf viterbi") {
  SUBCASE("single step argmax") {
    Tensor e({1, 3}, {0.1, 0.9, 0.3});
    Tensor tr({3, 3}, 0.0);
    CHECK(crf_viterbi(e, tr) == std::vector<std::size_t>{1});
  }
  SUBCASE("matches brute force on random instances") {
    Rng rng(2024);
    for (int seed = 0; seed < 300; ++seed) {
      const std::size_t T = 1 + rng.below(6), K = 1 + rng.below(5);
      Tensor e({T, K}, random_vec(rng, T * K, 3.0));
      Tensor tr({K, K}, random_vec(rng, K * K, 3.0));
      CHECK(crf_viterbi(e, tr) == enumerate_paths(e, tr).best_path);
    }
  }
  SUBCASE("ties resolve to the lowest-index path, as in enumeration order") {
    Rng rng(5);
    for (int seed = 0; seed < 200; ++seed) {
      const std::size_t T = 1 + rng.below(5), K = 1 + rng.below(4);
      Vec ev(T * K), tv(K * K);
      for (auto& x : ev) x = static_cast<double>(rng.below(3));
      for (auto& x : tv) x = static_cast<double>(rng.below(2));
      Tensor e({T, K}, ev), tr({K, K}, tv);
      CHECK(crf_viterbi(e, tr) == enumerate_paths(e, tr).best_path);
    }
  }
  SUBCASE("random three-tag length-three instance against all 27 paths") {
    Rng rng(99);
    Tensor e({3, 3}, random_vec(rng, 9));
    Tensor tr({3, 3}, random_vec(rng, 9));
    auto bf = enumerate_paths(e, tr);
    auto path = crf_viterbi(e, tr);
    CHECK(path == bf.best_path);
    CHECK(crf_path_score(e, tr, path) == doctest::Approx(bf.best_score));
  }
}

TEST_CASE("crf likelihood") {
  Rng rng(11);
  for (int seed = 0; seed < 200; ++seed) {
    const std::size_t T = 1 + rng.below(5), K = 1 + rng.below(4);
    Tensor e({T, K}, random_vec(rng, T * K, 2.0));
    Tensor tr({K, K}, random_vec(rng, K * K, 2.0));
    auto bf = enumerate_paths(e, tr);
    const double log_z = crf_log_partition(e, tr);
    CHECK(std::abs(std::exp(log_z) - bf.sum_exp) / bf.sum_exp <= 1e-8);
    std::vector<std::size_t> tags(T);
    for (auto& t : tags) t = rng.below(K);
    CHECK(crf_log_likelihood(e, tr, tags) <= 1e-12);
  }

  SUBCASE("peaked emissions: viterbi path has the highest likelihood") {
    Tensor e({4, 3}, 0.0);
    const std::vector<std::size_t> gold{2, 0, 1, 1};
    for (std::size_t t = 0; t < 4; ++t) e.at(t, gold[t]) = 8.0;
    Tensor tr({3, 3}, random_vec(rng, 9, 0.5));
    CHECK(crf_viterbi(e, tr) == gold);
    const double ll = crf_log_likelihood(e, tr, gold);
    std::vector<std::size_t> other(4, 0);
    for (std::size_t code = 0; code < 81; ++code) {
      std::size_t c = code;
      for (auto& t : other) {
        t = c % 3;
        c /= 3;
      }
      CHECK(ll >= crf_log_likelihood(e, tr, other));
    }
  }
}

TEST_CASE("gradient checks for every layer") {
  for (const auto& check : topicflow::testing::all_layer_gradchecks(100, 1000)) {
    auto r = check.run();
    INFO(check.name << " max rel err " << r.max_relative_error << " over " << r.checked);
    CHECK(r.checked > 0);
    CHECK(r.max_relative_error < 1e-4);
  }
}

TEST_CASE("text cnn features") {
  Vocabulary vocab;
  for (const char* w : {"a", "b", "c", "d", "e", "f", "g"}) vocab.add(w);
  Rng rng(3);
  Embedding emb("e", make_embedding_table(vocab, 4, nullptr, true));
  TextCnnConfig cfg;
  cfg.widths = {1, 2, 3, 4, 5};
  cfg.filters = 21;
  TextCnn cnn("c", 4, cfg, rng);

  SUBCASE("output length is widths times filters") {
    auto ids = vocab.encode({"a", "b", "c", "d", "e", "f", "g"});
    CHECK(text_cnn_features(ids, emb, cnn).size() == 105);
    CHECK(text_cnn_features(vocab.encode({"a"}), emb, cnn).size() == 105);
  }
  SUBCASE("zero embeddings and zero bias give zero features") {
    Embedding zero = emb;
    zero.table.value.fill(0.0);
    TextCnnConfig lin = cfg;
    lin.activation = Activation::identity;
    TextCnn c2("c2", 4, lin, rng);
    for (auto& b : c2.biases) b.value.fill(0.0);
    for (double v : text_cnn_features(vocab.encode({"a", "b", "c"}), zero, c2)) CHECK(v == 0.0);
  }
  SUBCASE("doubling a constant sentence keeps pooled features") {
    auto once = vocab.encode({"c", "c", "c", "c", "c", "c"});
    auto twice = once;
    twice.insert(twice.end(), once.begin(), once.end());
    CHECK(text_cnn_features(once, emb, cnn) == text_cnn_features(twice, emb, cnn));
  }
  SUBCASE("doubled sentence equals the max over an explicit window enumeration") {
    // Oracle: max over every window of the doubled, same-padded sequence.
    auto once = vocab.encode({"a", "b", "c", "d", "e", "f", "g"});
    auto twice = once;
    twice.insert(twice.end(), once.begin(), once.end());
    auto got = text_cnn_features(twice, emb, cnn);
    auto base = text_cnn_features(once, emb, cnn);
    const std::size_t d = 4, T = twice.size();
    for (std::size_t g = 0; g < cfg.widths.size(); ++g) {
      const std::size_t w = cfg.widths[g], left = (w - 1) / 2;
      for (std::size_t f = 0; f < cfg.filters; ++f) {
        double best = -INFINITY;
        for (std::size_t t = 0; t < T; ++t) {
          double s = cnn.biases[g].value[f];
          for (std::size_t k = 0; k < w; ++k) {
            const long pos = static_cast<long>(t + k) - static_cast<long>(left);
            const std::size_t id = (pos < 0 || pos >= static_cast<long>(T)) ? 0 : twice[pos];
            for (std::size_t c = 0; c < d; ++c) {
              s += cnn.weights[g].value.at(f, k * d + c) * emb.table.value.at(id, c);
            }
          }
          best = std::max(best, std::max(s, 0.0));
        }
        CHECK(got[g * cfg.filters + f] == doctest::Approx(best).epsilon(1e-12));
        CHECK(got[g * cfg.filters + f] >= base[g * cfg.filters + f] - 1e-12);
      }
    }
  }
}

TEST_CASE("lstm") {
  Rng rng(8);
  SUBCASE("zero weights and zero state give zero output") {
    Lstm lstm("l", 3, 4, rng);
    lstm.weight.value.fill(0.0);
    lstm.bias.value.fill(0.0);
    auto s = lstm.step(random_vec(rng, 3), lstm.zero_state(), nullptr);
    for (double v : s.h) CHECK(v == 0.0);
  }
  SUBCASE("single step: forward and backward directions agree with shared weights") {
    Lstm fw("f", 3, 4, rng);
    Lstm bw = fw;
    auto out = bilstm_sequence(fw, bw, {random_vec(rng, 3)});
    REQUIRE(out.size() == 1);
    for (std::size_t k = 0; k < 4; ++k) CHECK(out[0][k] == out[0][4 + k]);
  }
  SUBCASE("backward outputs equal a forward run over the reversed sequence") {
    Lstm fw("f", 3, 4, rng), bw("b", 3, 4, rng);
    std::vector<Vec> xs{random_vec(rng, 3), random_vec(rng, 3), random_vec(rng, 3)};
    auto out = bilstm_sequence(fw, bw, xs);
    std::vector<Vec> rev(xs.rbegin(), xs.rend());
    auto ref = bw.sequence(rev, nullptr);
    for (std::size_t t = 0; t < 3; ++t) {
      for (std::size_t k = 0; k < 4; ++k) CHECK(out[t][4 + k] == ref[2 - t][k]);
    }
  }
}

TEST_CASE("load_embeddings") {
  auto p = temp_file("emb.txt", "hello 0.1 0.2 0.3\nworld -1 0 1\n");
  auto table = load_embeddings(p, 3);
  CHECK(table.vocabulary.size() == 4);
  CHECK(table.vectors.rows() == 4);
  CHECK(table.vocabulary.index("hello") == 2);
  CHECK(table.lookup("world")[0] == -1.0);
  CHECK(table.vocabulary.index("missing") == Vocabulary::kUnk);
  auto unk = table.lookup("missing");
  auto unk_row = table.vectors.row(Vocabulary::kUnk);
  CHECK(std::equal(unk.begin(), unk.end(), unk_row.begin()));
  bool nonzero = false;
  for (double v : unk_row) nonzero |= v != 0.0;
  CHECK(nonzero);

  auto again = load_embeddings(p, 3);
  CHECK(again.vectors == table.vectors);
  CHECK(again.vocabulary == table.vocabulary);

  auto header = temp_file("emb_header.vec", "2 3\nhello 0.1 0.2 0.3\nworld -1 0 1\n");
  CHECK(load_embeddings(header, 3).vectors == table.vectors);

  auto bad = temp_file("bad.txt", "a 1 2 3\nb 1 2\n");
  try {
    load_embeddings(bad, 3);
    FAIL("expected parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("snapshot round trip") {
  Rng rng(1);
  Dense d("layer", 3, 2, rng);
  auto path = temp_file("snap.bin", "");
  save_snapshot(path, d.params());
  std::ifstream in(path, std::ios::binary);
  char magic[4];
  in.read(magic, 4);
  CHECK(std::string(magic, 4) == "TFW1");

  Rng other(2);
  Dense e("layer", 3, 2, other);
  CHECK(!(e.weight.value == d.weight.value));
  restore_params(load_snapshot(path), e.params(), path.string());
  CHECK(e.weight.value == d.weight.value);
  CHECK(e.bias.value == d.bias.value);

  Dense wrong("layer", 4, 2, other);
  CHECK_THROWS_AS(restore_params(load_snapshot(path), wrong.params(), "x"), ConfigError);
  CHECK_THROWS_AS(decode_snapshot("XXXX00000000"), ParseError);
}
