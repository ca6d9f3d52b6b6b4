#include "doctest.h"

#include <fstream>
#include <set>

#include "support/temp_dir.hpp"
#include "topicflow/error.hpp"
#include "topicflow/eval/babi.hpp"
#include "topicflow/eval/hpo.hpp"
#include "topicflow/eval/metrics.hpp"
#include "topicflow/hcn/training.hpp"

using namespace topicflow;
using topicflow::testing::TempDir;

#ifndef TOPICFLOW_DATA_DIR
#error "TOPICFLOW_DATA_DIR must be defined"
#endif

namespace {

const char* kToyBabi =
    "1 <SILENCE>\tHello , welcome to the Cambridge restaurant system . How may I help you ?\n"
    "2 cheap restaurant in the north\tWhat kind of food would you like?\n"
    "3 italian\tapi_call italian north cheap\n"
    "4 da_vinci_pizzeria R_post_code da_vinci_pizzeria_post_code\n"
    "5 da_vinci_pizzeria R_cuisine italian\n"
    "6 da_vinci_pizzeria R_location north\n"
    "7 da_vinci_pizzeria R_phone da_vinci_pizzeria_phone\n"
    "8 da_vinci_pizzeria R_price cheap\n"
    "9 <SILENCE>\tda_vinci_pizzeria is a nice restaurant in the north of town serving italian food\n"
    "10 phone number\tThe phone number of da_vinci_pizzeria is da_vinci_pizzeria_phone\n"
    "11 thank you goodbye\tyou are welcome\n"
    "\n"
    "1 <SILENCE>\tHello , welcome to the Cambridge restaurant system . How may I help you ?\n"
    "2 expensive thai food\tapi_call thai R_location expensive\n"
    "3 bangkok_city R_cuisine thai\n"
    "4 bangkok_city R_location centre\n"
    "5 bangkok_city R_phone bangkok_city_phone\n"
    "6 <SILENCE>\tbangkok_city is a nice restaurant in the centre of town serving thai food\n"
    "7 whats the phone\tThe phone number of bangkok_city is bangkok_city_phone\n"
    "8 thanks\tyou are welcome\n";

eval::Normalizer rules() { return eval::Normalizer::load(std::string(TOPICFLOW_DATA_DIR) + "/babi6_normalization.tsv"); }

}  // namespace

TEST_CASE("accuracy metrics") {
  eval::Labels g{{1, 2, 3, 4, 5, 6}}, p{{1, 2, 3, 4, 5, 0}};
  CHECK(eval::turn_accuracy(p, g) == doctest::Approx(5.0 / 6));
  eval::Labels g3{{1, 2}, {1, 2}, {1, 2}}, p3{{1, 2}, {1, 2}, {1, 0}};
  CHECK(eval::turn_accuracy(p3, g3) == doctest::Approx(0.8333).epsilon(1e-4));
  CHECK(eval::dialogue_accuracy(p3, g3) == doctest::Approx(0.6667).epsilon(1e-4));
  CHECK(eval::turn_accuracy(g3, g3) == 1.0);
  CHECK(eval::dialogue_accuracy(g3, g3) == 1.0);
  CHECK_THROWS_AS(eval::turn_accuracy({{1}}, {{1, 2}}), ValidationError);
  CHECK_THROWS_AS(eval::dialogue_accuracy({{1}}, {{1}, {2}}), ValidationError);

  // pooled turn accuracy is not an upper bound when lengths differ
  eval::Labels uneven_g{{1}, {1, 1, 1, 1, 1}}, uneven_p{{1}, {0, 0, 0, 0, 0}};
  CHECK(eval::dialogue_accuracy(uneven_p, uneven_g) == 0.5);
  CHECK(eval::turn_accuracy(uneven_p, uneven_g) == doctest::Approx(1.0 / 6));
  CHECK(eval::macro_turn_accuracy(uneven_p, uneven_g) == 0.5);
  CHECK_NOTHROW(eval::report(uneven_p, uneven_g));

  auto r = eval::report(p3, g3, "cfg");
  CHECK(r.turns == 6);
  CHECK(r.confusion.at({2, 0}) == 1);
  CHECK(r.confusion.at({2, 2}) == 2);

  tensor::Rng rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    eval::Labels a, b;
    for (std::size_t d = 0; d < 1 + rng.below(6); ++d) {
      std::vector<std::size_t> x, y;
      for (std::size_t t = 0; t < 1 + rng.below(5); ++t) {
        x.push_back(rng.below(3));
        y.push_back(rng.below(3));
      }
      a.push_back(x);
      b.push_back(y);
    }
    auto rep = eval::report(a, b);
    CHECK(rep.dialogue_accuracy <= rep.macro_turn_accuracy + 1e-12);
  }
}

TEST_CASE("bAbI parsing and normalization") {
  auto raw = eval::parse_babi(kToyBabi, "toy.txt");
  REQUIRE(raw.size() == 2);
  CHECK(raw[0].turns.size() == 6);
  CHECK(raw[0].facts.size() == 5);
  CHECK(raw[1].line == 13);

  auto data = eval::build_babi(raw, {}, {}, rules());
  CHECK(data.train.size() == 2);
  const std::set<std::string> classes(data.classes.begin(), data.classes.end());
  CHECK(classes == std::set<std::string>{
                       "Hello , welcome to the Cambridge restaurant system . How may I help you ?",
                       "What kind of food would you like?",
                       "api_call <cuisine> <location> <price>",
                       "api_call <cuisine> R_location <price>",
                       "<name> is a nice restaurant in the <location> of town serving <cuisine> food",
                       "The phone number of <name> is <phone>",
                       "you are welcome"});
  // same class for both venues
  CHECK(data.train[0].turns[3].second == data.train[1].turns[2].second);
  CHECK(data.train[0].raw_responses[3].find("da_vinci") != std::string::npos);

  auto ts = eval::babi_transitions(data.train);
  CHECK(ts[0].steps[0].utterance.empty());
  CHECK(ts[0].steps[1].utterance == "cheap restaurant in the north");

  CHECK_THROWS_WITH_AS(eval::parse_babi("1 hi\tthere\n3 bad\tline\n", "f.txt"), doctest::Contains("f.txt:2"), ParseError);
  CHECK_THROWS_WITH_AS(eval::parse_babi("x hi\tthere\n", "f.txt"), doctest::Contains("f.txt:1"), ParseError);
  CHECK_THROWS_AS(eval::parse_babi("1 a R_x\n", "f.txt"), ParseError);
  CHECK_THROWS_AS(eval::Normalizer::parse("bogus\tx\n", "r.tsv"), ParseError);
  CHECK_THROWS_AS(eval::Normalizer::parse("regex\t(\tx\n", "r.tsv"), ParseError);

  TempDir dir("babi");
  dir.write(eval::kBabi6Train, kToyBabi);
  dir.write(eval::kBabi6Valid, kToyBabi);
  dir.write(eval::kBabi6Test, kToyBabi);
  auto loaded = eval::load_babi6(dir.path(), rules());
  CHECK(loaded.train.size() == 2);
  CHECK(loaded.classes.size() == 7);
  CHECK_THROWS_AS(eval::load_babi6(dir / "none", rules()), ConfigError);
}

TEST_CASE("bAbI runner on a toy set") {
  std::string text;
  for (int i = 0; i < 6; ++i) text += std::string(kToyBabi) + "\n";
  auto raw = eval::parse_babi(text, "toy.txt");
  auto data = eval::build_babi(raw, raw, raw, rules());
  auto cfg = hcn::babi_preset("fasttext+cnn");
  cfg.embedding.dim = 16;
  cfg.lstm_size = 24;
  cfg.filters = 6;
  cfg.max_epochs = 6;
  cfg.train.learning_rate = 0.01;
  std::vector<double> seen;
  auto run = eval::run_babi6(data, cfg, [&](std::size_t, double acc) { seen.push_back(acc); });
  CHECK(seen == run.valid_curve);
  CHECK(run.valid_curve.size() == 6);
  CHECK(run.epochs >= 1);
  CHECK(run.test.turn_accuracy >= 0.8);
  CHECK(run.test.dialogue_accuracy <= run.test.turn_accuracy);
  auto again = eval::run_babi6(data, cfg);
  CHECK(again.valid_curve == run.valid_curve);
}

TEST_CASE("random search") {
  auto space = eval::babi_search_space();
  std::vector<nlohmann::json> calls;
  auto score = [&](const nlohmann::json& p) {
    calls.push_back(p);
    return p["lstm_keep"].get<double>();
  };
  auto one = eval::hpo_random_search(space, 1, 5, score);
  CHECK(one.trials.size() == 1);
  CHECK(one.best == calls.front());

  calls.clear();
  auto a = eval::hpo_random_search(space, 20, 9, score);
  auto b = eval::hpo_random_search(space, 20, 9, score);
  REQUIRE(a.trials.size() == 20);
  for (std::size_t i = 0; i < 20; ++i) CHECK(a.trials[i].params == b.trials[i].params);
  double best = 0;
  for (const auto& t : a.trials) {
    best = std::max(best, t.score);
    for (const auto& [name, r] : space.numeric) {
      const double v = t.params[name].get<double>();
      CHECK(v >= r.lo);
      CHECK(v <= r.hi);
    }
    CHECK(t.params["lstm_size"].is_number_integer());
  }
  CHECK(a.best_score == best);

  eval::SearchSpace point;
  point.numeric["lstm_size"] = {128, 128, false, true};
  point.numeric["lstm_keep"] = {0.8, 0.8};
  point.choices["activation"] = {"tanh"};
  auto p = eval::hpo_random_search(point, 7, 3, score);
  CHECK(p.best == nlohmann::json{{"lstm_size", 128}, {"lstm_keep", 0.8}, {"activation", "tanh"}});

  CHECK_THROWS_AS(eval::hpo_random_search(space, 0, 1, score), ValidationError);

  auto cfg = eval::apply_params(hcn::HcnConfig{}, p.best);
  CHECK(cfg.lstm_size == 128);
  CHECK(cfg.activation == "tanh");
  CHECK_THROWS_AS(eval::apply_params(hcn::HcnConfig{}, {{"nope", 1}}), ValidationError);

  TempDir dir("hpo");
  eval::write_trial_log(dir / "trials.jsonl", a);
  std::ifstream in(dir / "trials.jsonl");
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line);
    CHECK(j["trial"] == n);
    CHECK(j["params"] == a.trials[n].params);
    ++n;
  }
  CHECK(n == 20);
}

TEST_CASE("results table") {
  auto t = eval::format_table({"variant", "turn"}, {{"fasttext+cnn", "58.9"}, {"plain", "57.6"}});
  CHECK(t ==
        "variant       turn\n"
        "------------  ----\n"
        "fasttext+cnn  58.9\n"
        "plain         57.6\n");
  CHECK_THROWS_AS(eval::format_table({"a"}, {{"x", "y"}}), ValidationError);
}
