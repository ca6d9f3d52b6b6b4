#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>
#include <unistd.h>

#include "topicflow/engine/engine.hpp"
#include "topicflow/engine/http.hpp"
#include "topicflow/error.hpp"
#include "topicflow/eval/babi.hpp"
#include "topicflow/eval/hpo.hpp"
#include "topicflow/nlu/datasets.hpp"

namespace te = topicflow::engine;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
  std::string config;
  std::string models;
  std::optional<std::uint64_t> seed;
  bool verbose = false;
};

te::EngineConfig resolve_config(const Globals& g) {
  std::string path = g.config;
  if (path.empty()) {
    if (const char* env = std::getenv("TOPICFLOW_CONFIG")) path = env;
  }
  if (path.empty()) throw topicflow::ConfigError("no config: pass --config or set TOPICFLOW_CONFIG");
  auto cfg = te::load_config(path);
  if (!g.models.empty()) cfg.models = g.models;
  if (g.seed) {
    cfg.seed = *g.seed;
    auto& t = cfg.training;
    t.corpus_seed = *g.seed;
    for (auto* tc : {&t.intent.train, &t.dialogue_act.train, &t.sentiment_cnn.train}) tc->seed = *g.seed;
    t.entity.train.seed = *g.seed;
    t.sentiment.train.seed = *g.seed;
    t.detector.train.seed = *g.seed;
    t.hcn.train.seed = *g.seed;
  }
  return cfg;
}

std::string pct(double v) { return fmt::format("{:.1f}", 100.0 * v); }

int cmd_compile(const Globals& g) {
  auto cfg = resolve_config(g);
  te::validate_config(cfg, false);
  auto assets = te::load_assets(cfg);
  te::write_compiled(cfg.models, assets->dialogues);
  std::vector<std::vector<std::string>> rows;
  for (const auto& [id, d] : assets->dialogues) {
    rows.push_back({id, assets->topics.owner(id).value_or("-"), std::to_string(d.inventory.size()),
                    std::to_string(d.transitions.size())});
  }
  std::cout << topicflow::eval::format_table({"dialogue", "topic", "classes", "transitions"}, rows);
  std::cout << "compiled " << assets->dialogues.size() << " dialogues into " << cfg.models.string() << "\n";
  return 0;
}

int cmd_train_all(const Globals& g) {
  auto cfg = resolve_config(g);
  te::validate_config(cfg, false);
  auto assets = te::load_assets(cfg);
  const auto report = te::train_all(cfg, *assets, [](const std::string& s) { spdlog::info("training {}", s); });
  std::vector<std::vector<std::string>> rows;
  for (const auto& [id, r] : report["dialogues"].items()) {
    rows.push_back({id, std::to_string(r["transitions"].get<std::size_t>()), std::to_string(r["epochs"].get<std::size_t>()),
                    pct(r["train_accuracy"].get<double>()),
                    r.contains("cv_accuracy") ? pct(r["cv_accuracy"].get<double>()) : "-"});
  }
  std::cout << topicflow::eval::format_table({"dialogue", "transitions", "epochs", "train %", "cv %"}, rows);
  std::cout << fmt::format("intent test {}%  entity token {}%  switch test {}%  sentiment train {}%\n",
                           pct(report["intent"]["test"].get<double>()),
                           pct(report["entity"]["test_token_accuracy"].get<double>()),
                           pct(report["switch"]["test"].get<double>()), pct(report["sentiment"]["train"].get<double>()));
  std::cout << fmt::format("models written to {} in {:.1f} s\n", cfg.models.string(), report["seconds"].get<double>());
  return 0;
}

int cmd_gen_data(const Globals& g, const std::string& out) {
  auto cfg = resolve_config(g);
  auto assets = te::load_assets(cfg);
  auto t = cfg.training;
  t.corpus_dir.clear();
  const auto corpora = te::make_corpora(t);
  te::write_corpora(out, corpora);
  std::ofstream sw(fs::path(out) / "switch.tsv");
  sw << topicflow::topicswitch::format_switch_corpus(te::make_switch_corpus(assets->dialogues, corpora.nlu.intents, t));
  std::cout << "wrote intents.tsv, entities.conll, dialogue_acts.tsv, reviews.tsv, switch.tsv to " << out << "\n";
  return 0;
}

int cmd_chat(const Globals& g, const std::string& script, const std::string& session, const std::string& user,
             bool as_json) {
  auto cfg = resolve_config(g);
  te::Engine engine(cfg);
  std::ifstream file;
  std::istream* in = &std::cin;
  if (!script.empty()) {
    file.open(script);
    if (!file) throw topicflow::ConfigError("cannot read script " + script);
    in = &file;
  }
  const bool interactive = script.empty() && ::isatty(STDIN_FILENO);
  std::string line;
  while (true) {
    if (interactive) std::cout << "you> " << std::flush;
    if (!std::getline(*in, line)) break;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto r = engine.respond(session, user, line);
    if (as_json) {
      std::cout << te::to_json(r).dump() << "\n";
    } else if (interactive) {
      std::cout << "bot> " << r.response << "\n";
    } else {
      std::cout << te::format_exchange(line, r.response);
    }
  }
  return 0;
}

int cmd_annotate(const Globals& g, const std::vector<std::string>& texts) {
  auto cfg = resolve_config(g);
  validate_config(cfg, true);
  auto assets = te::load_assets(cfg);
  auto models = te::load_models(cfg.models, assets->dialogues);
  for (const auto& t : texts) std::cout << topicflow::nlu::to_json(models->nlu->annotate(t)).dump() << "\n";
  return 0;
}

int cmd_serve(const Globals& g, std::string host, int port) {
  auto cfg = resolve_config(g);
  te::validate_config(cfg, true);
  if (host.empty()) host = cfg.host;
  if (port < 0) port = cfg.port;
  te::HttpService service;
  std::exception_ptr load_error;
  std::thread loader([&] {
    try {
      service.set_engine(std::make_shared<te::Engine>(cfg));
      spdlog::info("models loaded");
    } catch (...) {
      load_error = std::current_exception();
      service.stop();
    }
  });
  spdlog::info("listening on {}:{}", host, port);
  const bool ok = service.listen(host, port);
  loader.join();
  if (load_error) std::rethrow_exception(load_error);
  if (!ok) throw std::runtime_error(fmt::format("cannot listen on {}:{}", host, port));
  return 0;
}

struct BabiOptions {
  std::string data;
  std::string variant = "fasttext+cnn";
  std::string embeddings;
  std::string normalization;
  std::size_t epochs = 0;
  std::size_t hpo = 0;
  std::string trials;
  std::string results;
};

int cmd_eval_babi6(const Globals& g, const BabiOptions& o) {
  namespace ev = topicflow::eval;
  if (o.data.empty()) throw topicflow::ConfigError("--data must name the directory with the bAbI task 6 files");
  std::string norm = o.normalization;
  if (norm.empty()) {
    std::string cfg_path = g.config;
    if (cfg_path.empty()) {
      if (const char* env = std::getenv("TOPICFLOW_CONFIG")) cfg_path = env;
    }
    norm = cfg_path.empty() ? "data/babi6_normalization.tsv"
                            : (fs::path(cfg_path).parent_path() / "babi6_normalization.tsv").string();
  }
  const auto data = ev::load_babi6(o.data, ev::Normalizer::load(norm));
  std::cout << fmt::format("loaded {}/{}/{} dialogues, {} response classes\n", data.train.size(), data.valid.size(),
                           data.test.size(), data.classes.size());
  auto cfg = topicflow::hcn::babi_preset(o.variant);
  cfg.embedding.pretrained = o.embeddings;
  if (g.seed) cfg.train.seed = *g.seed;
  if (o.epochs) cfg.max_epochs = o.epochs;

  if (o.hpo) {
    auto space = ev::babi_search_space();
    auto result = ev::hpo_random_search(space, o.hpo, g.seed.value_or(1), [&](const json& params) {
      const auto run = ev::run_babi6(data, ev::apply_params(cfg, params));
      spdlog::info("trial {} -> valid {:.4f}", params.dump(), run.valid.turn_accuracy);
      return run.valid.turn_accuracy;
    });
    if (!o.trials.empty()) ev::write_trial_log(o.trials, result);
    std::cout << "best " << result.best.dump() << " valid " << pct(result.best_score) << "%\n";
    cfg = ev::apply_params(cfg, result.best);
  }
  const auto run = ev::run_babi6(data, cfg, [](std::size_t e, double acc) {
    spdlog::info("epoch {} valid turn accuracy {:.4f}", e, acc);
  });
  std::cout << ev::format_table(
      {"variant", "turn %", "dialogue %", "valid turn %", "epochs", "seconds"},
      {{o.variant, pct(run.test.turn_accuracy), pct(run.test.dialogue_accuracy), pct(run.valid.turn_accuracy),
        std::to_string(run.epochs), fmt::format("{:.0f}", run.seconds)}});
  const json record = {{"variant", o.variant},
                       {"test_turn_accuracy", run.test.turn_accuracy},
                       {"test_dialogue_accuracy", run.test.dialogue_accuracy},
                       {"valid_turn_accuracy", run.valid.turn_accuracy},
                       {"epochs", run.epochs},
                       {"seconds", run.seconds},
                       {"classes", data.classes.size()},
                       {"dialogues", {data.train.size(), data.valid.size(), data.test.size()}}};
  if (!o.results.empty()) {
    std::ofstream out(o.results, std::ios::app);
    out << record.dump() << "\n";
  }
  std::cout << record.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("topicflow"));
  CLI::App app{"topicflow conversational engine"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "engine config (falls back to $TOPICFLOW_CONFIG)");
  app.add_option("--models", g.models, "model directory (overrides the config)");
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "seed for the engine and training");
  app.add_flag("-v,--verbose", g.verbose, "debug logging");

  auto* compile = app.add_subcommand("compile", "validate dialogues and topics, write compiled artifacts");
  auto* train = app.add_subcommand("train-all", "train NLU, topic-switch and per-dialogue models");
  auto* gen = app.add_subcommand("gen-data", "write the synthetic training corpora");
  std::string gen_out = "corpora";
  gen->add_option("--out", gen_out, "output directory");

  auto* chat = app.add_subcommand("chat", "converse on stdin or replay a script");
  std::string script, session = "cli", user = "cli-user";
  bool as_json = false;
  chat->add_option("--script", script, "one message per line; '#' lines are skipped");
  chat->add_option("--session", session, "session id");
  chat->add_option("--user", user, "user id");
  chat->add_flag("--json", as_json, "print each turn result as JSON");

  auto* serve = app.add_subcommand("serve", "HTTP service");
  std::string host;
  int port = -1;
  serve->add_option("--host", host, "bind address (default from config)");
  serve->add_option("--port", port, "port (default from config)");

  auto* annotate = app.add_subcommand("annotate", "print NLU annotations as JSON");
  std::vector<std::string> texts;
  annotate->add_option("text", texts, "utterances")->required();

  auto* babi = app.add_subcommand("eval-babi6", "train and evaluate on bAbI dialog task 6");
  BabiOptions bo;
  babi->add_option("--data", bo.data, "directory with the official task 6 files");
  babi->add_option("--variant", bo.variant, "bAbI preset")
      ->check(CLI::IsMember(topicflow::hcn::babi_variants()));
  babi->add_option("--embeddings", bo.embeddings, "pretrained embedding text file");
  babi->add_option("--normalization", bo.normalization, "normalization rules");
  babi->add_option("--epochs", bo.epochs, "override the maximum epoch count");
  babi->add_option("--hpo", bo.hpo, "random-search budget before the final run");
  babi->add_option("--trials", bo.trials, "trial log (JSON lines)");
  babi->add_option("--results", bo.results, "append the result record here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  if (*seed_opt) g.seed = seed;
  spdlog::set_level(g.verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (*compile) return cmd_compile(g);
    if (*train) return cmd_train_all(g);
    if (*gen) return cmd_gen_data(g, gen_out);
    if (*chat) return cmd_chat(g, script, session, user, as_json);
    if (*serve) return cmd_serve(g, host, port);
    if (*annotate) return cmd_annotate(g, texts);
    if (*babi) return cmd_eval_babi6(g, bo);
  } catch (const topicflow::ValidationError& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const topicflow::ParseError& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const topicflow::ConfigError& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  return 0;
}
