#include "doctest.h"

#include <cmath>
#include <limits>

#include "support/temp_dir.hpp"
#include "topicflow/error.hpp"
#include "topicflow/hcn/realize.hpp"
#include "topicflow/topic/content.hpp"
#include "topicflow/topic/graph.hpp"

using namespace topicflow;
using topic::TopicGraph;
using topic::TopicNode;
using topicflow::testing::TempDir;

namespace {

TopicNode node(std::string name, std::vector<std::string> parents, std::vector<std::string> dialogues = {},
               topic::TopicKind kind = topic::TopicKind::normal) {
  TopicNode n;
  n.name = std::move(name);
  n.parents = std::move(parents);
  n.dialogues = std::move(dialogues);
  n.kind = kind;
  return n;
}

TopicGraph director_graph() {
  return TopicGraph({node("Director", {"Movies", "Person"}, {"director_films"}), node("Movies", {}, {"fav_movie"}),
                     node("Person", {}, {"person_age"})});
}

std::map<std::string, std::size_t> as_map(const std::vector<std::pair<std::string, std::size_t>>& v) {
  return {v.begin(), v.end()};
}

}  // namespace

TEST_CASE("topic graph loads from yaml files") {
  TempDir dir("topics");
  dir.write("writer.yaml", "name: Writer\nparents: [Person, Books]\ndialogues: [writer_popularity]\nentity_types: [writer]\n");
  dir.write("person.yaml", "name: Person\n");
  dir.write("books.yaml", "name: Books\nintents: [books]\n");
  dir.write("notes.txt", "ignored");
  std::set<std::string> known{"writer_popularity"};
  auto g = topic::load_topic_graph(dir.path(), &known);
  CHECK(g.nodes().size() == 3);
  CHECK(g.node("Writer").parents == std::vector<std::string>{"Person", "Books"});
  CHECK(g.entity_bindings().at("writer") == "Writer");
  CHECK(g.intent_bindings().at("books") == "Books");
  CHECK(g.owner("writer_popularity") == "Writer");
  CHECK(as_map(topic::reachable_nodes(g, "Writer")) == std::map<std::string, std::size_t>{{"Writer", 0}, {"Person", 1}, {"Books", 1}});

  std::set<std::string> none;
  CHECK_THROWS_WITH_AS(topic::load_topic_graph(dir.path(), &none), doctest::Contains("writer_popularity"),
                       ValidationError);

  TempDir empty("topics_empty");
  CHECK(topic::load_topic_graph(empty.path()).empty());
  CHECK_THROWS_AS(topic::load_topic_graph(empty / "missing"), ConfigError);
}

TEST_CASE("topic graph validation") {
  CHECK_THROWS_WITH_AS(TopicGraph({node("A", {"Nope"})}), doctest::Contains("unknown parent Nope"), ValidationError);
  CHECK_THROWS_WITH_AS(TopicGraph({node("A", {"B"}), node("B", {"C"}), node("C", {"A"})}),
                       doctest::Contains("A -> B -> C -> A"), ValidationError);
  CHECK_THROWS_AS(TopicGraph({node("A", {"A"})}), ValidationError);
  CHECK_THROWS_AS(TopicGraph({node("A", {}), node("A", {})}), ValidationError);
  CHECK_THROWS_WITH_AS(TopicGraph({node("Init", {}, {}, topic::TopicKind::detached), node("A", {"Init"})}),
                       doctest::Contains("detached"), ValidationError);
  CHECK_THROWS_AS(TopicGraph({node("B", {}), node("Init", {"B"}, {}, topic::TopicKind::detached)}), ValidationError);
  CHECK_THROWS_AS(TopicGraph({node("B", {}), node("GenericEntity", {"B"}, {}, topic::TopicKind::generic_entity)}),
                  ValidationError);
  auto a = node("A", {});
  a.entity_types = {"movie"};
  auto b = node("B", {});
  b.entity_types = {"movie"};
  CHECK_THROWS_WITH_AS(TopicGraph({a, b}), doctest::Contains("movie"), ValidationError);
}

TEST_CASE("reachable nodes") {
  auto g = director_graph();
  CHECK(as_map(topic::reachable_nodes(g, "Director")) ==
        std::map<std::string, std::size_t>{{"Director", 0}, {"Movies", 1}, {"Person", 1}});
  CHECK(topic::reachable_nodes(g, "Movies") == std::vector<std::pair<std::string, std::size_t>>{{"Movies", 0}});
  CHECK_THROWS_AS(topic::reachable_nodes(g, "Nope"), ValidationError);

  TopicGraph diamond({node("A", {"B", "C"}), node("B", {"D"}), node("C", {"E"}), node("E", {"D"}), node("D", {})});
  CHECK(as_map(topic::reachable_nodes(diamond, "A")).at("D") == 2);

  SUBCASE("random DAGs against all-paths minimum") {
    tensor::Rng rng(11);
    for (int trial = 0; trial < 300; ++trial) {
      const std::size_t n = 1 + rng.below(15);
      // edges only from lower to higher index keeps it acyclic
      std::vector<TopicNode> nodes;
      for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::string> parents;
        for (std::size_t j = i + 1; j < n; ++j) {
          if (rng.bernoulli(0.25)) parents.push_back("n" + std::to_string(j));
        }
        nodes.push_back(node("n" + std::to_string(i), parents));
      }
      rng.shuffle(nodes);
      TopicGraph g2(nodes);
      const std::string start = "n" + std::to_string(rng.below(n));
      std::map<std::string, std::size_t> best;
      std::function<void(const std::string&, std::size_t)> walk = [&](const std::string& x, std::size_t d) {
        auto it = best.find(x);
        if (it == best.end() || d < it->second) best[x] = d;
        for (const auto& p : g2.node(x).parents) walk(p, d + 1);
      };
      walk(start, 0);
      auto got = topic::reachable_nodes(g2, start);
      REQUIRE(as_map(got) == best);
      CHECK(got.front() == std::make_pair(start, std::size_t{0}));
      for (std::size_t i = 1; i < got.size(); ++i) CHECK(got[i - 1].second <= got[i].second);
    }
  }
}

TEST_CASE("sub-dialogue selection") {
  auto g = director_graph();
  auto all = [](const std::string&) { return true; };
  auto p = topic::node_probabilities(g, "Director", all);
  CHECK(p.at("Director") == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(p.at("Movies") == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(p.at("Person") == doctest::Approx(0.25).epsilon(1e-12));

  auto p3 = topic::node_probabilities(g, "Director", all, 0.25);
  CHECK(p3.at("Director") == doctest::Approx(1.0 / 1.5));

  auto only_person = [](const std::string& d) { return d == "person_age"; };
  CHECK(topic::node_probabilities(g, "Director", only_person) == std::map<std::string, double>{{"Person", 1.0}});

  tensor::Rng rng(5);
  CHECK_FALSE(topic::select_subdialogue(g, "Director", [](const std::string&) { return false; }, rng).has_value());

  SUBCASE("executed dialogues exhaust the pool") {
    AttributeMap session, user;
    dialogue::HookRegistry hooks;
    dialogue::HookContext ctx{"", "", "", session, user, &rng};
    auto eligible = [&](const std::string& d) { return hcn::can_start(d, hooks, ctx); };
    std::set<std::string> seen;
    while (auto d = topic::select_subdialogue(g, "Director", eligible, rng)) {
      CHECK(seen.insert(*d).second);
      hcn::mark_executed(session, *d);
    }
    CHECK(seen.size() == 3);
  }

  SUBCASE("empirical node frequencies") {
    TopicGraph g2({node("Director", {"Movies", "Person"}, {"d1", "d2"}), node("Movies", {"Media"}, {"m1"}),
                   node("Person", {}, {"p1", "p2", "p3"}), node("Media", {}, {"x1"})});
    auto expected = topic::node_probabilities(g2, "Director", all);
    // independent oracle: weights 1, .5, .5, .25 normalized
    CHECK(expected.at("Media") == doctest::Approx(0.25 / 2.25));
    const int draws = 10000;
    std::map<std::string, int> counts;
    tensor::Rng r(2024);
    for (int i = 0; i < draws; ++i) counts[*g2.owner(*topic::select_subdialogue(g2, "Director", all, r))]++;
    for (const auto& [name, prob] : expected) {
      const double sigma = std::sqrt(draws * prob * (1 - prob));
      CHECK(std::abs(counts[name] - draws * prob) <= 3 * sigma);
    }
  }

  SUBCASE("never returns an ineligible dialogue") {
    TopicGraph g2({node("A", {"B", "C"}, {"a1", "a2"}), node("B", {"D"}, {"b1"}), node("C", {"D"}, {"c1", "c2"}),
                   node("D", {}, {"d1", "d2", "d3"})});
    std::vector<std::string> ids{"a1", "a2", "b1", "c1", "c2", "d1", "d2", "d3"};
    tensor::Rng r(99);
    for (int trial = 0; trial < 2000; ++trial) {
      std::set<std::string> ok;
      for (const auto& d : ids) {
        if (r.bernoulli(0.3)) ok.insert(d);
      }
      auto pick = topic::select_subdialogue(g2, "A", [&](const std::string& d) { return ok.count(d) > 0; }, r);
      if (ok.empty()) {
        CHECK_FALSE(pick.has_value());
      } else {
        REQUIRE(pick.has_value());
        CHECK(ok.count(*pick));
      }
    }
  }
}

TEST_CASE("topic resolution") {
  auto movie = node("Movie", {"Movies"});
  movie.entity_types = {"movie"};
  auto music = node("Music", {});
  music.intents = {"music"};
  TopicGraph g({movie, node("Movies", {}), music, node("GenericEntity", {}, {}, topic::TopicKind::generic_entity),
                node("Recommendation", {}, {}, topic::TopicKind::recommendation)});

  auto r = topic::resolve_topic(g, {{"Matrix", 3, 4, "movie"}}, "chitchat");
  CHECK(r.node == "Movie");
  CHECK(r.focus_entity == "Matrix");

  r = topic::resolve_topic(g, {{"my life", 2, 4, "thing"}}, "chitchat");
  CHECK(r.node == "GenericEntity");
  CHECK(r.focus_entity == "my life");

  r = topic::resolve_topic(g, {{"my life", 2, 4, "thing"}}, "music");
  CHECK(r.node == "Music");
  CHECK(r.focus_entity == "my life");

  CHECK(topic::resolve_topic(g, {}, "chitchat").node == "Recommendation");
  CHECK(topic::resolve_topic(TopicGraph(), {}, "x").node.empty());
}

TEST_CASE("content store") {
  auto store = topic::ContentStore::parse(
      "# comment\n"
      "funfact\tmatrix,keanu\tThe Matrix used green code made of sushi recipes.\n"
      "news\tlife\tA study says life is long.\n"
      "showerthought\tpizza\tPizza is a pie that gave up.\n",
      "content.tsv");
  CHECK(store.size() == 3);
  CHECK(store.find("funfact", "The MATRIX").size() == 1);
  CHECK(store.find("funfact", "Keanu Reeves").size() == 1);
  CHECK(store.has("news", "my life"));
  CHECK_FALSE(store.has("news", "pizza"));
  CHECK_FALSE(store.has("funfact", ""));
  CHECK_THROWS_WITH_AS(topic::ContentStore::parse("fact\tx\ty\n", "c.tsv"), doctest::Contains("c.tsv:1"), ParseError);
  CHECK_THROWS_AS(topic::ContentStore::parse("news\tx\n", "c.tsv"), ParseError);
  CHECK_THROWS_AS(topic::ContentStore::parse("news\t , \ty\n", "c.tsv"), ParseError);

  dialogue::HookRegistry hooks;
  topic::register_content_hooks(hooks, store, {{"ge_funfact", "funfact"}, {"ge_news", "news"}, {"ge_shower", "showerthought"}});
  CHECK_THROWS_AS(topic::register_content_hooks(hooks, store, {{"x", "gossip"}}), ConfigError);

  AttributeMap session, user;
  tensor::Rng rng(1);
  TopicGraph g({node("GenericEntity", {}, {"ge_funfact", "ge_news", "ge_shower"}, topic::TopicKind::generic_entity)});
  for (const std::string entity : {"Matrix", "my life", "pizza", "nothing known", ""}) {
    dialogue::HookContext ctx{"", entity, "", session, user, &rng};
    auto eligible = [&](const std::string& d) { return hcn::can_start(d, hooks, ctx); };
    for (int i = 0; i < 20; ++i) {
      auto d = topic::select_subdialogue(g, "GenericEntity", eligible, rng);
      if (!d) {
        CHECK((entity == "nothing known" || entity.empty()));
        continue;
      }
      ctx.dialogue_id = *d;
      const std::string kind = *d == "ge_funfact" ? "funfact" : *d == "ge_news" ? "news" : "showerthought";
      CHECK(store.has(kind, entity));
      CHECK_FALSE(dialogue::resolve_text_actions("{" + kind + "}", hooks, ctx).empty());
    }
  }
  dialogue::HookContext ctx{"", "nobody", "", session, user, &rng};
  CHECK_THROWS_AS(dialogue::resolve_text_actions("{news}", hooks, ctx), HookError);
}
