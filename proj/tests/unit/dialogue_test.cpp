#include <algorithm>

#include "doctest.h"
#include "support/random_dialogue.hpp"
#include "topicflow/dialogue/dialogue.hpp"
#include "topicflow/dialogue/hooks.hpp"
#include "topicflow/dialogue/topic_file.hpp"
#include "topicflow/error.hpp"

using namespace topicflow;
using namespace topicflow::dialogue;

namespace {

const char* kWriterPopularity = R"(id: writer_popularity
start: ask
nodes:
  ask:
    kind: Bot
    texts: ["Do you think this writer is popular?"]
    next: [answer]
  answer:
    kind: User
    texts: ["yes", "no"]
    next: [agree, disagree]
  agree:
    kind: Bot
    texts: ["I think so too."]
  disagree:
    kind: Bot
    texts: ["Really? I think many people read the books."]
)";

std::string error_of(const std::string& yaml) {
  try {
    parse_dialogue_text(yaml, "test.yaml");
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

DialogueGraph graph(const std::string& yaml) { return parse_dialogue_text(yaml, "test.yaml"); }

}  // namespace

TEST_CASE("parse_dialogue") {
  SUBCASE("minimal single Bot node") {
    auto g = graph("id: hi\nstart: a\nnodes:\n  a: {kind: Bot, texts: [Hello]}\n");
    CHECK(g.nodes().size() == 1);
    CHECK(g.start == "a");
  }
  SUBCASE("writer popularity") {
    auto g = graph(kWriterPopularity);
    CHECK(g.nodes().size() == 4);
    CHECK(g.node("answer").kind == NodeKind::user);
    CHECK(g.node("answer").next == std::vector<std::string>{"agree", "disagree"});
  }
  SUBCASE("self loop") {
    auto msg = error_of("id: x\nstart: a\nnodes:\n  a: {kind: Bot, texts: [Hi], next: [a]}\n");
    CHECK(msg.find("cycle a -> a") != std::string::npos);
  }
  SUBCASE("longer cycle is named") {
    auto msg = error_of(
        "id: x\nstart: a\nnodes:\n"
        "  a: {kind: Bot, texts: [Hi], next: [b]}\n"
        "  b: {kind: User, texts: [yo], next: [c]}\n"
        "  c: {kind: Bot, texts: [Hey], next: [d]}\n"
        "  d: {kind: User, texts: [again], next: [a]}\n");
    CHECK(msg.find("cycle a -> b -> c -> d -> a") != std::string::npos);
  }
  SUBCASE("unknown successor names the node") {
    auto msg = error_of("id: x\nstart: a\nnodes:\n  a: {kind: Bot, texts: [Hi], next: [ghost]}\n");
    CHECK(msg.find("node a") != std::string::npos);
    CHECK(msg.find("ghost") != std::string::npos);
  }
  SUBCASE("Bot without texts") {
    CHECK(error_of("id: x\nstart: a\nnodes:\n  a: {kind: Bot, texts: []}\n").find("without texts") !=
          std::string::npos);
  }
  SUBCASE("other structural errors") {
    CHECK_THROWS_AS(graph("id: x\nstart: z\nnodes:\n  a: {kind: Bot, texts: [Hi]}\n"), ValidationError);
    CHECK_THROWS_AS(graph("id: x\nstart: a\nnodes:\n  a: {kind: Bot, texts: [Hi], next: [u]}\n"
                          "  u: {kind: User, texts: [x]}\n"),
                    ValidationError);
    CHECK_THROWS_AS(graph("id: x\nstart: a\nnodes:\n  a: {kind: Bot, texts: [Hi]}\n  b: {kind: Bot, texts: [Yo]}\n"),
                    ValidationError);
    CHECK_THROWS_AS(graph("id: x\nstart: a\nnodes:\n  a: {kind: Bot, texts: [Hi], next: [f]}\n"
                          "  f: {kind: Function}\n"),
                    ValidationError);
    CHECK_THROWS_AS(graph("id: x\nstart: a\nnodes:\n  a: {kind: Robot, texts: [Hi]}\n"), ParseError);
    CHECK_THROWS_AS(graph("id: x\nstart: a\nnodes: [1, 2]\n"), ParseError);
  }
  SUBCASE("yaml syntax error carries a line") {
    try {
      graph("id: x\nstart: a\nnodes:\n  a: {kind: Bot, texts: [Hi\n");
      FAIL("expected parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() > 0);
    }
  }
}

TEST_CASE("serialize round trip") {
  auto g = graph(kWriterPopularity);
  auto text = serialize_dialogue(g);
  CHECK(graph(text) == g);
  CHECK(serialize_dialogue(graph(text)) == text);

  tensor::Rng rng(17);
  for (int i = 0; i < 100; ++i) {
    auto r = testing::random_dialogue(rng);
    validate(r);
    auto t = serialize_dialogue(r);
    CHECK(graph(t) == r);
  }
}

TEST_CASE("compile_transitions") {
  SUBCASE("two user branches") {
    auto g = graph(
        "id: x\nstart: b1\nnodes:\n"
        "  b1: {kind: Bot, texts: [Hi], next: [ua, ub]}\n"
        "  ua: {kind: User, texts: [a], next: [b2]}\n"
        "  ub: {kind: User, texts: [b], next: [b3]}\n"
        "  b2: {kind: Bot, texts: [Two]}\n"
        "  b3: {kind: Bot, texts: [Three]}\n");
    Inventory inv(g);
    auto ts = compile_transitions(g, inv);
    REQUIRE(ts.size() == 2);
    CHECK(ts[0].steps == std::vector<TransitionStep>{{"", 0}, {"a", 1}});
    CHECK(ts[1].steps == std::vector<TransitionStep>{{"", 0}, {"b", 2}});
  }
  SUBCASE("single Bot node") {
    auto g = graph("id: hi\nstart: a\nnodes:\n  a: {kind: Bot, texts: [Hello, Hi there]}\n");
    auto ts = compile_transitions(g, Inventory(g));
    REQUIRE(ts.size() == 1);
    CHECK(ts[0].steps == std::vector<TransitionStep>{{"", 0}});
  }
  SUBCASE("three variants") {
    auto g = graph(
        "id: x\nstart: a\nnodes:\n"
        "  a: {kind: Bot, texts: [Hi], next: [u]}\n"
        "  u: {kind: User, texts: [one, two, three], next: [b]}\n"
        "  b: {kind: Bot, texts: [Ok]}\n");
    auto ts = compile_transitions(g, Inventory(g));
    REQUIRE(ts.size() == 3);
    CHECK(ts[2].steps[1].utterance == "three");
  }
  SUBCASE("function nodes are skipped") {
    auto g = graph(
        "id: x\nstart: a\nnodes:\n"
        "  a: {kind: Bot, texts: [Hi], next: [u]}\n"
        "  u: {kind: User, texts: [hm], next: [f]}\n"
        "  f: {kind: Function, hook: decide, next: [b, c]}\n"
        "  b: {kind: Bot, texts: [B]}\n"
        "  c: {kind: Bot, texts: [C]}\n");
    Inventory inv(g);
    CHECK(inv.size() == 4);
    CHECK(inv.class_of("f") == 1);
    auto ts = compile_transitions(g, inv);
    REQUIRE(ts.size() == 2);
    CHECK(ts[0].steps == std::vector<TransitionStep>{{"", 0}, {"hm", 2}});
    CHECK(ts[1].steps == std::vector<TransitionStep>{{"", 0}, {"hm", 3}});
  }
  SUBCASE("random DAGs match the brute-force oracle") {
    tensor::Rng rng(2025);
    std::size_t largest = 0;
    for (int i = 0; i < 200; ++i) {
      auto g = testing::random_dialogue(rng);
      validate(g);
      Inventory inv(g);
      auto got = compile_transitions(g, inv);
      CHECK(got.size() == testing::count_transitions(g));
      CHECK(got == testing::brute_force_transitions(g, inv));
      largest = std::max(largest, got.size());
    }
    // The generator must produce branching graphs, not just chains.
    CHECK(largest >= 10);
  }
}

TEST_CASE("derive_action_masks") {
  SUBCASE("linear") {
    auto g = graph(
        "id: x\nstart: a\nnodes:\n"
        "  a: {kind: Bot, texts: [Hi], next: [u]}\n"
        "  u: {kind: User, texts: [x], next: [b]}\n"
        "  b: {kind: Bot, texts: [B]}\n");
    auto m = derive_action_masks(g, Inventory(g));
    CHECK(m.start() == std::vector<int>{1, 0});
    CHECK(m.row(0) == std::vector<int>{0, 1});
    CHECK(ActionMaskTable::all_zero(m.row(1)));
  }
  SUBCASE("through a function") {
    auto g = graph(
        "id: x\nstart: b1\nnodes:\n"
        "  b1: {kind: Bot, texts: [Hi], next: [u]}\n"
        "  u: {kind: User, texts: [x], next: [f]}\n"
        "  f: {kind: Function, hook: pick, next: [b2, b3]}\n"
        "  b2: {kind: Bot, texts: [B2]}\n"
        "  b3: {kind: Bot, texts: [B3]}\n");
    Inventory inv(g);
    auto m = derive_action_masks(g, inv);
    CHECK(m.row(inv.class_of("b1")) == std::vector<int>{0, 0, 1, 1});
    CHECK(function_route(g, inv, inv.class_of("b1"), inv.class_of("b3")) == std::vector<std::string>{"f"});
    CHECK(function_route(g, inv, inv.size(), inv.class_of("b1")).empty());
  }
  SUBCASE("random DAGs: reachability oracle and transition replay") {
    tensor::Rng rng(77);
    for (int i = 0; i < 200; ++i) {
      auto g = testing::random_dialogue(rng);
      Inventory inv(g);
      auto m = derive_action_masks(g, inv);
      auto permitted = testing::brute_force_permitted(g);
      for (const auto& a : inv.classes()) {
        for (const auto& b : inv.classes()) {
          const bool expect = permitted.count({a.node_id, b.node_id}) > 0;
          CHECK(m.row(a.id)[b.id] == (expect ? 1 : 0));
        }
      }
      for (const auto& t : compile_transitions(g, inv)) {
        std::size_t last = inv.size();
        for (const auto& s : t.steps) {
          CHECK(m.after(last)[s.class_id] == 1);
          last = s.class_id;
        }
        CHECK(ActionMaskTable::all_zero(m.after(last)));
      }
    }
  }
  SUBCASE("tsv round trip") {
    auto g = graph(kWriterPopularity);
    Inventory inv(g);
    auto m = derive_action_masks(g, inv);
    CHECK(ActionMaskTable::from_tsv(m.to_tsv(), "m") == m);
    auto inv2 = Inventory::from_tsv(inv.to_tsv(), "i");
    CHECK(inv2.size() == inv.size());
    CHECK(inv2.class_of("disagree") == inv.class_of("disagree"));
    CHECK_THROWS_AS(ActionMaskTable::from_tsv("start\t1 2\n", "m"), ParseError);
  }
}

TEST_CASE("resolve_text_actions") {
  AttributeMap session, user;
  HookContext ctx{"writer_popularity", "", "", session, user};
  HookRegistry hooks;
  std::vector<std::string> calls;
  hooks.add_text_action("say_fans", [&](HookContext&) {
    calls.push_back("say_fans");
    return std::string("200");
  });
  hooks.add_text_action("say_name", [&](HookContext& c) {
    calls.push_back("say_name");
    c.session["named"] = true;
    return std::string("Tolkien");
  });
  CHECK(resolve_text_actions("Writer has {say_fans} fans.", hooks, ctx) == "Writer has 200 fans.");
  CHECK(resolve_text_actions("No placeholders here.", hooks, ctx) == "No placeholders here.");
  calls.clear();
  CHECK(resolve_text_actions("{say_name} has {say_fans} fans.", hooks, ctx) == "Tolkien has 200 fans.");
  CHECK(calls == std::vector<std::string>{"say_name", "say_fans"});
  CHECK(session.count("named") == 1);
  try {
    resolve_text_actions("Directed by {say_director}", hooks, ctx);
    FAIL("expected hook error");
  } catch (const HookError& e) {
    CHECK(std::string(e.what()).find("say_director") != std::string::npos);
  }
}

TEST_CASE("hook registry coverage") {
  auto g = graph(
      "id: x\nstart: a\nnodes:\n"
      "  a: {kind: Bot, texts: [Hi], next: [f]}\n"
      "  f: {kind: Function, hook: decide, next: [b]}\n"
      "  b: {kind: Bot, texts: [\"{say_fans} fans\"]}\n");
  HookRegistry hooks;
  CHECK(hooks.missing(g) == std::vector<std::string>{"function decide", "text action {say_fans}"});
  CHECK_THROWS_AS(hooks.require(g), ConfigError);
  hooks.add_function("decide", [](HookContext&) { return std::string("b"); });
  hooks.add_text_action("say_fans", [](HookContext&) { return std::string("3"); });
  CHECK_NOTHROW(hooks.require(g));
}

TEST_CASE("topic files") {
  auto t = parse_topic_text("name: Writer\nparents: [Person, Books]\ndialogues: [writer_popularity]\n", "w.yaml");
  CHECK(t.name == "Writer");
  CHECK(t.parents == std::vector<std::string>{"Person", "Books"});
  CHECK(t.dialogues == std::vector<std::string>{"writer_popularity"});
  CHECK(t.kind == TopicKind::normal);
  auto d = parse_topic_text("name: InitialChat\nkind: detached\ndialogues: [ask_name]\n", "i.yaml");
  CHECK(d.kind == TopicKind::detached);
  CHECK(d.parents.empty());
  CHECK_THROWS_AS(parse_topic_text("parents: [A]\n", "x.yaml"), ParseError);
  CHECK_THROWS_AS(parse_topic_text("name: A\nkind: weird\n", "x.yaml"), ParseError);
}
