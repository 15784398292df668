#include <doctest.h>

#include "btsynth/gp.hpp"
#include "btsynth/rng.hpp"
#include "btsynth/text.hpp"

#include "test_helpers.hpp"

using namespace btsynth;
using btsynth::test::beh;
using btsynth::test::tree_of;

TEST_CASE("serialize emits the canonical grammar") {
  BehaviorTree t;
  int c = add_leaf(t, beh("a at pos A?"));
  int a = add_leaf(t, beh("put a at pos A!"));
  t.root = add_control(t, NodeKind::Fallback, {c, a});
  CHECK(serialize(t) == R"(f("a at pos A?","put a at pos A!"))");
}

TEST_CASE("parse rebuilds nested controls") {
  auto t = tree_of(R"(s(f("picked a?"),"place on b!"))");
  REQUIRE(validate(t).empty());
  const Node& root = t.at(t.root);
  CHECK(root.kind == NodeKind::Sequence);
  REQUIRE(root.children.size() == 2);
  CHECK(t.at(root.children[0]).kind == NodeKind::Fallback);
  CHECK(t.at(root.children[1]).behavior == beh("place on b!"));
}

TEST_CASE("parse accepts constraint-violating structure; validate flags it") {
  auto t = tree_of(R"(s(s("picked a?")))");
  auto violations = validate(t);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0].kind == ViolationKind::SameKindParent);
}

TEST_CASE("parse reports the position of the first grammar violation") {
  try {
    parse_tree(R"(s("picked a?",))");
    FAIL("expected a parse error");
  } catch (const TreeParseError& e) {
    CHECK(e.position == 14);
  }
  try {
    parse_tree(R"(s("made up leaf?"))");
    FAIL("expected a parse error");
  } catch (const TreeParseError& e) {
    CHECK(e.position == 2);
  }
  CHECK_THROWS_AS(parse_tree("s()"), TreeParseError);
  CHECK_THROWS_AS(parse_tree(""), TreeParseError);
  CHECK_THROWS_AS(parse_tree(R"(s("pick a!")x)"), TreeParseError);
}

TEST_CASE("round-trip identity over random valid trees") {
  std::vector<BehaviorId> pool;
  for (const char* s : {"picked a?", "picked b?", "a on b?", "a at pos p?",
                        "pick a!", "pick b!", "place on a!", "put a on b!",
                        "apply force a!"}) {
    pool.push_back(beh(s));
  }
  GpParams params;
  Rng rng(7);
  for (int i = 0; i < 100000; ++i) {
    const int size = 2 + static_cast<int>(rng.uniform_index(12));
    BehaviorTree t = random_tree(rng, pool, size, params);
    BehaviorTree back = parse_tree(serialize(t));
    if (!structurally_equal(t, back)) {
      CAPTURE(serialize(t));
      FAIL("round trip changed the tree");
    }
  }
}

TEST_CASE("structural hash is a digest of the canonical form") {
  auto a = tree_of(R"(s("picked a?","pick a!"))");
  auto b = tree_of(R"(s("picked a?","pick a!"))");
  CHECK(structural_hash(a) == structural_hash(b));

  auto reordered = tree_of(R"(s("pick a!","picked a?"))");
  CHECK(structural_hash(a) != structural_hash(reordered));

  auto extended = tree_of(R"(s("picked a?","pick a!","picked b?"))");
  CHECK(structural_hash(a) != structural_hash(extended));
}

TEST_CASE("dot export mirrors the tree structure") {
  auto t = tree_of(R"(f("a at pos p?","put a at pos p!"))");
  const std::string dot = to_dot(t);
  int node_statements = 0;
  int edge_statements = 0;
  std::size_t pos = 0;
  while ((pos = dot.find("[shape=", pos)) != std::string::npos) {
    ++node_statements;
    ++pos;
  }
  pos = 0;
  while ((pos = dot.find(" -> ", pos)) != std::string::npos) {
    ++edge_statements;
    ++pos;
  }
  CHECK(node_statements == 3);
  CHECK(edge_statements == 2);
  CHECK(dot.find("a at pos p?") != std::string::npos);
  CHECK(dot.find("put a at pos p!") != std::string::npos);
  CHECK(dot.find("\"?\"") != std::string::npos);

  CHECK(to_dot(t) == to_dot(tree_of(serialize(t))));
}

TEST_CASE("dot node statements match node_count on random trees") {
  std::vector<BehaviorId> pool;
  for (const char* s : {"picked a?", "a on b?", "pick a!", "place on b!"}) {
    pool.push_back(beh(s));
  }
  GpParams params;
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    BehaviorTree t = random_tree(rng, pool, 2 + (i % 10), params);
    const std::string dot = to_dot(t);
    int node_statements = 0;
    std::size_t pos = 0;
    while ((pos = dot.find("[shape=", pos)) != std::string::npos) {
      ++node_statements;
      ++pos;
    }
    CHECK(node_statements == node_count(t));
  }
}
