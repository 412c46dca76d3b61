#include <vector>

#include "doctest.h"
#include "treecomment/error.hpp"
#include "treecomment/tree.hpp"

using namespace treecomment;
using doctest::Contains;

namespace {

ParseNode sample_tree() {
  return make_node("Block",
                   {make_node("IfStatement",
                              {make_leaf("Identifier", "flag"),
                               make_node("ReturnStatement", {make_leaf("Literal", "1")})}),
                    make_node("ExprStatement", {make_leaf("Identifier", "x")})});
}

}  // namespace

TEST_CASE("node json round-trips exactly") {
  ParseNode t = sample_tree();
  CHECK(load_node(dump_node(t)) == t);

  ParseNode leaf = make_leaf("Identifier", "");
  CHECK(load_node(dump_node(leaf)) == leaf);  // empty token survives
}

TEST_CASE("tree file envelope carries the format tag") {
  ParseNode t = sample_tree();
  nlohmann::json file = dump_tree(t);
  CHECK(file["format"] == "codetree/1");
  CHECK(load_tree(file) == t);
  CHECK(load_tree_text(file.dump()) == t);
}

TEST_CASE("token and children may be omitted or null") {
  ParseNode n = load_node(nlohmann::json::parse(R"({"kind":"Block"})"));
  CHECK(n.kind == "Block");
  CHECK(!n.token.has_value());
  CHECK(n.children.empty());

  ParseNode m = load_node(nlohmann::json::parse(R"({"kind":"A","token":null,"children":null})"));
  CHECK(!m.token.has_value());
  CHECK(m.children.empty());
}

TEST_CASE("schema violations name the offending json path") {
  CHECK_THROWS_WITH_AS(load_node(nlohmann::json::parse(R"({"kind":5})")),
                       Contains("root.kind"), UserError);
  CHECK_THROWS_WITH_AS(load_node(nlohmann::json::parse(R"({"token":"x"})")),
                       Contains("root.kind: missing"), UserError);
  CHECK_THROWS_WITH_AS(load_node(nlohmann::json::parse(R"({"kind":""})")),
                       Contains("root.kind: must be nonempty"), UserError);
  CHECK_THROWS_WITH_AS(load_node(nlohmann::json::parse(R"({"kind":"A","token":7})")),
                       Contains("root.token"), UserError);
  CHECK_THROWS_WITH_AS(load_node(nlohmann::json::parse(R"({"kind":"A","children":{}})")),
                       Contains("root.children: expected an array"), UserError);
  CHECK_THROWS_WITH_AS(
      load_node(nlohmann::json::parse(R"({"kind":"A","children":[{"kind":"B"},{"token":"x"}]})")),
      Contains("root.children[1].kind"), UserError);
  CHECK_THROWS_WITH_AS(load_node(nlohmann::json::parse(R"({"kind":"A","extra":1})")),
                       Contains("root.extra: unknown key"), UserError);
  CHECK_THROWS_AS(load_node(nlohmann::json::parse("[1,2]")), UserError);
}

TEST_CASE("file envelope violations are user errors") {
  CHECK_THROWS_WITH_AS(load_tree(nlohmann::json::parse(R"({"root":{"kind":"A"}})")),
                       Contains("format"), UserError);
  CHECK_THROWS_WITH_AS(
      load_tree(nlohmann::json::parse(R"({"format":"codetree/2","root":{"kind":"A"}})")),
      Contains("unsupported format"), UserError);
  CHECK_THROWS_WITH_AS(load_tree(nlohmann::json::parse(R"({"format":"codetree/1"})")),
                       Contains("missing \"root\""), UserError);
  CHECK_THROWS_WITH_AS(load_tree_text("{\"format\": \"codetree/1\","),
                       Contains("invalid JSON"), UserError);
}

TEST_CASE("walk_preorder visits parents before children, left to right") {
  std::vector<std::string> order;
  walk_preorder(sample_tree(), [&](const ParseNode& n) {
    order.push_back(n.token ? *n.token : n.kind);
  });
  CHECK(order == std::vector<std::string>{"Block", "IfStatement", "flag", "ReturnStatement", "1",
                                          "ExprStatement", "x"});
}

TEST_CASE("mutable walk can edit every node") {
  ParseNode t = sample_tree();
  walk_preorder(t, [](ParseNode& n) {
    if (n.token) *n.token += "!";
  });
  std::size_t bang = 0;
  walk_preorder(t, [&](const ParseNode& n) {
    if (n.token && n.token->back() == '!') ++bang;
  });
  CHECK(bang == 3);
}

TEST_CASE("node_kinds and node_count tally the whole tree") {
  ParseNode t = sample_tree();
  CHECK(node_count(t) == 7);
  auto kinds = node_kinds(t);
  CHECK(kinds["Identifier"] == 2);
  CHECK(kinds["Block"] == 1);
  CHECK(kinds["Literal"] == 1);
  CHECK(kinds.size() == 6);
}

TEST_CASE("deep trees survive the iterative walk") {
  ParseNode deep = make_leaf("Identifier", "x");
  for (int i = 0; i < 10000; ++i) deep = make_node("Block", {std::move(deep)});
  CHECK(node_count(deep) == 10001);
}
