// Parse tree type and its JSON wire format.
//
// File layout: {"format":"codetree/1","root":<node>} where a node is
// {"kind":string, "token":string|null, "children":[node,...]}; "token" and
// "children" may be omitted. Kinds are an open string vocabulary.

#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace treecomment {

struct ParseNode {
  std::string kind;
  std::optional<std::string> token;
  std::vector<ParseNode> children;

  bool operator==(const ParseNode&) const = default;
};

// Convenience builders used all over the tests.
ParseNode make_node(std::string kind, std::vector<ParseNode> children = {});
ParseNode make_leaf(std::string kind, std::string token);

// Node-level conversions. load_node throws UserError naming the JSON path of
// the first offending element (e.g. "root.children[2].kind").
ParseNode load_node(const nlohmann::json& j, const std::string& path = "root");
nlohmann::json dump_node(const ParseNode& n);

// File-level conversions including the format envelope and version gate.
ParseNode load_tree(const nlohmann::json& file);
ParseNode load_tree_text(const std::string& text);
ParseNode load_tree_file(const std::string& path);
nlohmann::json dump_tree(const ParseNode& root);

// Multiset of kind names over the whole tree.
std::map<std::string, std::size_t> node_kinds(const ParseNode& root);
std::size_t node_count(const ParseNode& root);

// Pre-order walk helpers (iterative; trees can be deep).
void walk_preorder(const ParseNode& root, const std::function<void(const ParseNode&)>& fn);
void walk_preorder(ParseNode& root, const std::function<void(ParseNode&)>& fn);

}  // namespace treecomment
