#include "treecomment/tree.hpp"

#include <fstream>
#include <functional>

#include "treecomment/error.hpp"

namespace treecomment {

using nlohmann::json;

ParseNode make_node(std::string kind, std::vector<ParseNode> children) {
  ParseNode n;
  n.kind = std::move(kind);
  n.children = std::move(children);
  return n;
}

ParseNode make_leaf(std::string kind, std::string token) {
  ParseNode n;
  n.kind = std::move(kind);
  n.token = std::move(token);
  return n;
}

ParseNode load_node(const json& j, const std::string& path) {
  if (!j.is_object()) throw UserError(path + ": expected an object");
  auto kind_it = j.find("kind");
  if (kind_it == j.end()) throw UserError(path + ".kind: missing");
  if (!kind_it->is_string()) throw UserError(path + ".kind: expected a string");
  ParseNode n;
  n.kind = kind_it->get<std::string>();
  if (n.kind.empty()) throw UserError(path + ".kind: must be nonempty");
  if (auto it = j.find("token"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw UserError(path + ".token: expected a string or null");
    n.token = it->get<std::string>();
  }
  if (auto it = j.find("children"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw UserError(path + ".children: expected an array");
    n.children.reserve(it->size());
    for (std::size_t i = 0; i < it->size(); ++i)
      n.children.push_back(load_node((*it)[i], path + ".children[" + std::to_string(i) + "]"));
  }
  for (const auto& [key, _] : j.items()) {
    if (key != "kind" && key != "token" && key != "children")
      throw UserError(path + "." + key + ": unknown key");
  }
  return n;
}

json dump_node(const ParseNode& n) {
  json j;
  j["kind"] = n.kind;
  if (n.token) j["token"] = *n.token;
  if (!n.children.empty()) {
    json kids = json::array();
    for (const auto& c : n.children) kids.push_back(dump_node(c));
    j["children"] = std::move(kids);
  }
  return j;
}

ParseNode load_tree(const json& file) {
  if (!file.is_object()) throw UserError("tree file: expected a JSON object");
  auto fmt = file.find("format");
  if (fmt == file.end() || !fmt->is_string())
    throw UserError("tree file: missing \"format\" string");
  if (fmt->get<std::string>() != "codetree/1")
    throw UserError("tree file: unsupported format \"" + fmt->get<std::string>() +
                    "\" (expected \"codetree/1\")");
  auto root = file.find("root");
  if (root == file.end()) throw UserError("tree file: missing \"root\"");
  return load_node(*root, "root");
}

ParseNode load_tree_text(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw UserError("tree file: invalid JSON");
  return load_tree(j);
}

ParseNode load_tree_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UserError("cannot open tree file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return load_tree_text(text);
}

json dump_tree(const ParseNode& root) {
  json j;
  j["format"] = "codetree/1";
  j["root"] = dump_node(root);
  return j;
}

void walk_preorder(const ParseNode& root, const std::function<void(const ParseNode&)>& fn) {
  std::vector<const ParseNode*> stack{&root};
  while (!stack.empty()) {
    const ParseNode* n = stack.back();
    stack.pop_back();
    fn(*n);
    for (auto it = n->children.rbegin(); it != n->children.rend(); ++it) stack.push_back(&*it);
  }
}

void walk_preorder(ParseNode& root, const std::function<void(ParseNode&)>& fn) {
  std::vector<ParseNode*> stack{&root};
  while (!stack.empty()) {
    ParseNode* n = stack.back();
    stack.pop_back();
    fn(*n);
    for (auto it = n->children.rbegin(); it != n->children.rend(); ++it) stack.push_back(&*it);
  }
}

std::map<std::string, std::size_t> node_kinds(const ParseNode& root) {
  std::map<std::string, std::size_t> counts;
  walk_preorder(root, [&](const ParseNode& n) { ++counts[n.kind]; });
  return counts;
}

std::size_t node_count(const ParseNode& root) {
  std::size_t n = 0;
  walk_preorder(root, [&](const ParseNode&) { ++n; });
  return n;
}

}  // namespace treecomment
