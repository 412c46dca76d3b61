#include "treecomment/ident.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>

namespace treecomment {

namespace {

bool is_upper(char c) { return std::isupper(static_cast<unsigned char>(c)); }
bool is_lower(char c) { return std::islower(static_cast<unsigned char>(c)); }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)); }
bool is_letter(char c) { return std::isalpha(static_cast<unsigned char>(c)); }

std::string to_lower(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) out += w;
  return out;
}

}  // namespace

std::vector<std::string> split_identifier(const std::string& name) {
  std::vector<std::string> words;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      words.push_back(to_lower(cur));
      cur.clear();
    }
  };
  const std::size_t n = name.size();
  for (std::size_t i = 0; i < n; ++i) {
    char c = name[i];
    if (c == '_' || c == '$') {
      flush();
      continue;
    }
    if (!cur.empty()) {
      char prev = cur.back();
      bool boundary = false;
      if (is_lower(prev) && is_upper(c)) boundary = true;                      // fooBar
      else if (is_letter(prev) != is_letter(c) && (is_digit(prev) || is_digit(c)))
        boundary = true;                                                       // foo2bar
      else if (is_upper(prev) && is_upper(c) && i + 1 < n && is_lower(name[i + 1]))
        boundary = true;                                                       // XMLReader
      if (boundary) flush();
    }
    cur += c;
  }
  flush();
  return words;
}

namespace {

struct Candidate {
  std::vector<std::string> words;
  int distance = 0;

  // Nearest first, then longer expansions, then more words, then lexicographic.
  bool better_than(const Candidate& o) const {
    if (distance != o.distance) return distance < o.distance;
    std::size_t len = join(words).size(), olen = join(o.words).size();
    if (len != olen) return len > olen;
    if (words.size() != o.words.size()) return words.size() > o.words.size();
    return words < o.words;
  }
};

std::optional<std::vector<std::string>> pick_best(std::vector<Candidate>& cands) {
  if (cands.empty()) return std::nullopt;
  const Candidate* best = &cands[0];
  for (const auto& c : cands)
    if (c.better_than(*best)) best = &c;
  return best->words;
}

bool starts_subsequence(const std::string& needle, const std::string& hay) {
  if (needle.empty() || hay.empty() || needle[0] != hay[0]) return false;
  std::size_t i = 0;
  for (char c : hay) {
    if (i < needle.size() && c == needle[i]) ++i;
  }
  return i == needle.size();
}

}  // namespace

std::optional<std::vector<std::string>> expand_abbreviation(const std::string& ident,
                                                            const AbbrevContext& ctx) {
  const std::string target = to_lower(ident);
  if (target.empty()) return std::nullopt;

  auto distance_of = [&](int i) {
    return ctx.ident_pos >= 0 ? std::abs(i - ctx.ident_pos) : i;
  };

  std::vector<Candidate> substr_hits, initials_hits, subseq_hits;
  for (int i = 0; i < static_cast<int>(ctx.words.size()); ++i) {
    const std::string& w = ctx.words[i];
    if (to_lower(w) == target) continue;  // the occurrence itself
    std::vector<std::string> parts = split_identifier(w);
    if (parts.empty()) continue;

    for (const auto& p : parts) {
      if (p == target) continue;
      if (p.find(target) != std::string::npos)
        substr_hits.push_back({{p}, distance_of(i)});
      else if (starts_subsequence(target, p))
        subseq_hits.push_back({{p}, distance_of(i)});
    }

    // Initials rule: the name must match a run of initials that starts at
    // the word's first primitive (prefix of the initials string).
    std::string initials;
    for (const auto& p : parts) initials += p[0];
    if (parts.size() >= 2 && initials.rfind(target, 0) == 0) {
      std::vector<std::string> run(parts.begin(), parts.begin() + target.size());
      initials_hits.push_back({std::move(run), distance_of(i)});
    }
  }

  if (auto best = pick_best(substr_hits)) return best;
  if (auto best = pick_best(initials_hits)) return best;
  return pick_best(subseq_hits);
}

namespace {

const char* kStatementKinds[] = {"VarDecl",        "ExprStatement", "ReturnStatement",
                                 "IfStatement",    "WhileStatement", "ForStatement",
                                 "ThrowStatement", "BreakStatement"};

bool is_statement_kind(const std::string& kind) {
  for (const char* k : kStatementKinds)
    if (kind == k) return true;
  return false;
}

void collect_identifier_tokens(const ParseNode& n, std::vector<std::string>& out) {
  if (n.kind == "Identifier" && n.token) out.push_back(*n.token);
  for (const auto& c : n.children) collect_identifier_tokens(c, out);
}

ParseNode rewrite_leaf(const ParseNode& leaf, const RewritePolicy& policy,
                       const std::vector<std::string>* stmt_words, int* stmt_cursor) {
  std::vector<std::string> words = split_identifier(*leaf.token);
  if (policy.expand_abbreviations && words.size() == 1 && stmt_words) {
    AbbrevContext ctx;
    ctx.words = *stmt_words;
    ctx.ident_pos = *stmt_cursor;
    if (auto expanded = expand_abbreviation(*leaf.token, ctx)) words = *expanded;
  }
  if (words.size() >= 2) {
    ParseNode combined = make_node("CombineName");
    for (auto& w : words) combined.children.push_back(make_leaf("Word", std::move(w)));
    return combined;
  }
  ParseNode out = leaf;
  out.token = words.empty() ? to_lower(*leaf.token) : words[0];
  return out;
}

// stmt_words/stmt_cursor describe the nearest enclosing statement: its
// identifier token list and how many of those tokens precede the walk.
ParseNode rewrite_walk(const ParseNode& n, const RewritePolicy& policy,
                       const std::vector<std::string>* stmt_words, int* stmt_cursor) {
  if (n.kind == "Identifier" && n.token) {
    ParseNode out = rewrite_leaf(n, policy, stmt_words, stmt_cursor);
    if (stmt_cursor) ++*stmt_cursor;
    return out;
  }
  if (is_statement_kind(n.kind)) {
    std::vector<std::string> words;
    collect_identifier_tokens(n, words);
    int cursor = 0;
    ParseNode out = n;
    out.children.clear();
    for (const auto& c : n.children)
      out.children.push_back(rewrite_walk(c, policy, &words, &cursor));
    return out;
  }
  ParseNode out = n;
  out.children.clear();
  for (const auto& c : n.children)
    out.children.push_back(rewrite_walk(c, policy, stmt_words, stmt_cursor));
  return out;
}

}  // namespace

ParseNode rewrite_identifiers(const ParseNode& tree, const RewritePolicy& policy) {
  return rewrite_walk(tree, policy, nullptr, nullptr);
}

namespace {

ParseNode strip_walk(const ParseNode& n, std::map<std::string, int>& ids) {
  auto placeholder = [&](const std::string& name) {
    auto [it, fresh] = ids.try_emplace(name, static_cast<int>(ids.size()));
    (void)fresh;
    return "ID" + std::to_string(it->second);
  };
  if (n.kind == "Identifier" && n.token) {
    return make_leaf("Identifier", placeholder(*n.token));
  }
  if (n.kind == "CombineName") {
    std::string joined;
    for (const auto& c : n.children)
      if (c.token) joined += *c.token;
    return make_leaf("Identifier", placeholder(joined));
  }
  ParseNode out = n;
  out.children.clear();
  for (const auto& c : n.children) out.children.push_back(strip_walk(c, ids));
  return out;
}

}  // namespace

ParseNode strip_identifiers(const ParseNode& tree) {
  std::map<std::string, int> ids;
  return strip_walk(tree, ids);
}

}  // namespace treecomment
