#include "doctest.h"
#include "treecomment/ident.hpp"
#include "treecomment/parser.hpp"

using namespace treecomment;

namespace {

using Words = std::vector<std::string>;

// Identifier/Word tokens in pre-order; CombineName children are joined with
// '+' so the grouping stays visible.
Words name_tokens(const ParseNode& tree) {
  Words out;
  walk_preorder(tree, [&](const ParseNode& n) {
    if (n.kind == "CombineName") {
      std::string joined;
      for (const auto& c : n.children) joined += (joined.empty() ? "" : "+") + *c.token;
      out.push_back(joined);
    } else if (n.kind == "Identifier" && n.token) {
      out.push_back(*n.token);
    }
  });
  return out;
}

bool contains_combine_words(const ParseNode& tree, const Words& words) {
  bool found = false;
  walk_preorder(tree, [&](const ParseNode& n) {
    if (n.kind != "CombineName" || n.children.size() != words.size()) return;
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (n.children[i].kind != "Word" || n.children[i].token != words[i]) return;
    }
    found = true;
  });
  return found;
}

}  // namespace

TEST_CASE("camel case and underscore names split into lowercase words") {
  CHECK(split_identifier("contextInitialize") == Words{"context", "initialize"});
  CHECK(split_identifier("apiSettings") == Words{"api", "settings"});
  CHECK(split_identifier("buildDataDictionary") == Words{"build", "data", "dictionary"});
  CHECK(split_identifier("add_result") == Words{"add", "result"});
}

TEST_CASE("acronym runs, digits, and separators split predictably") {
  CHECK(split_identifier("XMLReader") == Words{"xml", "reader"});
  CHECK(split_identifier("ccpDot") == Words{"ccp", "dot"});
  CHECK(split_identifier("parse2json") == Words{"parse", "2", "json"});
  CHECK(split_identifier("base64") == Words{"base", "64"});
  CHECK(split_identifier("foo$bar") == Words{"foo", "bar"});
  CHECK(split_identifier("value") == Words{"value"});
  CHECK(split_identifier("HTML") == Words{"html"});
  CHECK(split_identifier("___") == Words{});
  CHECK(split_identifier("") == Words{});
}

TEST_CASE("abbreviations expand from the declaring statement") {
  // Substring of a split word.
  AbbrevContext val_ctx{{"String", "val", "key", "value"}, 1};
  CHECK(expand_abbreviation("val", val_ctx) == Words{"value"});

  AbbrevContext conf_ctx{{"Configuration", "conf", "context", "getConfiguration"}, 1};
  CHECK(expand_abbreviation("conf", conf_ctx) == Words{"configuration"});

  // Initials of a compound word.
  AbbrevContext cm_ctx{{"ConfusionMatrix", "cm", "ConfusionMatrix"}, 1};
  CHECK(expand_abbreviation("cm", cm_ctx) == Words{"confusion", "matrix"});

  AbbrevContext dm_ctx{{"Matrix", "dm", "DoubleMatrix", "confusionMatrix"}, 1};
  CHECK(expand_abbreviation("dm", dm_ctx) == Words{"double", "matrix"});

  // Subsequence from the first letter, when nothing stronger matches.
  AbbrevContext rnd_ctx{{"Random", "rnd", "RandomUtils", "getRandom"}, 1};
  CHECK(expand_abbreviation("rnd", rnd_ctx) == Words{"random"});
}

TEST_CASE("expansion skips the occurrence itself and can fail") {
  AbbrevContext self_only{{"value"}, 0};
  CHECK(!expand_abbreviation("value", self_only).has_value());

  AbbrevContext unrelated{{"alpha", "beta"}, -1};
  CHECK(!expand_abbreviation("xyz", unrelated).has_value());
}

TEST_CASE("substring beats initials beats subsequence") {
  // "cm" is a substring of "cmdline" and the initials of ConfusionMatrix;
  // the substring rule fires first, even though both are equally near.
  AbbrevContext a{{"ConfusionMatrix", "cm", "cmdline"}, 1};
  CHECK(expand_abbreviation("cm", a) == Words{"cmdline"});

  // "dm" matches DoubleMatrix by initials and "dream" only as a
  // subsequence; initials win.
  AbbrevContext b{{"dream", "dm", "DoubleMatrix"}, 1};
  CHECK(expand_abbreviation("dm", b) == Words{"double", "matrix"});
}

TEST_CASE("nearest candidate wins within one rule") {
  // config (distance 2) and configuration (distance 1) both contain "conf";
  // the nearer occurrence wins.
  AbbrevContext ctx{{"configValue", "x", "conf", "configuration"}, 2};
  CHECK(expand_abbreviation("conf", ctx) == Words{"configuration"});
}

TEST_CASE("rewriting splits compound identifier leaves into word nodes") {
  ParseNode t = rewrite_identifiers(parse_source("contextInitialize = apiSettings;"));
  CHECK(contains_combine_words(t, {"context", "initialize"}));
  CHECK(contains_combine_words(t, {"api", "settings"}));

  // Single-word names are only lowercased, in place.
  ParseNode u = rewrite_identifiers(parse_source("Value = other;"));
  CHECK(name_tokens(u) == Words{"value", "other"});
}

TEST_CASE("rewrite with expansion resolves abbreviations against the statement") {
  RewritePolicy expand{true};

  ParseNode dm = rewrite_identifiers(
      parse_source("Matrix dm = new DoubleMatrix(confusionMatrix);"), expand);
  CHECK(name_tokens(dm) ==
        Words{"matrix", "double+matrix", "double+matrix", "confusion+matrix"});

  ParseNode val = rewrite_identifiers(parse_source("String val = key.value();"), expand);
  CHECK(name_tokens(val) == Words{"string", "value", "key", "value"});

  ParseNode conf =
      rewrite_identifiers(parse_source("Configuration conf = context.getConfiguration();"), expand);
  CHECK(name_tokens(conf) ==
        Words{"configuration", "configuration", "context", "get+configuration"});

  ParseNode rnd =
      rewrite_identifiers(parse_source("Random rnd = RandomUtils.getRandom();"), expand);
  CHECK(name_tokens(rnd) == Words{"random", "random", "random+utils", "get+random"});
}

TEST_CASE("without the expansion policy abbreviations stay put") {
  ParseNode t = rewrite_identifiers(parse_source("Matrix dm = new DoubleMatrix(x);"));
  Words names = name_tokens(t);
  CHECK(names[1] == "dm");
}

TEST_CASE("rewrite leaves literals and structure untouched") {
  ParseNode t = rewrite_identifiers(parse_source("fooBar = baz(42, \"s\");"));
  auto kinds = node_kinds(t);
  CHECK(kinds["Literal"] == 2);
  CHECK(kinds["MethodCall"] == 1);
  CHECK(kinds["CombineName"] == 1);
  CHECK(kinds["Word"] == 2);
}

TEST_CASE("stripping numbers identifiers by first occurrence") {
  ParseNode t = strip_identifiers(parse_source("a = b; c = a;"));
  CHECK(name_tokens(t) == Words{"ID0", "ID1", "ID2", "ID0"});
}

TEST_CASE("a combined name collapses to one placeholder") {
  ParseNode src = parse_source("confusionMatrix = other;");
  ParseNode rewritten = rewrite_identifiers(src);
  REQUIRE(contains_combine_words(rewritten, {"confusion", "matrix"}));

  ParseNode stripped = strip_identifiers(rewritten);
  auto kinds = node_kinds(stripped);
  CHECK(kinds.count("CombineName") == 0);
  CHECK(kinds.count("Word") == 0);
  CHECK(kinds["Identifier"] == 2);

  // The joined words and a plain identifier with the same spelling share a
  // placeholder.
  ParseNode both = strip_identifiers(
      rewrite_identifiers(parse_source("confusionMatrix = confusionmatrix;")));
  Words names = name_tokens(both);
  REQUIRE(names.size() == 2);
  CHECK(names[0] == names[1]);
}

TEST_CASE("stripping is stable under renaming") {
  ParseNode a = strip_identifiers(parse_source("x = y + x;"));
  ParseNode b = strip_identifiers(parse_source("foo = bar + foo;"));
  CHECK(a == b);
}

TEST_CASE("strip after rewrite keeps the statement structure") {
  ParseNode t = parse_source("Matrix dm = new DoubleMatrix(confusionMatrix);");
  std::size_t plain = node_count(strip_identifiers(t));
  std::size_t via_rewrite = node_count(strip_identifiers(rewrite_identifiers(t)));
  CHECK(plain == via_rewrite);
}
