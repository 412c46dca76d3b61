// Word-level identifier semantics: compound-name splitting, abbreviation
// expansion against the declaring statement's words, rewriting identifier
// leaves into CombineName subtrees, and replacing identifiers with
// placeholders for the name-blind baselines.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "treecomment/tree.hpp"

namespace treecomment {

// Splits a compound identifier at underscores, lower→upper camelCase
// boundaries, acronym ends (XMLReader → xml, reader) and letter↔digit
// transitions. Tokens come back lowercased; digit runs are kept as their own
// tokens. Separator-only input yields an empty list.
std::vector<std::string> split_identifier(const std::string& name);

// Words surrounding one identifier occurrence: the token list of its
// declaring statement, plus the occurrence's own index in that list (-1 if
// unknown), used for nearest-candidate tie-breaking.
struct AbbrevContext {
  std::vector<std::string> words;
  int ident_pos = -1;
};

// Finds a full-word expansion for a short name, trying three rules in order
// and stopping at the first that yields any candidate:
//   A. the name is a contiguous substring of one primitive word obtained by
//      splitting a context word → that primitive word;
//   B. the name equals the initials of a context word's primitive words, or
//      a run of those initials starting at the first word → the split word;
//   C. the name is a subsequence of a primitive word starting at its first
//      letter (rnd → random) → that primitive word.
// Matching is case-insensitive; the occurrence itself never matches. Among
// candidates from one rule the nearest occurrence wins, then the longer
// expansion, then more words, then lexicographic order.
std::optional<std::vector<std::string>> expand_abbreviation(const std::string& ident,
                                                            const AbbrevContext& ctx);

struct RewritePolicy {
  bool expand_abbreviations = false;
};

// Rewrites every Identifier leaf: multi-word names become
// CombineName[Word...] with lowercase word leaves; single-word names are
// lowercased in place. With expansion enabled, a name that did not split is
// first run through expand_abbreviation using its statement as context.
ParseNode rewrite_identifiers(const ParseNode& tree, const RewritePolicy& policy = {});

// Replaces identifier names with placeholders ID0, ID1, ... numbered by
// first occurrence in pre-order; the same name always maps to the same
// placeholder within one tree. A CombineName subtree counts as one name
// (its words joined) and collapses to a single placeholder leaf.
ParseNode strip_identifiers(const ParseNode& tree);

}  // namespace treecomment
