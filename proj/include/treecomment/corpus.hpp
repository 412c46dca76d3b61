// Mining (method body, leading comment) pairs from Java-like source trees:
// block/doc comments immediately preceding a method declaration, normalized
// to lowercase punctuation-free word lists. Pairs with more than eight words
// survive; constructors never do. Also owns the JSONL pair format, the
// seeded corpus split, and the comment vocabulary builder.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "treecomment/encoder.hpp"
#include "treecomment/tree.hpp"

namespace treecomment {

struct CommentPair {
  ParseNode tree;                    // method body only
  std::vector<std::string> comment;  // normalized words, no sentinels
  std::string path;                  // audit metadata, never fed to models
  std::string method;
};

// One JSONL line: {"comment":[...],"meta":{"method":...,"path":...},"tree":<node>}
nlohmann::json pair_to_json(const CommentPair& pair);
CommentPair pair_from_json(const nlohmann::json& j, const std::string& where);
std::vector<CommentPair> load_pairs(const std::string& path);
void save_pairs(const std::vector<CommentPair>& pairs, const std::string& path);

// Comment text -> word list: per-line comment markup stripped, HTML-ish
// <...> tags removed, every punctuation character deleted from tokens
// ("@return" -> "return"), empties dropped, everything lowercased.
std::vector<std::string> normalize_comment(const std::string& raw);

struct ExtractStats {
  std::size_t files = 0;
  std::size_t commented_methods = 0;  // candidates with a leading comment
  std::size_t parse_failures = 0;
  std::size_t too_short = 0;    // filtered by the >8-word rule
  std::size_t constructors = 0;
};

// Scans *.java under root (sorted path order, so output is reproducible),
// parsing each commented method body. Unparseable methods are logged to
// `log` and skipped; nothing here is fatal.
std::vector<CommentPair> extract_pairs(const std::string& root, std::ostream& log,
                                       ExtractStats* stats = nullptr);

struct SplitSpec {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
  std::uint64_t seed = 0;
};

struct CorpusSplit {
  std::vector<CommentPair> train, val, test;
};

// Seeded shuffle, then contiguous cut at rounded ratio boundaries. Throws
// UserError when the ratios are invalid or any split would be empty.
CorpusSplit split_corpus(std::vector<CommentPair> pairs, const SplitSpec& spec);

// Comment vocabulary over the training split: sentinels first, then words
// with frequency >= min_freq, ordered by frequency desc, then lexicographic.
Vocab build_comment_vocab_from(const std::vector<CommentPair>& train, int min_freq);

// START + per-word ids (UNK for out-of-vocabulary) + END.
std::vector<int> comment_to_ids(const std::vector<std::string>& words, const Vocab& vocab);

}  // namespace treecomment
