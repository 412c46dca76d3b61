// Recursive tree encoder over ParseTrees with a hand-written backward pass,
// plus the structure-blind bag-of-words baselines.
//
// Forward rules, bottom-up:
//   token leaf (Identifier/Word)  -> word embedding of the token
//   Literal leaf                  -> kind embedding + word embedding of the
//                                    literal's bucket (INT_LIT, STR_LIT, ...)
//   structural childless node     -> kind embedding
//   internal node, children C     -> kind embedding + relu(W*agg + b)
//                                    agg = sum of child vectors (sum model)
//                                    or that sum / |C| (average model)
// Child vectors are summed in a value-canonical order, so permuting children
// cannot change even the last bit of the output.
//
// Bag encoders ignore structure entirely: they sum (les) or average (lea)
// the word embeddings of the tree's token leaves; literal buckets and
// structural kinds never contribute.

#pragma once

#include <map>
#include <string>
#include <vector>

#include "treecomment/numeric.hpp"
#include "treecomment/tree.hpp"

namespace treecomment {

// String-to-id table; unknown strings map to unk_id (entry 0 by default).
struct Vocab {
  std::vector<std::string> items;
  std::map<std::string, int> index;
  int unk_id = 0;

  explicit Vocab(std::string unk = "UNK") { add(std::move(unk)); }

  int add(const std::string& s) {
    auto [it, fresh] = index.try_emplace(s, static_cast<int>(items.size()));
    if (fresh) items.push_back(s);
    return it->second;
  }
  int id_of(const std::string& s) const {
    auto it = index.find(s);
    return it == index.end() ? unk_id : it->second;
  }
  bool contains(const std::string& s) const { return index.count(s) > 0; }
  int size() const { return static_cast<int>(items.size()); }

  bool operator==(const Vocab&) const = default;
};

enum class TreeModel { Sum, Avg };
enum class BagModel { Les, Lea };

TreeModel tree_model_from_string(const std::string& s);  // "sum" | "avg"
BagModel bag_model_from_string(const std::string& s);    // "les" | "lea"

// Literal token -> bucket word (INT_LIT, FLOAT_LIT, STR_LIT, CHAR_LIT,
// BOOL_LIT, NULL_LIT), classified from the raw token text.
std::string literal_bucket(const std::string& token);
extern const char* const kLiteralBuckets[6];

struct CodeRnnParams {
  int dim = 64;
  Mat W;         // dim x dim
  Vec b;         // dim
  Mat kind_emb;  // kinds.size() x dim
  Mat word_emb;  // words.size() x dim
  Vocab kinds{"UNK_KIND"};
  Vocab words{"UNK_WORD"};

  void allocate();  // sizes W/b/embeddings from dim and vocab sizes
  std::vector<NamedTensor> tensors();
};

// Builds the kind and code-word vocabularies from training trees and
// allocates parameter storage. Word entries start with the literal buckets;
// the rest are token words ordered by frequency desc, then lexicographic.
CodeRnnParams make_encoder_params(const std::vector<const ParseNode*>& trees, int dim);

// Per-node forward cache in post-order; enough to replay the tree backward.
struct EncodeTrace {
  enum class Rule { TokenLeaf, LiteralLeaf, StructuralLeaf, Internal };
  struct NodeRec {
    Rule rule;
    int kind_id = -1;
    int word_id = -1;
    std::vector<int> child_idx;  // post-order indices of direct children
    Vec agg;                     // internal only: aggregated child input
    Vec pre;                     // internal only: W*agg + b
    Vec out;
  };
  TreeModel model = TreeModel::Sum;
  std::vector<NodeRec> nodes;  // post-order; back() is the root

  const Vec& root() const { return nodes.back().out; }
};

EncodeTrace encode(const ParseNode& tree, const CodeRnnParams& params, TreeModel model);

struct EncoderGrads {
  Mat dW;
  Vec db;
  Mat dkind_emb;
  Mat dword_emb;

  void allocate(const CodeRnnParams& params);
  std::vector<NamedTensor> tensors();
};

// Reverse-mode gradients of (loss with d loss/d root = grad_root) w.r.t.
// every encoder parameter; accumulates into grads.
void encode_backward(const EncodeTrace& trace, const CodeRnnParams& params, const Vec& grad_root,
                     EncoderGrads& grads);

struct BagTrace {
  BagModel model = BagModel::Les;
  std::vector<int> word_ids;
  Vec out;
};

// Throws UserError when the tree has no token words at all.
BagTrace encode_bag(const ParseNode& tree, const CodeRnnParams& params, BagModel model);

void encode_bag_backward(const BagTrace& trace, const Vec& grad_root, EncoderGrads& grads);

}  // namespace treecomment
