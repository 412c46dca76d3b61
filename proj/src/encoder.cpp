#include "treecomment/encoder.hpp"

#include <algorithm>
#include <cctype>

#include "treecomment/error.hpp"

namespace treecomment {

TreeModel tree_model_from_string(const std::string& s) {
  if (s == "sum") return TreeModel::Sum;
  if (s == "avg") return TreeModel::Avg;
  throw UserError("unknown tree encoder model '" + s + "' (expected sum or avg)");
}

BagModel bag_model_from_string(const std::string& s) {
  if (s == "les") return BagModel::Les;
  if (s == "lea") return BagModel::Lea;
  throw UserError("unknown bag encoder model '" + s + "' (expected les or lea)");
}

const char* const kLiteralBuckets[6] = {"INT_LIT",  "FLOAT_LIT", "STR_LIT",
                                        "CHAR_LIT", "BOOL_LIT",  "NULL_LIT"};

std::string literal_bucket(const std::string& token) {
  if (token.empty()) return "STR_LIT";
  if (token == "true" || token == "false") return "BOOL_LIT";
  if (token == "null") return "NULL_LIT";
  if (token[0] == '"') return "STR_LIT";
  if (token[0] == '\'') return "CHAR_LIT";
  if (std::isdigit(static_cast<unsigned char>(token[0]))) {
    char suffix = token.back();
    if (token.find('.') != std::string::npos || suffix == 'f' || suffix == 'F' || suffix == 'd' ||
        suffix == 'D')
      return "FLOAT_LIT";
    return "INT_LIT";
  }
  return "STR_LIT";
}

void CodeRnnParams::allocate() {
  W = Mat(dim, dim);
  b.assign(static_cast<std::size_t>(dim), 0.0);
  kind_emb = Mat(kinds.size(), dim);
  word_emb = Mat(words.size(), dim);
}

std::vector<NamedTensor> CodeRnnParams::tensors() {
  return {{"W", &W.a}, {"b", &b}, {"kind_emb", &kind_emb.a}, {"word_emb", &word_emb.a}};
}

namespace {

// Frequency-desc, then lexicographic: the deterministic vocabulary order.
std::vector<std::string> order_by_freq(const std::map<std::string, std::size_t>& counts) {
  std::vector<std::pair<std::string, std::size_t>> entries(counts.begin(), counts.end());
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> out;
  out.reserve(entries.size());
  for (auto& [word, _] : entries) out.push_back(word);
  return out;
}

bool is_token_leaf(const ParseNode& n) {
  return n.token && n.children.empty() && n.kind != "Literal";
}

}  // namespace

CodeRnnParams make_encoder_params(const std::vector<const ParseNode*>& trees, int dim) {
  std::map<std::string, std::size_t> kind_counts, word_counts;
  for (const ParseNode* t : trees) {
    walk_preorder(*t, [&](const ParseNode& n) {
      ++kind_counts[n.kind];
      if (is_token_leaf(n)) ++word_counts[*n.token];
    });
  }
  CodeRnnParams params;
  params.dim = dim;
  for (const auto& k : order_by_freq(kind_counts)) params.kinds.add(k);
  for (const char* bucket : kLiteralBuckets) params.words.add(bucket);
  for (const auto& w : order_by_freq(word_counts)) params.words.add(w);
  params.allocate();
  return params;
}

EncodeTrace encode(const ParseNode& tree, const CodeRnnParams& params, TreeModel model) {
  EncodeTrace trace;
  trace.model = model;
  trace.nodes.reserve(node_count(tree));

  struct Frame {
    const ParseNode* node;
    std::size_t next_child = 0;
    std::vector<int> child_idx;
  };
  std::vector<Frame> stack;
  stack.push_back({&tree, 0, {}});

  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_child < f.node->children.size()) {
      stack.push_back({&f.node->children[f.next_child++], 0, {}});
      continue;
    }

    const ParseNode& n = *f.node;
    EncodeTrace::NodeRec rec;
    rec.child_idx = std::move(f.child_idx);
    if (n.children.empty()) {
      if (n.token && n.kind == "Literal") {
        rec.rule = EncodeTrace::Rule::LiteralLeaf;
        rec.kind_id = params.kinds.id_of(n.kind);
        rec.word_id = params.words.id_of(literal_bucket(*n.token));
        rec.out.assign(static_cast<std::size_t>(params.dim), 0.0);
        auto ke = params.kind_emb.row(rec.kind_id);
        auto we = params.word_emb.row(rec.word_id);
        for (int i = 0; i < params.dim; ++i) rec.out[i] = ke[i] + we[i];
      } else if (n.token) {
        rec.rule = EncodeTrace::Rule::TokenLeaf;
        rec.word_id = params.words.id_of(*n.token);
        auto we = params.word_emb.row(rec.word_id);
        rec.out.assign(we.begin(), we.end());
      } else {
        rec.rule = EncodeTrace::Rule::StructuralLeaf;
        rec.kind_id = params.kinds.id_of(n.kind);
        auto ke = params.kind_emb.row(rec.kind_id);
        rec.out.assign(ke.begin(), ke.end());
      }
    } else {
      rec.rule = EncodeTrace::Rule::Internal;
      rec.kind_id = params.kinds.id_of(n.kind);
      std::vector<const Vec*> child_vecs;
      child_vecs.reserve(rec.child_idx.size());
      for (int ci : rec.child_idx) child_vecs.push_back(&trace.nodes[ci].out);
      rec.agg = accumulate_canonical(child_vecs);
      if (model == TreeModel::Avg) {
        const double n_children = static_cast<double>(child_vecs.size());
        for (double& x : rec.agg) x /= n_children;
      }
      rec.pre = matvec(params.W, rec.agg);
      for (int i = 0; i < params.dim; ++i) rec.pre[i] += params.b[i];
      rec.out.assign(static_cast<std::size_t>(params.dim), 0.0);
      auto ke = params.kind_emb.row(rec.kind_id);
      for (int i = 0; i < params.dim; ++i)
        rec.out[i] = ke[i] + (rec.pre[i] > 0.0 ? rec.pre[i] : 0.0);
    }

    const int my_idx = static_cast<int>(trace.nodes.size());
    trace.nodes.push_back(std::move(rec));
    stack.pop_back();
    if (!stack.empty()) stack.back().child_idx.push_back(my_idx);
  }
  return trace;
}

void EncoderGrads::allocate(const CodeRnnParams& params) {
  dW = Mat(params.dim, params.dim);
  db.assign(static_cast<std::size_t>(params.dim), 0.0);
  dkind_emb = Mat(params.kinds.size(), params.dim);
  dword_emb = Mat(params.words.size(), params.dim);
}

std::vector<NamedTensor> EncoderGrads::tensors() {
  return {{"W", &dW.a}, {"b", &db}, {"kind_emb", &dkind_emb.a}, {"word_emb", &dword_emb.a}};
}

void encode_backward(const EncodeTrace& trace, const CodeRnnParams& params, const Vec& grad_root,
                     EncoderGrads& grads) {
  if (trace.nodes.empty()) throw InternalError("encode_backward: empty trace");
  if (grad_root.size() != static_cast<std::size_t>(params.dim))
    throw InternalError("encode_backward: gradient dimension mismatch");

  std::vector<Vec> dout(trace.nodes.size());
  dout.back() = grad_root;

  for (std::size_t i = trace.nodes.size(); i-- > 0;) {
    const auto& rec = trace.nodes[i];
    if (dout[i].empty()) continue;  // unreachable only if grad is zero-allocated lazily
    const Vec& g = dout[i];
    switch (rec.rule) {
      case EncodeTrace::Rule::TokenLeaf:
        axpy(1.0, g, grads.dword_emb.row(rec.word_id));
        break;
      case EncodeTrace::Rule::LiteralLeaf:
        axpy(1.0, g, grads.dkind_emb.row(rec.kind_id));
        axpy(1.0, g, grads.dword_emb.row(rec.word_id));
        break;
      case EncodeTrace::Rule::StructuralLeaf:
        axpy(1.0, g, grads.dkind_emb.row(rec.kind_id));
        break;
      case EncodeTrace::Rule::Internal: {
        axpy(1.0, g, grads.dkind_emb.row(rec.kind_id));
        Vec du(g.size());
        for (std::size_t j = 0; j < g.size(); ++j) du[j] = rec.pre[j] > 0.0 ? g[j] : 0.0;
        add_outer(grads.dW, du, rec.agg);
        axpy(1.0, du, grads.db);
        Vec dagg = matvec_t(params.W, du);
        const double scale = trace.model == TreeModel::Avg
                                 ? 1.0 / static_cast<double>(rec.child_idx.size())
                                 : 1.0;
        for (int ci : rec.child_idx) {
          if (dout[ci].empty()) dout[ci].assign(g.size(), 0.0);
          axpy(scale, dagg, dout[ci]);
        }
        break;
      }
    }
  }
}

BagTrace encode_bag(const ParseNode& tree, const CodeRnnParams& params, BagModel model) {
  BagTrace trace;
  trace.model = model;
  walk_preorder(tree, [&](const ParseNode& n) {
    if (is_token_leaf(n)) trace.word_ids.push_back(params.words.id_of(*n.token));
  });
  if (trace.word_ids.empty())
    throw UserError("bag encoder: tree contains no token words");

  std::vector<const Vec*> rows;
  std::vector<Vec> storage;
  storage.reserve(trace.word_ids.size());
  for (int id : trace.word_ids) {
    auto r = params.word_emb.row(id);
    storage.emplace_back(r.begin(), r.end());
  }
  for (const Vec& v : storage) rows.push_back(&v);
  trace.out = accumulate_canonical(rows);
  if (model == BagModel::Lea) {
    const double n = static_cast<double>(trace.word_ids.size());
    for (double& x : trace.out) x /= n;
  }
  return trace;
}

void encode_bag_backward(const BagTrace& trace, const Vec& grad_root, EncoderGrads& grads) {
  const double scale = trace.model == BagModel::Lea
                           ? 1.0 / static_cast<double>(trace.word_ids.size())
                           : 1.0;
  for (int id : trace.word_ids) axpy(scale, grad_root, grads.dword_emb.row(id));
}

}  // namespace treecomment
