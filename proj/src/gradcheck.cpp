#include "treecomment/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "treecomment/classifier.hpp"
#include "treecomment/decoder.hpp"
#include "treecomment/encoder.hpp"
#include "treecomment/error.hpp"

namespace treecomment {

namespace {

const char* const kKindPool[] = {"Block", "IfStatement", "ExprStatement",
                                 "MethodCall", "BinaryExpr", "Assign"};
const char* const kWordPool[] = {"alpha", "beta", "gamma", "delta",
                                 "count", "total", "value", "result"};
const char* const kLiteralPool[] = {"1", "42", "2.5", "\"s\"", "'c'", "true", "null"};

template <std::size_t N>
const char* pick(Rng& rng, const char* const (&pool)[N]) {
  return pool[rng.uniform_int(0, static_cast<int>(N) - 1)];
}

ParseNode random_subtree(Rng& rng, int& budget, int depth) {
  --budget;
  if (budget <= 0 || depth >= 4 || rng.uniform() < 0.35) {
    switch (rng.uniform_int(0, 2)) {
      case 0: return make_leaf("Identifier", pick(rng, kWordPool));
      case 1: return make_leaf("Literal", pick(rng, kLiteralPool));
      default: return make_node("BreakStatement");
    }
  }
  ParseNode n = make_node(pick(rng, kKindPool));
  const int nchild = rng.uniform_int(1, 3);
  for (int i = 0; i < nchild && budget > 0; ++i)
    n.children.push_back(random_subtree(rng, budget, depth + 1));
  if (n.children.empty()) n.children.push_back(make_leaf("Identifier", pick(rng, kWordPool)));
  return n;
}

bool has_token_leaf(const ParseNode& n) {
  if (n.token && n.children.empty() && n.kind != "Literal") return true;
  for (const ParseNode& c : n.children)
    if (has_token_leaf(c)) return true;
  return false;
}

double grad_rel_err(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), kGradCheckFloor});
}

// Compares analytic gradients against central differences tensor by tensor.
void compare(const std::vector<NamedTensor>& analytic, const std::vector<Vec>& numeric,
             double& max_err) {
  for (std::size_t t = 0; t < analytic.size(); ++t) {
    const Vec& a = *analytic[t].data;
    const Vec& n = numeric[t];
    for (std::size_t i = 0; i < a.size(); ++i)
      max_err = std::max(max_err, grad_rel_err(a[i], n[i]));
  }
}

GradCheckResult make_result(std::string suite, int instances, double max_err) {
  GradCheckResult r;
  r.suite = std::move(suite);
  r.instances = instances;
  r.max_rel_err = max_err;
  r.passed = max_err <= kGradCheckTol;
  return r;
}

}  // namespace

ParseNode random_tree(Rng& rng, int max_nodes, bool with_token_leaf) {
  for (;;) {
    int budget = rng.uniform_int(1, std::max(1, max_nodes));
    ParseNode t = random_subtree(rng, budget, 0);
    if (!with_token_leaf || has_token_leaf(t)) return t;
  }
}

GradCheckResult gradcheck_encoder(const std::string& variant, int instances, std::uint64_t seed) {
  const bool bag = variant == "les" || variant == "lea";
  if (!bag && variant != "sum" && variant != "avg")
    throw UserError("unknown encoder variant: " + variant);

  Rng rng(seed);
  double max_err = 0.0;
  for (int inst = 0; inst < instances; ++inst) {
    ParseNode tree = random_tree(rng, 15, bag);
    const int d = rng.uniform_int(2, 8);
    const int k = rng.uniform_int(2, 4);
    const int label = rng.uniform_int(0, k - 1);

    CodeRnnParams enc = make_encoder_params({&tree}, d);
    ClassifierHead head;
    head.allocate(k, d);
    std::vector<NamedTensor> params = enc.tensors();
    for (NamedTensor t : head.tensors()) params.push_back(t);
    init_uniform(params, rng, 0.5);

    auto loss = [&]() -> double {
      Vec v = encode_for_classify(tree, enc, variant);
      Vec p = predict(head, v);
      return cross_entropy(p, label);
    };

    EncoderGrads eg;
    eg.allocate(enc);
    Mat dWs(head.Ws.rows, head.Ws.cols);
    Vec dbs(head.bs.size(), 0.0);
    {
      Vec v = encode_for_classify(tree, enc, variant);
      Vec p = predict(head, v);
      Vec dlogits = p;
      dlogits[static_cast<std::size_t>(label)] -= 1.0;
      add_outer(dWs, dlogits, v);
      axpy(1.0, dlogits, dbs);
      Vec dv = matvec_t(head.Ws, dlogits);
      if (bag) {
        BagTrace tr = encode_bag(tree, enc, bag_model_from_string(variant));
        encode_bag_backward(tr, dv, eg);
      } else {
        EncodeTrace tr = encode(tree, enc, tree_model_from_string(variant));
        encode_backward(tr, enc, dv, eg);
      }
    }

    std::vector<NamedTensor> analytic = eg.tensors();
    analytic.push_back({"Ws", &dWs.a});
    analytic.push_back({"bs", &dbs});
    std::vector<Vec> numeric = finite_diff_gradient(loss, params, kGradCheckStep);
    compare(analytic, numeric, max_err);
  }
  return make_result("encoder-" + variant, instances, max_err);
}

GradCheckResult gradcheck_head(int instances, std::uint64_t seed) {
  Rng rng(seed);
  double max_err = 0.0;
  for (int inst = 0; inst < instances; ++inst) {
    const int d = rng.uniform_int(2, 8);
    const int k = rng.uniform_int(2, 5);
    const int label = rng.uniform_int(0, k - 1);
    ClassifierHead head;
    head.allocate(k, d);
    std::vector<NamedTensor> params = head.tensors();
    init_uniform(params, rng, 0.5);
    Vec v(static_cast<std::size_t>(d));
    for (double& x : v) x = rng.uniform(-1.0, 1.0);

    auto loss = [&]() -> double { return cross_entropy(predict(head, v), label); };

    Mat dWs(head.Ws.rows, head.Ws.cols);
    Vec dbs(head.bs.size(), 0.0);
    Vec p = predict(head, v);
    Vec dlogits = p;
    dlogits[static_cast<std::size_t>(label)] -= 1.0;
    add_outer(dWs, dlogits, v);
    axpy(1.0, dlogits, dbs);

    std::vector<NamedTensor> analytic{{"Ws", &dWs.a}, {"bs", &dbs}};
    std::vector<Vec> numeric = finite_diff_gradient(loss, params, kGradCheckStep);
    compare(analytic, numeric, max_err);
  }
  return make_result("classifier-head", instances, max_err);
}

GradCheckResult gradcheck_decoder(const std::string& cell, int instances, std::uint64_t seed) {
  if (cell != "gru" && cell != "basic") throw UserError("unknown decoder cell: " + cell);
  Rng rng(seed);
  double max_err = 0.0;
  for (int inst = 0; inst < instances; ++inst) {
    const int hidden = rng.uniform_int(2, 6);
    const int embed = rng.uniform_int(2, 6);
    const int d = rng.uniform_int(2, 6);
    const int extra_words = rng.uniform_int(2, 5);

    Vocab vocab = make_comment_vocab();
    for (int w = 0; w < extra_words; ++w) vocab.add("w" + std::to_string(w));

    DecoderParams p = make_decoder(cell, vocab, hidden, embed, d);
    DecoderParams g = make_decoder(cell, vocab, hidden, embed, d);
    std::vector<NamedTensor> params = decoder_tensors(p);
    init_uniform(params, rng, 0.5);

    Vec vm(static_cast<std::size_t>(d));
    for (double& x : vm) x = rng.uniform(-1.0, 1.0);

    const int interior = rng.uniform_int(1, 3);  // total length <= 5
    std::vector<int> ids{kStartId};
    for (int t = 0; t < interior; ++t) ids.push_back(rng.uniform_int(2, vocab.size() - 1));
    ids.push_back(kEndId);

    auto loss = [&]() -> double { return sequence_loss(p, vm, ids); };
    sequence_backward(p, vm, ids, g);

    std::vector<Vec> numeric = finite_diff_gradient(loss, params, kGradCheckStep);
    compare(decoder_tensors(g), numeric, max_err);
  }
  return make_result("decoder-" + cell, instances, max_err);
}

std::vector<GradCheckResult> gradcheck_all(std::uint64_t seed, int instances) {
  std::vector<GradCheckResult> out;
  out.push_back(gradcheck_encoder("sum", instances, seed));
  out.push_back(gradcheck_encoder("avg", instances, seed + 1));
  out.push_back(gradcheck_encoder("les", instances, seed + 2));
  out.push_back(gradcheck_encoder("lea", instances, seed + 3));
  out.push_back(gradcheck_head(instances, seed + 4));
  out.push_back(gradcheck_decoder("gru", instances, seed + 5));
  out.push_back(gradcheck_decoder("basic", instances, seed + 6));
  return out;
}

}  // namespace treecomment
