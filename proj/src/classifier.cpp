#include "treecomment/classifier.hpp"

#include <algorithm>
#include <iostream>
#include <numeric>

#include "treecomment/error.hpp"

namespace treecomment {

void ClassifierHead::allocate(int k, int d) {
  Ws = Mat(k, d);
  bs.assign(static_cast<std::size_t>(k), 0.0);
}

std::vector<NamedTensor> ClassifierHead::tensors() { return {{"Ws", &Ws.a}, {"bs", &bs}}; }

Vec predict(const ClassifierHead& head, const Vec& v) {
  Vec logits = matvec(head.Ws, v);
  for (std::size_t i = 0; i < logits.size(); ++i) logits[i] += head.bs[i];
  return softmax(logits);
}

bool is_bag_variant(const std::string& variant) { return variant == "les" || variant == "lea"; }

Vec encode_for_classify(const ParseNode& tree, const CodeRnnParams& encoder,
                        const std::string& variant) {
  if (is_bag_variant(variant))
    return encode_bag(tree, encoder, bag_model_from_string(variant)).out;
  return encode(tree, encoder, tree_model_from_string(variant)).root();
}

ClassifierTrainResult train_classifier(const std::vector<LabeledExample>& data, int k,
                                       const ClassifyConfig& cfg) {
  if (k < 2) throw UserError("classification needs at least 2 classes");
  std::vector<std::size_t> per_class(static_cast<std::size_t>(k), 0);
  for (const auto& ex : data) {
    if (ex.label < 0 || ex.label >= k)
      throw UserError("class label " + std::to_string(ex.label) + " out of range for k=" +
                      std::to_string(k));
    ++per_class[static_cast<std::size_t>(ex.label)];
  }
  for (int c = 0; c < k; ++c)
    if (per_class[static_cast<std::size_t>(c)] == 0)
      throw UserError("class " + std::to_string(c) + " has no training examples");

  const bool bag = is_bag_variant(cfg.variant);
  const TreeModel tree_model = bag ? TreeModel::Sum : tree_model_from_string(cfg.variant);
  const BagModel bag_model = bag ? bag_model_from_string(cfg.variant) : BagModel::Les;

  ClassifierTrainResult result;
  std::vector<const ParseNode*> trees;
  trees.reserve(data.size());
  for (const auto& ex : data) trees.push_back(&ex.tree);
  result.encoder = make_encoder_params(trees, cfg.dim);
  result.head.allocate(k, cfg.dim);

  Rng rng(cfg.seed);
  auto enc_tensors = result.encoder.tensors();
  auto head_tensors = result.head.tensors();
  std::vector<NamedTensor> params = enc_tensors;
  params.insert(params.end(), head_tensors.begin(), head_tensors.end());
  init_uniform(params, rng);

  EncoderGrads enc_grads;
  enc_grads.allocate(result.encoder);
  Mat dWs(k, cfg.dim);
  Vec dbs(static_cast<std::size_t>(k), 0.0);
  auto eg_tensors = enc_grads.tensors();
  std::vector<NamedTensor> grads = eg_tensors;
  grads.push_back({"Ws", &dWs.a});
  grads.push_back({"bs", &dbs});

  AdaGrad opt;
  opt.lr = cfg.lr;
  opt.init(params);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t idx : order) {
      const LabeledExample& ex = data[idx];
      for (auto& g : grads) std::fill(g.data->begin(), g.data->end(), 0.0);

      Vec v;
      EncodeTrace tree_trace;
      BagTrace bag_trace;
      if (bag) {
        bag_trace = encode_bag(ex.tree, result.encoder, bag_model);
        v = bag_trace.out;
      } else {
        tree_trace = encode(ex.tree, result.encoder, tree_model);
        v = tree_trace.root();
      }

      Vec p = predict(result.head, v);
      loss_sum += cross_entropy(p, ex.label);

      // d loss / d logits for softmax + cross-entropy.
      Vec dlogits = p;
      dlogits[static_cast<std::size_t>(ex.label)] -= 1.0;
      add_outer(dWs, dlogits, v);
      axpy(1.0, dlogits, dbs);
      Vec dv = matvec_t(result.head.Ws, dlogits);
      if (bag)
        encode_bag_backward(bag_trace, dv, enc_grads);
      else
        encode_backward(tree_trace, result.encoder, dv, enc_grads);

      opt.step(params, grads);
    }
    result.loss_curve.push_back(loss_sum / static_cast<double>(data.size()));
  }
  return result;
}

namespace {

double assignment_accuracy(const std::vector<int>& pred, const std::vector<int>& gold,
                           const std::vector<int>& assign) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (assign[static_cast<std::size_t>(pred[i])] == gold[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

std::vector<int> best_assignment(const std::vector<int>& pred, const std::vector<int>& gold,
                                 int k) {
  if (k <= 8) {
    std::vector<int> perm(static_cast<std::size_t>(k));
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<int> best = perm;
    double best_acc = assignment_accuracy(pred, gold, perm);
    while (std::next_permutation(perm.begin(), perm.end())) {
      double acc = assignment_accuracy(pred, gold, perm);
      if (acc > best_acc) {
        best_acc = acc;
        best = perm;
      }
    }
    return best;
  }
  // Greedy fallback: repeatedly bind the (cluster, class) pair with the
  // largest overlap. Not exact; k this large is outside the studied setup.
  std::cerr << "warning: k=" << k << " > 8, using greedy label assignment\n";
  std::vector<std::vector<std::size_t>> overlap(static_cast<std::size_t>(k),
                                                std::vector<std::size_t>(static_cast<std::size_t>(k), 0));
  for (std::size_t i = 0; i < pred.size(); ++i)
    ++overlap[static_cast<std::size_t>(pred[i])][static_cast<std::size_t>(gold[i])];
  std::vector<int> assign(static_cast<std::size_t>(k), -1);
  std::vector<bool> cluster_used(static_cast<std::size_t>(k), false),
      class_used(static_cast<std::size_t>(k), false);
  for (int step = 0; step < k; ++step) {
    std::size_t best_c = 0, best_g = 0, best_n = 0;
    bool found = false;
    for (int c = 0; c < k; ++c) {
      if (cluster_used[static_cast<std::size_t>(c)]) continue;
      for (int g = 0; g < k; ++g) {
        if (class_used[static_cast<std::size_t>(g)]) continue;
        std::size_t n = overlap[static_cast<std::size_t>(c)][static_cast<std::size_t>(g)];
        if (!found || n > best_n) {
          found = true;
          best_c = static_cast<std::size_t>(c);
          best_g = static_cast<std::size_t>(g);
          best_n = n;
        }
      }
    }
    assign[best_c] = static_cast<int>(best_g);
    cluster_used[best_c] = true;
    class_used[best_g] = true;
  }
  return assign;
}

}  // namespace

ClassMetrics evaluate_assignment(const std::vector<int>& predictions, const std::vector<int>& gold,
                                 int k) {
  if (predictions.size() != gold.size())
    throw UserError("evaluate: prediction and gold lists differ in length (" +
                    std::to_string(predictions.size()) + " vs " + std::to_string(gold.size()) +
                    ")");
  if (predictions.empty()) throw UserError("evaluate: empty prediction list");
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i] < 0 || predictions[i] >= k || gold[i] < 0 || gold[i] >= k)
      throw UserError("evaluate: label out of range at index " + std::to_string(i));
  }

  ClassMetrics m;
  m.assignment = best_assignment(predictions, gold, k);
  m.accuracy = assignment_accuracy(predictions, gold, m.assignment);

  // Purity over raw predicted clusters: each cluster votes for its most
  // common gold class.
  std::vector<std::vector<std::size_t>> overlap(static_cast<std::size_t>(k),
                                                std::vector<std::size_t>(static_cast<std::size_t>(k), 0));
  for (std::size_t i = 0; i < predictions.size(); ++i)
    ++overlap[static_cast<std::size_t>(predictions[i])][static_cast<std::size_t>(gold[i])];
  std::size_t pure = 0;
  for (int c = 0; c < k; ++c)
    pure += *std::max_element(overlap[static_cast<std::size_t>(c)].begin(),
                              overlap[static_cast<std::size_t>(c)].end());
  m.purity = static_cast<double>(pure) / static_cast<double>(predictions.size());

  // Macro F1 under the accuracy-maximizing assignment.
  double f1_sum = 0.0;
  for (int g = 0; g < k; ++g) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
      int mapped = m.assignment[static_cast<std::size_t>(predictions[i])];
      if (mapped == g && gold[i] == g) ++tp;
      if (mapped == g && gold[i] != g) ++fp;
      if (mapped != g && gold[i] == g) ++fn;
    }
    double precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    double recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    double f1 = precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
    f1_sum += f1;
  }
  m.macro_f1 = f1_sum / static_cast<double>(k);
  return m;
}

}  // namespace treecomment
