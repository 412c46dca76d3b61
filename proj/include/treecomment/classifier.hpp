// Softmax classification over code vectors: joint training of the encoder
// and the linear head, plus the best-assignment evaluation protocol
// (accuracy maximized over label permutations, purity over predicted
// clusters, macro F1 under the chosen permutation).

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "treecomment/encoder.hpp"
#include "treecomment/numeric.hpp"
#include "treecomment/tree.hpp"

namespace treecomment {

struct ClassifierHead {
  Mat Ws;  // k x d
  Vec bs;  // k

  void allocate(int k, int d);
  std::vector<NamedTensor> tensors();
  int num_classes() const { return Ws.rows; }
};

// softmax(Ws * v + bs)
Vec predict(const ClassifierHead& head, const Vec& v);

struct LabeledExample {
  ParseNode tree;
  int label = 0;
};

// Encoder variant for classification runs: the tree models or the
// bag-of-words baselines.
struct ClassifyConfig {
  std::string variant = "avg";  // sum | avg | les | lea
  int dim = 64;
  int epochs = 200;
  double lr = 0.05;
  std::uint64_t seed = 1;
};

bool is_bag_variant(const std::string& variant);

struct ClassifierTrainResult {
  CodeRnnParams encoder;
  ClassifierHead head;
  std::vector<double> loss_curve;  // per-epoch mean cross-entropy
};

// Per-example AdaGrad over the joint (encoder, head) parameter set; corpus
// order reshuffled each epoch from the seed. Throws UserError when a class
// in [0, k) has no examples.
ClassifierTrainResult train_classifier(const std::vector<LabeledExample>& data, int k,
                                       const ClassifyConfig& cfg);

// Encoder output for one tree under the configured variant.
Vec encode_for_classify(const ParseNode& tree, const CodeRnnParams& encoder,
                        const std::string& variant);

struct ClassMetrics {
  double purity = 0.0;
  double macro_f1 = 0.0;
  double accuracy = 0.0;
  std::vector<int> assignment;  // predicted label -> gold label
};

// accuracy = max over assignments of mean[assign(pred) == gold]; for k <= 8
// every permutation is tried (first maximizer in lexicographic order wins),
// beyond that a greedy matching is used and a warning goes to stderr.
ClassMetrics evaluate_assignment(const std::vector<int>& predictions,
                                 const std::vector<int>& gold, int k);

}  // namespace treecomment
