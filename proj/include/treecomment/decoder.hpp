// Comment generation conditioned on a frozen code vector: a GRU cell with an
// extra choose gate that screens the code vector per step, and a plain
// recurrent baseline that injects the code vector as a bias term.
//
// Gated cell, per step (x = input word embedding, [.,.] = concat,
// * = elementwise):
//   z = sigmoid(Wz . [h_prev, x])          update gate
//   r = sigmoid(Wr . [h_prev, x])          reset gate
//   c = sigmoid(Wc . [h_prev, x])          choose gate over the code vector
//   h~ = tanh(W . [r*h_prev, c*vm, x])
//   h  = (1-z)*h_prev + z*h~
//   y  = softmax(Woh . h + bo)
// The gates carry no bias terms; only the output layer has one.
//
// Baseline cell:
//   bv = Whi . vm                          (constant across steps)
//   h  = tanh(Whx . x + Whh . h_prev + bh + bv)
//   y  = softmax(Woh . h + bo)
//
// Sequences are id lists over the comment vocabulary, bracketed by the
// START (id 0) and END (id 1) sentinels; UNK is id 2. Training is teacher
// forcing with full-sequence backpropagation through time; the code vector
// and the encoder behind it stay untouched.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "treecomment/encoder.hpp"
#include "treecomment/numeric.hpp"

namespace treecomment {

inline constexpr int kStartId = 0;
inline constexpr int kEndId = 1;
inline constexpr int kUnkId = 2;
inline constexpr const char* kStartWord = "START";
inline constexpr const char* kEndWord = "END";
inline constexpr const char* kUnkWord = "UNK";

// Comment vocabulary with the three sentinels at ids 0/1/2.
Vocab make_comment_vocab();

struct CodeGruParams {
  int hidden = 64;    // H
  int embed = 64;     // E
  int code_dim = 64;  // d, the code vector dimension
  Mat Wz;             // H x (H+E)
  Mat Wr;             // H x (H+E)
  Mat Wc;             // d x (H+E)
  Mat W;              // H x (H+d+E)
  Mat Woh;            // |V| x H
  Vec bo;             // |V|
  Mat emb;            // |V| x E
  Vec h0;             // initial state; kept at zero (not trained)
  Vocab vocab = make_comment_vocab();

  void allocate();
  std::vector<NamedTensor> tensors();
};

struct BasicRnnParams {
  int hidden = 64;
  int embed = 64;
  int code_dim = 64;
  Mat Whi;  // H x d
  Mat Whx;  // H x E
  Mat Whh;  // H x H
  Vec bh;   // H
  Mat Woh;  // |V| x H
  Vec bo;   // |V|
  Mat emb;  // |V| x E
  Vec h0;   // initial state; kept at zero (not trained)
  Vocab vocab = make_comment_vocab();

  void allocate();
  std::vector<NamedTensor> tensors();
};

using DecoderParams = std::variant<CodeGruParams, BasicRnnParams>;

DecoderParams make_decoder(const std::string& cell, const Vocab& vocab, int hidden, int embed,
                           int code_dim);
std::string decoder_cell_name(const DecoderParams& p);  // "gru" | "basic"
const Vocab& decoder_vocab(const DecoderParams& p);
int decoder_hidden(const DecoderParams& p);
int decoder_embed(const DecoderParams& p);
int decoder_code_dim(const DecoderParams& p);
std::vector<NamedTensor> decoder_tensors(DecoderParams& p);

struct StepOut {
  Vec h;  // next hidden state
  Vec y;  // word distribution
};

StepOut code_gru_step(const CodeGruParams& p, const Vec& h_prev, int word_id, const Vec& vm);
StepOut basic_rnn_step(const BasicRnnParams& p, const Vec& h_prev, int word_id, const Vec& vm);
StepOut decoder_step(const DecoderParams& p, const Vec& h_prev, int word_id, const Vec& vm);

// Teacher-forced loss of one (code vector, id sequence) pair: the sequence
// must be START ... END; the loss is the sum over steps of the
// cross-entropy of the next gold id.
double sequence_loss(const DecoderParams& p, const Vec& vm, const std::vector<int>& ids);

// Forward + full backward; gradients accumulate into `grads`, a zeroed
// same-shape decoder. Returns the loss.
double sequence_backward(const DecoderParams& p, const Vec& vm, const std::vector<int>& ids,
                         DecoderParams& grads);

// Greedy decoding: argmax at every step (smallest index wins ties; START is
// never emitted), stopping at END or after max_len words (END then appended).
// Returns ids including both sentinels.
std::vector<int> greedy_decode(const DecoderParams& p, const Vec& vm, int max_len = 30);

struct BeamConfig {
  int beam_size = 1;
  double alpha = 0.0;  // length-penalty weight
  int max_len = 30;
};

// (5+len)^alpha / 6^alpha
double length_penalty(int len, double alpha);

// Length-penalized beam search: hypotheses are ranked by
// log P / length_penalty(generated length, alpha), where the generated
// length counts END. Finished hypotheses win over unfinished ones; with
// beam_size 1 and alpha 0 this reproduces greedy_decode token for token.
std::vector<int> beam_decode(const DecoderParams& p, const Vec& vm, const BeamConfig& cfg);

// One training/validation pair after preprocessing: the frozen code vector
// and the sentinel-bracketed comment ids.
struct GenPair {
  Vec vm;
  std::vector<int> ids;
};

struct TrainGenConfig {
  std::string cell = "gru";  // gru | basic
  int hidden = 64;
  int embed = 64;
  int epochs = 800;
  double lr = 0.05;
  std::uint64_t seed = 1;
};

struct GenTrainResult {
  DecoderParams decoder;
  std::vector<double> loss_curve;  // per-epoch mean pair loss
};

// Teacher-forced training with per-pair AdaGrad updates, order reshuffled
// each epoch from the seed. The vocabulary is fixed by the caller.
GenTrainResult train_generator(const std::vector<GenPair>& pairs, const Vocab& vocab,
                               const TrainGenConfig& cfg);

// Exhaustive 10 x 11 grid search (beam 1..10, alpha 0.0..1.0 by 0.1)
// maximizing mean bigram-overlap F1 against the validation golds; ties break
// to the smaller beam, then the smaller alpha. One line per configuration
// goes to `log`.
BeamConfig tune_beam(const DecoderParams& p, const std::vector<GenPair>& validation, int max_len,
                     std::ostream& log);

}  // namespace treecomment
