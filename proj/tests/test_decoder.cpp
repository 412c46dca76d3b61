#include <cmath>
#include <cstring>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "treecomment/decoder.hpp"
#include "treecomment/error.hpp"
#include "treecomment/numeric.hpp"

using namespace treecomment;
using doctest::Contains;

namespace {

bool same_bits(const Vec& a, const Vec& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

Vocab vocab_with(const std::vector<std::string>& words) {
  Vocab v = make_comment_vocab();
  for (const auto& w : words) v.add(w);
  return v;
}

void randomize(DecoderParams& p, std::uint64_t seed, double scale) {
  Rng rng(seed);
  auto tensors = decoder_tensors(p);
  init_uniform(tensors, rng, scale);
}

Vec random_vec(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Vec v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

// Replays the exact incremental log-probability sum the beam keeps for a
// full START ... END sequence.
double chain_logp(const DecoderParams& p, const Vec& vm, const std::vector<int>& ids) {
  Vec h(static_cast<std::size_t>(decoder_hidden(p)), 0.0);
  double logp = 0.0;
  for (std::size_t t = 0; t + 1 < ids.size(); ++t) {
    StepOut out = decoder_step(p, h, ids[t], vm);
    logp = logp + std::log(out.y[static_cast<std::size_t>(ids[t + 1])]);
    h = std::move(out.h);
  }
  return logp;
}

void enumerate_interiors(const DecoderParams& p, const Vec& vm, double alpha, int max_len,
                         std::vector<int>& interior, std::vector<int>& best, double& best_score) {
  std::vector<int> ids{kStartId};
  ids.insert(ids.end(), interior.begin(), interior.end());
  ids.push_back(kEndId);
  const int gen_len = static_cast<int>(ids.size()) - 1;
  const double score = chain_logp(p, vm, ids) / length_penalty(gen_len, alpha);
  if (best.empty() || score > best_score) {
    best = ids;
    best_score = score;
  }
  if (static_cast<int>(interior.size()) + 1 >= max_len) return;
  for (int w = 2; w < decoder_vocab(p).size(); ++w) {
    interior.push_back(w);
    enumerate_interiors(p, vm, alpha, max_len, interior, best, best_score);
    interior.pop_back();
  }
}

// Scores every END-terminated sequence reachable within max_len generated
// words and returns the best one; ground truth for an uncut beam.
std::vector<int> exhaustive_best(const DecoderParams& p, const Vec& vm, double alpha,
                                 int max_len) {
  std::vector<int> interior, best;
  double best_score = 0.0;
  enumerate_interiors(p, vm, alpha, max_len, interior, best, best_score);
  return best;
}

GenPair overfit_pair() {
  // gold: START returns the sum END, conditioned on a fixed code vector
  return {{0.4, -0.2, 0.1, 0.3}, {kStartId, 3, 4, 5, kEndId}};
}

GenTrainResult overfit_generator(const std::string& cell) {
  TrainGenConfig cfg;
  cfg.cell = cell;
  cfg.hidden = 12;
  cfg.embed = 8;
  cfg.epochs = 300;
  cfg.seed = 5;
  return train_generator({overfit_pair()}, vocab_with({"returns", "the", "sum"}), cfg);
}

}  // namespace

TEST_CASE("comment vocabulary starts with the three sentinels") {
  Vocab v = make_comment_vocab();
  CHECK(v.items == std::vector<std::string>{kStartWord, kEndWord, kUnkWord});
  CHECK(v.unk_id == kUnkId);
  CHECK(v.add("dot") == 3);
}

TEST_CASE("construction sizes every tensor and keeps the initial state out of training") {
  Vocab v = vocab_with({"a", "b"});  // |V| = 5

  DecoderParams gru = make_decoder("gru", v, 4, 3, 2);
  CHECK(decoder_cell_name(gru) == "gru");
  CHECK(decoder_hidden(gru) == 4);
  CHECK(decoder_embed(gru) == 3);
  CHECK(decoder_code_dim(gru) == 2);
  CHECK(decoder_vocab(gru).size() == 5);
  {
    auto& p = std::get<CodeGruParams>(gru);
    CHECK(p.Wz.rows == 4);
    CHECK(p.Wz.cols == 7);
    CHECK(p.Wr.rows == 4);
    CHECK(p.Wc.rows == 2);
    CHECK(p.Wc.cols == 7);
    CHECK(p.W.rows == 4);
    CHECK(p.W.cols == 9);
    CHECK(p.Woh.rows == 5);
    CHECK(p.Woh.cols == 4);
    CHECK(p.bo.size() == 5);
    CHECK(p.emb.rows == 5);
    CHECK(p.emb.cols == 3);
    CHECK(p.h0 == Vec(4, 0.0));
  }
  std::vector<std::string> gru_names;
  for (const auto& t : decoder_tensors(gru)) gru_names.push_back(t.name);
  CHECK(gru_names == std::vector<std::string>{"Wz", "Wr", "Wc", "W", "Woh", "bo", "emb"});

  DecoderParams basic = make_decoder("basic", v, 4, 3, 2);
  CHECK(decoder_cell_name(basic) == "basic");
  {
    auto& p = std::get<BasicRnnParams>(basic);
    CHECK(p.Whi.rows == 4);
    CHECK(p.Whi.cols == 2);
    CHECK(p.Whx.rows == 4);
    CHECK(p.Whx.cols == 3);
    CHECK(p.Whh.rows == 4);
    CHECK(p.Whh.cols == 4);
    CHECK(p.bh == Vec(4, 0.0));
    CHECK(p.h0 == Vec(4, 0.0));
  }
  std::vector<std::string> basic_names;
  for (const auto& t : decoder_tensors(basic)) basic_names.push_back(t.name);
  CHECK(basic_names == std::vector<std::string>{"Whi", "Whx", "Whh", "bh", "Woh", "bo", "emb"});

  CHECK_THROWS_WITH_AS(make_decoder("lstm", v, 4, 3, 2), Contains("unknown decoder cell"),
                       UserError);
}

TEST_CASE("gated cell with all-zero weights halves the previous state") {
  // z = r = c = sigmoid(0) = 0.5, h~ = tanh(0) = 0, h = 0.5*h_prev, y uniform.
  DecoderParams p = make_decoder("gru", vocab_with({"w"}), 2, 2, 2);
  StepOut out = decoder_step(p, {1.0, -2.0}, 3, {0.7, -0.3});
  CHECK(out.h == Vec{0.5, -1.0});
  CHECK(out.y == Vec(4, 0.25));

  StepOut from_zero = decoder_step(p, {0.0, 0.0}, 3, {0.7, -0.3});
  CHECK(from_zero.h == Vec{0.0, 0.0});
}

TEST_CASE("forcing the update gate shut carries the state through unchanged") {
  DecoderParams dp = make_decoder("gru", vocab_with({"w"}), 3, 2, 2);
  randomize(dp, 21, 0.5);
  auto& p = std::get<CodeGruParams>(dp);
  // A huge negative pre-activation drives sigmoid to exactly 0; keep the
  // concatenated [h_prev, x] sum positive so every row saturates.
  std::fill(p.Wz.a.begin(), p.Wz.a.end(), -1e6);
  p.emb.at(3, 0) = 1.0;
  p.emb.at(3, 1) = 0.5;

  const Vec h_prev{0.25, -0.75, 2.0};
  StepOut out = code_gru_step(p, h_prev, 3, {0.1, 0.2});
  CHECK(same_bits(out.h, h_prev));
}

TEST_CASE("zero code vector disables the choose-gate contribution") {
  DecoderParams a = make_decoder("gru", vocab_with({"w"}), 3, 2, 2);
  randomize(a, 31, 0.5);
  DecoderParams b = a;
  std::get<CodeGruParams>(b).Wc.a.assign(std::get<CodeGruParams>(b).Wc.a.size(), 7.5);

  const Vec h_prev{0.3, -0.1, 0.4};
  StepOut ya = decoder_step(a, h_prev, 3, {0.0, 0.0});
  StepOut yb = decoder_step(b, h_prev, 3, {0.0, 0.0});
  CHECK(same_bits(ya.h, yb.h));
  CHECK(same_bits(ya.y, yb.y));

  // sanity: with a nonzero code vector the same change is visible
  StepOut za = decoder_step(a, h_prev, 3, {0.3, -0.4});
  StepOut zb = decoder_step(b, h_prev, 3, {0.3, -0.4});
  CHECK_FALSE(same_bits(za.h, zb.h));
}

TEST_CASE("baseline cell: zero weights flatten the state, the code bias feeds through") {
  DecoderParams dp = make_decoder("basic", vocab_with({"w"}), 2, 2, 2);
  StepOut out = decoder_step(dp, {0.9, -0.4}, 3, {0.7, -0.3});
  CHECK(out.h == Vec{0.0, 0.0});  // tanh(0)
  CHECK(out.y == Vec(4, 0.25));

  auto& p = std::get<BasicRnnParams>(dp);
  p.Whi.at(0, 0) = 1.0;
  p.Whi.at(1, 1) = 1.0;
  StepOut biased = decoder_step(dp, {0.9, -0.4}, 3, {0.5, -0.25});
  CHECK(biased.h == Vec{std::tanh(0.5), std::tanh(-0.25)});
  // zero code vector reduces it to an unconditioned step
  StepOut plain = decoder_step(dp, {0.9, -0.4}, 3, {0.0, 0.0});
  CHECK(plain.h == Vec{0.0, 0.0});
}

TEST_CASE("hidden states stay inside the activation envelope and outputs normalize") {
  for (const char* cell : {"gru", "basic"}) {
    CAPTURE(cell);
    DecoderParams p = make_decoder(cell, vocab_with({"a", "b", "c"}), 4, 3, 3);
    randomize(p, 47, 1.0);
    const Vec vm = random_vec(3, 48);
    Rng rng(49);
    Vec h(4, 0.0);
    for (int step = 0; step < 200; ++step) {
      StepOut out = decoder_step(p, h, rng.uniform_int(0, 5), vm);
      for (double hi : out.h) CHECK(std::abs(hi) < 1.0);
      double sum = 0.0;
      for (double yi : out.y) {
        CHECK(yi > 0.0);
        sum += yi;
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
      h = std::move(out.h);
    }
  }
}

TEST_CASE("sequence loss under uniform predictions counts steps times log vocabulary size") {
  for (const char* cell : {"gru", "basic"}) {
    CAPTURE(cell);
    DecoderParams p = make_decoder(cell, vocab_with({"w"}), 3, 2, 2);  // zero weights
    const Vec vm{0.4, -0.1};
    CHECK(sequence_loss(p, vm, {kStartId, 3, kEndId}) == -2.0 * std::log(0.25));
    CHECK(sequence_loss(p, vm, {kStartId, kEndId}) == -std::log(0.25));
  }
}

TEST_CASE("malformed sequences and inputs are internal errors") {
  DecoderParams p = make_decoder("gru", vocab_with({"w"}), 3, 2, 2);
  const Vec vm{0.0, 0.0};
  CHECK_THROWS_WITH_AS(sequence_loss(p, vm, {}), Contains("must be START ... END"),
                       InternalError);
  CHECK_THROWS_WITH_AS(sequence_loss(p, vm, {kStartId}), Contains("must be START ... END"),
                       InternalError);
  CHECK_THROWS_WITH_AS(sequence_loss(p, vm, {3, kEndId}), Contains("must be START ... END"),
                       InternalError);
  CHECK_THROWS_WITH_AS(sequence_loss(p, vm, {kStartId, 3}), Contains("must be START ... END"),
                       InternalError);
  CHECK_THROWS_WITH_AS(sequence_loss(p, vm, {kStartId, kEndId, kEndId}),
                       Contains("interior sentinel at position 1"), InternalError);
  CHECK_THROWS_WITH_AS(sequence_loss(p, vm, {kStartId, 3, kStartId, kEndId}),
                       Contains("interior sentinel at position 2"), InternalError);

  CHECK_THROWS_WITH_AS(decoder_step(p, Vec(3, 0.0), 9, vm), Contains("out of range"),
                       InternalError);
  CHECK_THROWS_WITH_AS(decoder_step(p, Vec(3, 0.0), -1, vm), Contains("out of range"),
                       InternalError);
  CHECK_THROWS_WITH_AS(decoder_step(p, Vec(3, 0.0), 3, Vec{1.0, 2.0, 3.0}),
                       Contains("code vector has dimension"), InternalError);
}

TEST_CASE("length penalty reference values") {
  CHECK(length_penalty(1, 0.0) == 1.0);
  CHECK(length_penalty(9, 0.0) == 1.0);
  CHECK(length_penalty(1, 1.0) == 1.0);  // (5+1)/6
  CHECK(length_penalty(7, 1.0) == 2.0);  // 12/6
  CHECK(length_penalty(0, 1.0) == doctest::Approx(5.0 / 6.0));
  CHECK(length_penalty(3, 0.5) == doctest::Approx(std::sqrt(8.0 / 6.0)));
  CHECK(length_penalty(8, 0.4) > length_penalty(2, 0.4));
}

TEST_CASE("greedy decoding follows the argmax chain and caps with an appended END") {
  DecoderParams dp = make_decoder("gru", vocab_with({"w"}), 2, 2, 2);
  const Vec vm{0.0, 0.0};

  // uniform ties resolve to the smallest non-START id, which is END
  CHECK(greedy_decode(dp, vm, 5) == std::vector<int>{kStartId, kEndId});

  auto& p = std::get<CodeGruParams>(dp);
  p.bo = {0.0, 5.0, 0.0, 0.0};  // peak at END
  CHECK(greedy_decode(dp, vm, 5) == std::vector<int>{kStartId, kEndId});

  p.bo = {0.0, -50.0, 0.0, 7.0};  // END never wins: run to the cap
  CHECK(greedy_decode(dp, vm, 4) == std::vector<int>{kStartId, 3, 3, 3, 3, kEndId});
  CHECK(greedy_decode(dp, vm, 0) == std::vector<int>{kStartId, kEndId});
}

TEST_CASE("beam search with unit beam and zero penalty reproduces greedy decoding") {
  for (const char* cell : {"gru", "basic"}) {
    for (int trial = 0; trial < 25; ++trial) {
      CAPTURE(cell);
      CAPTURE(trial);
      std::vector<std::string> extra;
      for (int w = 0; w < 1 + trial % 4; ++w) extra.push_back("w" + std::to_string(w));
      DecoderParams p = make_decoder(cell, vocab_with(extra), 2 + trial % 3, 2 + trial % 2, 2);
      randomize(p, 100 + static_cast<std::uint64_t>(trial), 0.9);
      const Vec vm = random_vec(2, 200 + static_cast<std::uint64_t>(trial));
      const int max_len = trial % 2 == 0 ? 7 : 2;

      std::vector<int> greedy = greedy_decode(p, vm, max_len);
      std::vector<int> beam = beam_decode(p, vm, {1, 0.0, max_len});
      CHECK(greedy == beam);

      // sentinel hygiene on every decode
      REQUIRE(greedy.size() >= 2);
      CHECK(greedy.front() == kStartId);
      CHECK(greedy.back() == kEndId);
      CHECK(greedy.size() <= static_cast<std::size_t>(max_len) + 2);
      for (std::size_t i = 1; i + 1 < greedy.size(); ++i) {
        CHECK(greedy[i] != kStartId);
        CHECK(greedy[i] != kEndId);
      }
    }
  }
}

TEST_CASE("beam search with an uncut beam matches exhaustive enumeration") {
  int trial = 0;
  for (const char* cell : {"gru", "basic"}) {
    for (double alpha : {0.0, 0.3, 1.0}) {
      for (std::uint64_t seed : {300u, 301u, 302u}) {
        CAPTURE(cell);
        CAPTURE(alpha);
        CAPTURE(seed);
        // |V| = 4: interiors range over {UNK, w0}
        DecoderParams p = make_decoder(cell, vocab_with({"w0"}), 3, 2, 2);
        randomize(p, seed, 0.8);
        const Vec vm = random_vec(2, seed + 1000);
        BeamConfig cfg{81, alpha, 3};
        CHECK(beam_decode(p, vm, cfg) == exhaustive_best(p, vm, alpha, 3));
        ++trial;
      }
    }
  }
  CHECK(trial == 18);

  // minimal vocabulary (UNK the only interior word) and a wider instance
  DecoderParams tiny = make_decoder("gru", make_comment_vocab(), 3, 2, 2);
  randomize(tiny, 400, 0.8);
  const Vec vm3 = random_vec(2, 401);
  CHECK(beam_decode(tiny, vm3, {27, 0.7, 3}) == exhaustive_best(tiny, vm3, 0.7, 3));

  DecoderParams wide = make_decoder("basic", vocab_with({"w0", "w1"}), 3, 2, 2);
  randomize(wide, 402, 0.8);
  const Vec vm5 = random_vec(2, 403);
  CHECK(beam_decode(wide, vm5, {25, 0.5, 2}) == exhaustive_best(wide, vm5, 0.5, 2));
}

TEST_CASE("beam search keeps a finished hypothesis over running to the cap") {
  DecoderParams dp = make_decoder("gru", vocab_with({"w"}), 2, 2, 2);
  auto& p = std::get<CodeGruParams>(dp);
  const Vec vm{0.0, 0.0};

  p.bo = {0.0, 9.0, -50.0, 0.0};  // END dominates immediately
  CHECK(beam_decode(dp, vm, {1, 0.0, 4}) == std::vector<int>{kStartId, kEndId});

  p.bo = {0.0, -50.0, 0.0, 9.0};  // END never survives the cut: cap then append
  CHECK(beam_decode(dp, vm, {1, 0.0, 2}) == std::vector<int>{kStartId, 3, 3, kEndId});

  CHECK_THROWS_WITH_AS(beam_decode(dp, vm, {0, 0.0, 4}), Contains("beam size must be >= 1"),
                       UserError);
}

TEST_CASE("single-pair overfitting reproduces the gold comment") {
  const GenPair gold = overfit_pair();
  for (const char* cell : {"gru", "basic"}) {
    CAPTURE(cell);
    GenTrainResult r = overfit_generator(cell);
    CHECK(r.loss_curve.size() == 300);
    for (double l : r.loss_curve) CHECK(std::isfinite(l));
    CHECK(r.loss_curve.back() < 0.05);
    CHECK(r.loss_curve.back() < r.loss_curve.front());
    CHECK(greedy_decode(r.decoder, gold.vm, 10) == gold.ids);
  }
}

TEST_CASE("generator training is bitwise deterministic in its seed") {
  GenTrainResult a = overfit_generator("gru");
  GenTrainResult b = overfit_generator("gru");
  CHECK(a.loss_curve == b.loss_curve);
  CHECK(same_bits(std::get<CodeGruParams>(a.decoder).Woh.a,
                  std::get<CodeGruParams>(b.decoder).Woh.a));
  CHECK(same_bits(std::get<CodeGruParams>(a.decoder).emb.a,
                  std::get<CodeGruParams>(b.decoder).emb.a));
  // the initial state is a constant, not a parameter
  CHECK(std::get<CodeGruParams>(a.decoder).h0 == Vec(12, 0.0));
}

TEST_CASE("generator training rejects degenerate inputs") {
  Vocab v = vocab_with({"w"});
  TrainGenConfig cfg;
  cfg.hidden = 4;
  cfg.embed = 4;
  cfg.epochs = 1;
  CHECK_THROWS_WITH_AS(train_generator({}, v, cfg), Contains("at least one pair"), UserError);
  CHECK_THROWS_WITH_AS(
      train_generator({{{0.1, 0.2}, {kStartId, 3, kEndId}}, {{0.1}, {kStartId, 3, kEndId}}}, v,
                      cfg),
      Contains("mixed dimension"), UserError);
  CHECK_THROWS_WITH_AS(train_generator({{{0.1, 0.2}, {kStartId, 3}}}, v, cfg),
                       Contains("must be START ... END"), InternalError);
}

TEST_CASE("grid tuning logs every configuration and ties break to the smallest settings") {
  GenTrainResult r = overfit_generator("gru");
  const GenPair gold = overfit_pair();

  std::ostringstream log;
  BeamConfig best = tune_beam(r.decoder, {gold}, 10, log);
  CHECK(best.beam_size == 1);
  CHECK(best.alpha == 0.0);
  CHECK(best.max_len == 10);

  std::vector<std::string> lines;
  std::string line;
  std::istringstream in(log.str());
  while (std::getline(in, line)) lines.push_back(line);
  REQUIRE(lines.size() == 110);
  CHECK(lines.front() == "beam=1 alpha=0.0 mean_f1=1.000000");
  CHECK(lines[11] == "beam=2 alpha=0.0 mean_f1=1.000000");
  CHECK(lines.back() == "beam=10 alpha=1.0 mean_f1=1.000000");

  // the grid evaluation parallelizes but the log and result are deterministic
  std::ostringstream log2;
  BeamConfig again = tune_beam(r.decoder, {gold}, 10, log2);
  CHECK(log2.str() == log.str());
  CHECK(again.beam_size == best.beam_size);
  CHECK(again.alpha == best.alpha);

  CHECK_THROWS_WITH_AS(tune_beam(r.decoder, {}, 10, log), Contains("nonempty validation"),
                       UserError);
}
