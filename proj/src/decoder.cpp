#include "treecomment/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>

#include "treecomment/error.hpp"
#include "treecomment/rouge.hpp"

namespace treecomment {

Vocab make_comment_vocab() {
  Vocab v{kStartWord};
  v.add(kEndWord);
  v.add(kUnkWord);
  v.unk_id = kUnkId;
  return v;
}

void CodeGruParams::allocate() {
  const int V = vocab.size();
  Wz = Mat(hidden, hidden + embed);
  Wr = Mat(hidden, hidden + embed);
  Wc = Mat(code_dim, hidden + embed);
  W = Mat(hidden, hidden + code_dim + embed);
  Woh = Mat(V, hidden);
  bo.assign(static_cast<std::size_t>(V), 0.0);
  emb = Mat(V, embed);
  h0.assign(static_cast<std::size_t>(hidden), 0.0);
}

std::vector<NamedTensor> CodeGruParams::tensors() {
  return {{"Wz", &Wz.a}, {"Wr", &Wr.a}, {"Wc", &Wc.a}, {"W", &W.a},
          {"Woh", &Woh.a}, {"bo", &bo},  {"emb", &emb.a}};
}

void BasicRnnParams::allocate() {
  const int V = vocab.size();
  Whi = Mat(hidden, code_dim);
  Whx = Mat(hidden, embed);
  Whh = Mat(hidden, hidden);
  bh.assign(static_cast<std::size_t>(hidden), 0.0);
  Woh = Mat(V, hidden);
  bo.assign(static_cast<std::size_t>(V), 0.0);
  emb = Mat(V, embed);
  h0.assign(static_cast<std::size_t>(hidden), 0.0);
}

std::vector<NamedTensor> BasicRnnParams::tensors() {
  return {{"Whi", &Whi.a}, {"Whx", &Whx.a}, {"Whh", &Whh.a}, {"bh", &bh},
          {"Woh", &Woh.a}, {"bo", &bo},     {"emb", &emb.a}};
}

DecoderParams make_decoder(const std::string& cell, const Vocab& vocab, int hidden, int embed,
                           int code_dim) {
  if (cell == "gru") {
    CodeGruParams p;
    p.hidden = hidden;
    p.embed = embed;
    p.code_dim = code_dim;
    p.vocab = vocab;
    p.allocate();
    return p;
  }
  if (cell == "basic") {
    BasicRnnParams p;
    p.hidden = hidden;
    p.embed = embed;
    p.code_dim = code_dim;
    p.vocab = vocab;
    p.allocate();
    return p;
  }
  throw UserError("unknown decoder cell '" + cell + "' (expected gru or basic)");
}

std::string decoder_cell_name(const DecoderParams& p) {
  return std::holds_alternative<CodeGruParams>(p) ? "gru" : "basic";
}

const Vocab& decoder_vocab(const DecoderParams& p) {
  return std::visit([](const auto& q) -> const Vocab& { return q.vocab; }, p);
}

int decoder_hidden(const DecoderParams& p) {
  return std::visit([](const auto& q) { return q.hidden; }, p);
}

int decoder_embed(const DecoderParams& p) {
  return std::visit([](const auto& q) { return q.embed; }, p);
}

int decoder_code_dim(const DecoderParams& p) {
  return std::visit([](const auto& q) { return q.code_dim; }, p);
}

std::vector<NamedTensor> decoder_tensors(DecoderParams& p) {
  return std::visit([](auto& q) { return q.tensors(); }, p);
}

namespace {

Vec concat2(std::span<const double> a, std::span<const double> b) {
  Vec out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

Vec concat3(std::span<const double> a, std::span<const double> b, std::span<const double> c) {
  Vec out;
  out.reserve(a.size() + b.size() + c.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  out.insert(out.end(), c.begin(), c.end());
  return out;
}

void check_word_id(int word_id, int vocab_size) {
  if (word_id < 0 || word_id >= vocab_size)
    throw InternalError("decoder: word id " + std::to_string(word_id) +
                        " out of range for vocabulary of " + std::to_string(vocab_size));
}

// Full per-step cache for the gated cell, enough to run the step backward.
struct GruStepCache {
  int x_id;
  Vec hx;      // [h_prev, x]
  Vec z, r, c;
  Vec u;       // [r*h_prev, c*vm, x]
  Vec htilde;
  Vec h;
  Vec y;
};

GruStepCache gru_forward_step(const CodeGruParams& p, const Vec& h_prev, int word_id,
                              const Vec& vm) {
  check_word_id(word_id, p.vocab.size());
  if (static_cast<int>(vm.size()) != p.code_dim)
    throw InternalError("decoder: code vector has dimension " + std::to_string(vm.size()) +
                        ", expected " + std::to_string(p.code_dim));
  GruStepCache s;
  s.x_id = word_id;
  auto x = p.emb.row(word_id);
  s.hx = concat2(h_prev, x);
  s.z = sigmoid(matvec(p.Wz, s.hx));
  s.r = sigmoid(matvec(p.Wr, s.hx));
  s.c = sigmoid(matvec(p.Wc, s.hx));
  Vec rh(static_cast<std::size_t>(p.hidden));
  for (int i = 0; i < p.hidden; ++i) rh[i] = s.r[i] * h_prev[i];
  Vec cv(static_cast<std::size_t>(p.code_dim));
  for (int i = 0; i < p.code_dim; ++i) cv[i] = s.c[i] * vm[i];
  s.u = concat3(rh, cv, x);
  s.htilde = tanh_vec(matvec(p.W, s.u));
  s.h.assign(static_cast<std::size_t>(p.hidden), 0.0);
  for (int i = 0; i < p.hidden; ++i)
    s.h[i] = (1.0 - s.z[i]) * h_prev[i] + s.z[i] * s.htilde[i];
  Vec logits = matvec(p.Woh, s.h);
  for (std::size_t i = 0; i < logits.size(); ++i) logits[i] += p.bo[i];
  s.y = softmax(logits);
  return s;
}

struct BasicStepCache {
  int x_id;
  Vec h;
  Vec y;
};

BasicStepCache basic_forward_step(const BasicRnnParams& p, const Vec& h_prev, int word_id,
                                  const Vec& bv) {
  check_word_id(word_id, p.vocab.size());
  BasicStepCache s;
  s.x_id = word_id;
  Vec x(p.emb.row(word_id).begin(), p.emb.row(word_id).end());
  Vec pre = matvec(p.Whx, x);
  Vec hh = matvec(p.Whh, h_prev);
  for (int i = 0; i < p.hidden; ++i) pre[i] += hh[i] + p.bh[i] + bv[i];
  s.h = tanh_vec(pre);
  Vec logits = matvec(p.Woh, s.h);
  for (std::size_t i = 0; i < logits.size(); ++i) logits[i] += p.bo[i];
  s.y = softmax(logits);
  return s;
}

Vec basic_bias(const BasicRnnParams& p, const Vec& vm) {
  if (static_cast<int>(vm.size()) != p.code_dim)
    throw InternalError("decoder: code vector has dimension " + std::to_string(vm.size()) +
                        ", expected " + std::to_string(p.code_dim));
  return matvec(p.Whi, vm);
}

void check_sequence(const std::vector<int>& ids) {
  if (ids.size() < 2 || ids.front() != kStartId || ids.back() != kEndId)
    throw InternalError("decoder: sequence must be START ... END");
  for (std::size_t i = 1; i + 1 < ids.size(); ++i)
    if (ids[i] == kStartId || ids[i] == kEndId)
      throw InternalError("decoder: interior sentinel at position " + std::to_string(i));
}

double gru_sequence(const CodeGruParams& p, const Vec& vm, const std::vector<int>& ids,
                    CodeGruParams* grads) {
  check_sequence(ids);
  const std::size_t T = ids.size() - 1;  // steps: input ids[t], target ids[t+1]
  Vec h0 = p.h0;
  if (h0.empty()) h0.assign(static_cast<std::size_t>(p.hidden), 0.0);
  std::vector<GruStepCache> steps;
  steps.reserve(T);
  double loss = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const Vec& h_prev = t == 0 ? h0 : steps[t - 1].h;
    steps.push_back(gru_forward_step(p, h_prev, ids[t], vm));
    loss += cross_entropy(steps[t].y, ids[t + 1]);
  }
  if (!grads) return loss;

  CodeGruParams& g = *grads;
  Vec dh_next(static_cast<std::size_t>(p.hidden), 0.0);
  for (std::size_t t = T; t-- > 0;) {
    const GruStepCache& s = steps[t];
    const Vec& h_prev = t == 0 ? h0 : steps[t - 1].h;

    // Output layer: d loss / d logits = y - onehot(target).
    Vec dlogits = s.y;
    dlogits[static_cast<std::size_t>(ids[t + 1])] -= 1.0;
    add_outer(g.Woh, dlogits, s.h);
    axpy(1.0, dlogits, g.bo);
    Vec dh = matvec_t(p.Woh, dlogits);
    axpy(1.0, dh_next, dh);

    Vec dz(static_cast<std::size_t>(p.hidden)), dht(static_cast<std::size_t>(p.hidden)),
        dh_prev(static_cast<std::size_t>(p.hidden));
    for (int i = 0; i < p.hidden; ++i) {
      dz[i] = dh[i] * (s.htilde[i] - h_prev[i]);
      dht[i] = dh[i] * s.z[i];
      dh_prev[i] = dh[i] * (1.0 - s.z[i]);
    }

    Vec da(static_cast<std::size_t>(p.hidden));
    for (int i = 0; i < p.hidden; ++i) da[i] = dht[i] * (1.0 - s.htilde[i] * s.htilde[i]);
    add_outer(g.W, da, s.u);
    Vec du = matvec_t(p.W, da);

    Vec dr(static_cast<std::size_t>(p.hidden)), dc(static_cast<std::size_t>(p.code_dim));
    for (int i = 0; i < p.hidden; ++i) {
      dr[i] = du[i] * h_prev[i];
      dh_prev[i] += du[i] * s.r[i];
    }
    for (int i = 0; i < p.code_dim; ++i) dc[i] = du[static_cast<std::size_t>(p.hidden + i)] * vm[i];
    Vec dx(p.embed, 0.0);
    for (int i = 0; i < p.embed; ++i) dx[i] = du[static_cast<std::size_t>(p.hidden + p.code_dim + i)];

    Vec dhx(static_cast<std::size_t>(p.hidden + p.embed), 0.0);
    auto gate_back = [&](const Vec& gate, const Vec& dgate, const Mat& Wg, Mat& gWg) {
      Vec dpre(gate.size());
      for (std::size_t i = 0; i < gate.size(); ++i)
        dpre[i] = dgate[i] * gate[i] * (1.0 - gate[i]);
      add_outer(gWg, dpre, s.hx);
      Vec back = matvec_t(Wg, dpre);
      axpy(1.0, back, dhx);
    };
    gate_back(s.z, dz, p.Wz, g.Wz);
    gate_back(s.r, dr, p.Wr, g.Wr);
    gate_back(s.c, dc, p.Wc, g.Wc);

    for (int i = 0; i < p.hidden; ++i) dh_prev[i] += dhx[i];
    for (int i = 0; i < p.embed; ++i) dx[i] += dhx[static_cast<std::size_t>(p.hidden + i)];
    axpy(1.0, dx, g.emb.row(s.x_id));

    dh_next = std::move(dh_prev);
  }
  return loss;
}

double basic_sequence(const BasicRnnParams& p, const Vec& vm, const std::vector<int>& ids,
                      BasicRnnParams* grads) {
  check_sequence(ids);
  const std::size_t T = ids.size() - 1;
  Vec h0 = p.h0;
  if (h0.empty()) h0.assign(static_cast<std::size_t>(p.hidden), 0.0);
  Vec bv = basic_bias(p, vm);
  std::vector<BasicStepCache> steps;
  steps.reserve(T);
  double loss = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const Vec& h_prev = t == 0 ? h0 : steps[t - 1].h;
    steps.push_back(basic_forward_step(p, h_prev, ids[t], bv));
    loss += cross_entropy(steps[t].y, ids[t + 1]);
  }
  if (!grads) return loss;

  BasicRnnParams& g = *grads;
  Vec dh_next(static_cast<std::size_t>(p.hidden), 0.0);
  Vec dbv(static_cast<std::size_t>(p.hidden), 0.0);
  for (std::size_t t = T; t-- > 0;) {
    const BasicStepCache& s = steps[t];
    const Vec& h_prev = t == 0 ? h0 : steps[t - 1].h;

    Vec dlogits = s.y;
    dlogits[static_cast<std::size_t>(ids[t + 1])] -= 1.0;
    add_outer(g.Woh, dlogits, s.h);
    axpy(1.0, dlogits, g.bo);
    Vec dh = matvec_t(p.Woh, dlogits);
    axpy(1.0, dh_next, dh);

    Vec dpre(static_cast<std::size_t>(p.hidden));
    for (int i = 0; i < p.hidden; ++i) dpre[i] = dh[i] * (1.0 - s.h[i] * s.h[i]);

    Vec x(p.emb.row(s.x_id).begin(), p.emb.row(s.x_id).end());
    add_outer(g.Whx, dpre, x);
    Vec dx = matvec_t(p.Whx, dpre);
    axpy(1.0, dx, g.emb.row(s.x_id));
    add_outer(g.Whh, dpre, h_prev);
    dh_next = matvec_t(p.Whh, dpre);
    axpy(1.0, dpre, g.bh);
    axpy(1.0, dpre, dbv);
  }
  add_outer(g.Whi, dbv, vm);
  return loss;
}

}  // namespace

StepOut code_gru_step(const CodeGruParams& p, const Vec& h_prev, int word_id, const Vec& vm) {
  GruStepCache s = gru_forward_step(p, h_prev, word_id, vm);
  return {std::move(s.h), std::move(s.y)};
}

StepOut basic_rnn_step(const BasicRnnParams& p, const Vec& h_prev, int word_id, const Vec& vm) {
  BasicStepCache s = basic_forward_step(p, h_prev, word_id, basic_bias(p, vm));
  return {std::move(s.h), std::move(s.y)};
}

StepOut decoder_step(const DecoderParams& p, const Vec& h_prev, int word_id, const Vec& vm) {
  if (const auto* gru = std::get_if<CodeGruParams>(&p))
    return code_gru_step(*gru, h_prev, word_id, vm);
  return basic_rnn_step(std::get<BasicRnnParams>(p), h_prev, word_id, vm);
}

double sequence_loss(const DecoderParams& p, const Vec& vm, const std::vector<int>& ids) {
  if (const auto* gru = std::get_if<CodeGruParams>(&p)) return gru_sequence(*gru, vm, ids, nullptr);
  return basic_sequence(std::get<BasicRnnParams>(p), vm, ids, nullptr);
}

double sequence_backward(const DecoderParams& p, const Vec& vm, const std::vector<int>& ids,
                         DecoderParams& grads) {
  if (const auto* gru = std::get_if<CodeGruParams>(&p))
    return gru_sequence(*gru, vm, ids, &std::get<CodeGruParams>(grads));
  return basic_sequence(std::get<BasicRnnParams>(p), vm, ids, &std::get<BasicRnnParams>(grads));
}

static Vec decoder_h0(const DecoderParams& p) {
  if (const auto* gru = std::get_if<CodeGruParams>(&p))
    if (!gru->h0.empty()) return gru->h0;
  if (const auto* basic = std::get_if<BasicRnnParams>(&p))
    if (!basic->h0.empty()) return basic->h0;
  return Vec(static_cast<std::size_t>(decoder_hidden(p)), 0.0);
}

std::vector<int> greedy_decode(const DecoderParams& p, const Vec& vm, int max_len) {
  std::vector<int> ids{kStartId};
  Vec h = decoder_h0(p);
  for (int step = 0; step < max_len; ++step) {
    StepOut out = decoder_step(p, h, ids.back(), vm);
    int best = -1;
    for (int w = 0; w < static_cast<int>(out.y.size()); ++w) {
      if (w == kStartId) continue;
      if (best < 0 || out.y[static_cast<std::size_t>(w)] > out.y[static_cast<std::size_t>(best)])
        best = w;
    }
    ids.push_back(best);
    if (best == kEndId) return ids;
    h = std::move(out.h);
  }
  ids.push_back(kEndId);
  return ids;
}

double length_penalty(int len, double alpha) {
  return std::pow(5.0 + static_cast<double>(len), alpha) / std::pow(6.0, alpha);
}

std::vector<int> beam_decode(const DecoderParams& p, const Vec& vm, const BeamConfig& cfg) {
  if (cfg.beam_size < 1) throw UserError("beam size must be >= 1");
  struct Hyp {
    std::vector<int> ids;
    Vec h;
    double logp = 0.0;
    double score = 0.0;  // logp / length_penalty(generated length)
  };

  std::vector<Hyp> live;
  live.push_back({{kStartId}, decoder_h0(p), 0.0, 0.0});
  std::vector<Hyp> finished;

  for (int step = 0; step < cfg.max_len && !live.empty(); ++step) {
    std::vector<Hyp> pool;
    pool.reserve(live.size() * static_cast<std::size_t>(decoder_vocab(p).size()));
    for (const Hyp& hyp : live) {
      StepOut out = decoder_step(p, hyp.h, hyp.ids.back(), vm);
      const int V = static_cast<int>(out.y.size());
      for (int w = 0; w < V; ++w) {
        if (w == kStartId) continue;
        Hyp next;
        next.ids = hyp.ids;
        next.ids.push_back(w);
        next.logp = hyp.logp + std::log(out.y[static_cast<std::size_t>(w)]);
        const int gen_len = static_cast<int>(next.ids.size()) - 1;  // words after START
        next.score = next.logp / length_penalty(gen_len, cfg.alpha);
        if (w != kEndId) next.h = out.h;
        pool.push_back(std::move(next));
      }
    }
    // END competes for a slot like any other word; only survivors of the cut
    // are retired. Stable sort keeps generation order among equal scores; the
    // two together make beam_size=1, alpha=0 reproduce greedy decoding exactly.
    std::stable_sort(pool.begin(), pool.end(),
                     [](const Hyp& a, const Hyp& b) { return a.score > b.score; });
    if (static_cast<int>(pool.size()) > cfg.beam_size) pool.resize(static_cast<std::size_t>(cfg.beam_size));
    live.clear();
    for (Hyp& hyp : pool) {
      if (hyp.ids.back() == kEndId)
        finished.push_back(std::move(hyp));
      else
        live.push_back(std::move(hyp));
    }
  }

  const Hyp* best = nullptr;
  for (const Hyp& h : finished)
    if (!best || h.score > best->score) best = &h;
  if (best) return best->ids;
  for (const Hyp& h : live)
    if (!best || h.score > best->score) best = &h;
  if (!best) throw InternalError("beam search produced no hypotheses");
  std::vector<int> ids = best->ids;
  ids.push_back(kEndId);
  return ids;
}

GenTrainResult train_generator(const std::vector<GenPair>& pairs, const Vocab& vocab,
                               const TrainGenConfig& cfg) {
  if (pairs.empty()) throw UserError("generator training needs at least one pair");
  const int code_dim = static_cast<int>(pairs[0].vm.size());
  for (const auto& pr : pairs) {
    if (static_cast<int>(pr.vm.size()) != code_dim)
      throw UserError("generator training: code vectors of mixed dimension");
    check_sequence(pr.ids);
  }

  GenTrainResult result;
  result.decoder = make_decoder(cfg.cell, vocab, cfg.hidden, cfg.embed, code_dim);
  DecoderParams grads = make_decoder(cfg.cell, vocab, cfg.hidden, cfg.embed, code_dim);

  Rng rng(cfg.seed);
  auto params = decoder_tensors(result.decoder);
  auto grad_tensors = decoder_tensors(grads);
  init_uniform(params, rng);

  AdaGrad opt;
  opt.lr = cfg.lr;
  opt.init(params);

  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t idx : order) {
      for (auto& g : grad_tensors) std::fill(g.data->begin(), g.data->end(), 0.0);
      loss_sum += sequence_backward(result.decoder, pairs[idx].vm, pairs[idx].ids, grads);
      opt.step(params, grad_tensors);
    }
    result.loss_curve.push_back(loss_sum / static_cast<double>(pairs.size()));
  }
  return result;
}

namespace {

std::vector<std::string> ids_to_words(const std::vector<int>& ids, const Vocab& vocab) {
  std::vector<std::string> words;
  words.reserve(ids.size());
  for (int id : ids) {
    if (id == kStartId || id == kEndId) continue;
    words.push_back(vocab.items[static_cast<std::size_t>(id)]);
  }
  return words;
}

}  // namespace

BeamConfig tune_beam(const DecoderParams& p, const std::vector<GenPair>& validation, int max_len,
                     std::ostream& log) {
  if (validation.empty()) throw UserError("beam tuning needs a nonempty validation set");
  const Vocab& vocab = decoder_vocab(p);

  struct Slot {
    int beam;
    double alpha;
    double mean_f1;
  };
  constexpr int kBeams = 10, kAlphas = 11;
  std::vector<Slot> slots(static_cast<std::size_t>(kBeams * kAlphas));

#pragma omp parallel for schedule(dynamic) collapse(2)
  for (int b = 1; b <= kBeams; ++b) {
    for (int ai = 0; ai < kAlphas; ++ai) {
      BeamConfig cfg{b, static_cast<double>(ai) / 10.0, max_len};
      double f1_sum = 0.0;
      for (const GenPair& pair : validation) {
        std::vector<int> hyp = beam_decode(p, pair.vm, cfg);
        RougeScore s = rouge_n(ids_to_words(hyp, vocab), ids_to_words(pair.ids, vocab), 2);
        f1_sum += s.f1;
      }
      slots[static_cast<std::size_t>((b - 1) * kAlphas + ai)] = {
          b, cfg.alpha, f1_sum / static_cast<double>(validation.size())};
    }
  }

  const Slot* best = nullptr;
  for (const Slot& s : slots) {
    log << "beam=" << s.beam << " alpha=" << std::fixed << std::setprecision(1) << s.alpha
        << " mean_f1=" << std::setprecision(6) << s.mean_f1 << "\n";
    if (!best || s.mean_f1 > best->mean_f1) best = &s;  // grid order = tie-break order
  }
  return {best->beam, best->alpha, max_len};
}

}  // namespace treecomment
