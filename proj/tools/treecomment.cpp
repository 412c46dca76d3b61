// treecomment: one binary wiring extraction, training, generation, and
// evaluation together.
//
// Exit codes: 0 success; 1 user error (bad flags, unreadable files,
// malformed inputs); 2 internal invariant violation (corrupt checkpoints,
// failed self-checks). Results go to stdout (JSON documents are single
// lines); progress and diagnostics go to stderr.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "treecomment/checkpoint.hpp"
#include "treecomment/classifier.hpp"
#include "treecomment/corpus.hpp"
#include "treecomment/decoder.hpp"
#include "treecomment/encoder.hpp"
#include "treecomment/error.hpp"
#include "treecomment/gradcheck.hpp"
#include "treecomment/ident.hpp"
#include "treecomment/parser.hpp"
#include "treecomment/rouge.hpp"
#include "treecomment/tree.hpp"

using json = nlohmann::json;
using namespace treecomment;

namespace {

void emit(const json& doc) { std::cout << doc.dump() << "\n"; }

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UserError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_token_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UserError("cannot open file: " + path);
  std::vector<std::vector<std::string>> lines;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<std::string> words;
    std::string w;
    while (ls >> w) words.push_back(w);
    lines.push_back(std::move(words));
  }
  return lines;
}

// Class names for labeled training: the pair's meta path. Sorted unique
// paths over the training set become the label set.
std::vector<std::string> class_names(const std::vector<CommentPair>& pairs) {
  std::vector<std::string> names;
  for (const CommentPair& p : pairs) names.push_back(p.path);
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  return names;
}

std::vector<LabeledExample> label_pairs(const std::vector<CommentPair>& pairs,
                                        const std::vector<std::string>& classes,
                                        const Preprocess& pre, const std::string& what) {
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < classes.size(); ++i)
    index[classes[i]] = static_cast<int>(i);
  std::vector<LabeledExample> out;
  out.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto it = index.find(pairs[i].path);
    if (it == index.end())
      throw UserError(what + " pair " + std::to_string(i + 1) + ": unknown class '" +
                      pairs[i].path + "'");
    out.push_back({preprocess_tree(pre, pairs[i].tree), it->second});
  }
  return out;
}

ParseNode load_code_arg(const std::string& path) {
  std::string text = read_text_file(path);
  auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') return load_tree_text(text);
  return parse_source(text);
}

std::vector<std::string> ids_to_words(const std::vector<int>& ids, const Vocab& vocab) {
  std::vector<std::string> words;
  for (int id : ids) {
    if (id == kStartId || id == kEndId) continue;
    words.push_back(vocab.items[static_cast<std::size_t>(id)]);
  }
  return words;
}

struct ExtractArgs {
  std::string repo, out;
};

void run_extract(const ExtractArgs& a) {
  ExtractStats stats;
  std::vector<CommentPair> pairs = extract_pairs(a.repo, std::cerr, &stats);
  save_pairs(pairs, a.out);
  emit({{"pairs", pairs.size()},
        {"files", stats.files},
        {"commented_methods", stats.commented_methods},
        {"parse_failures", stats.parse_failures},
        {"too_short", stats.too_short},
        {"constructors", stats.constructors},
        {"out", a.out}});
}

struct SplitArgs {
  std::string pairs;
  std::string ratios = "0.8,0.1,0.1";
  std::uint64_t seed = 1;
};

SplitSpec parse_ratios(const std::string& ratios, std::uint64_t seed) {
  std::istringstream ss(ratios);
  std::vector<double> parts;
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UserError("bad --ratios value: '" + item + "'");
    }
  }
  if (parts.size() != 3)
    throw UserError("--ratios needs exactly three comma-separated values");
  return {parts[0], parts[1], parts[2], seed};
}

void run_split(const SplitArgs& a) {
  std::vector<CommentPair> pairs = load_pairs(a.pairs);
  CorpusSplit split = split_corpus(std::move(pairs), parse_ratios(a.ratios, a.seed));
  std::string stem = a.pairs;
  if (stem.size() > 6 && stem.ends_with(".jsonl")) stem.resize(stem.size() - 6);
  const std::string train = stem + ".train.jsonl";
  const std::string val = stem + ".val.jsonl";
  const std::string test = stem + ".test.jsonl";
  save_pairs(split.train, train);
  save_pairs(split.val, val);
  save_pairs(split.test, test);
  emit({{"train", train},
        {"val", val},
        {"test", test},
        {"sizes", {split.train.size(), split.val.size(), split.test.size()}}});
}

struct TrainEncoderArgs {
  std::string train, out;
  std::string model = "avg";
  int dim = 64;
  int epochs = 200;
  double lr = 0.05;
  std::uint64_t seed = 1;
  bool no_ident = false;
  bool expand = false;
};

Preprocess make_preprocess(bool no_ident, bool expand) {
  Preprocess pre;
  pre.strip_idents = no_ident;
  pre.rewrite_idents = !no_ident;
  pre.expand_abbrevs = expand && !no_ident;
  return pre;
}

Checkpoint train_encoder_checkpoint(const std::vector<CommentPair>& pairs,
                                    const TrainEncoderArgs& a) {
  std::vector<std::string> classes = class_names(pairs);
  if (classes.size() < 2)
    throw UserError("need at least 2 distinct meta paths (classes) to train, got " +
                    std::to_string(classes.size()));
  Preprocess pre = make_preprocess(a.no_ident, a.expand);
  std::vector<LabeledExample> data = label_pairs(pairs, classes, pre, "train");

  ClassifyConfig cfg;
  cfg.variant = a.model;
  cfg.dim = a.dim;
  cfg.epochs = a.epochs;
  cfg.lr = a.lr;
  cfg.seed = a.seed;
  ClassifierTrainResult r = train_classifier(data, static_cast<int>(classes.size()), cfg);

  Checkpoint c;
  c.kind = "encoder";
  c.seed = a.seed;
  c.epochs = a.epochs;
  c.lr = a.lr;
  c.variant = a.model;
  c.pre = pre;
  c.encoder = std::move(r.encoder);
  c.head = std::move(r.head);
  c.classes = std::move(classes);
  if (!r.loss_curve.empty())
    std::cerr << "final mean loss " << r.loss_curve.back() << "\n";
  return c;
}

void run_train_encoder(const TrainEncoderArgs& a) {
  std::vector<CommentPair> pairs = load_pairs(a.train);
  Checkpoint c = train_encoder_checkpoint(pairs, a);
  save_checkpoint(c, a.out);
  emit({{"examples", pairs.size()},
        {"classes", c.classes.size()},
        {"dim", c.encoder.dim},
        {"checkpoint", a.out}});
}

struct ClassifyArgs {
  TrainEncoderArgs enc;  // shares every training flag
  std::string test;
};

void run_classify(const ClassifyArgs& a) {
  std::vector<CommentPair> train_pairs = load_pairs(a.enc.train);
  Checkpoint c = train_encoder_checkpoint(train_pairs, a.enc);
  if (!a.enc.out.empty()) save_checkpoint(c, a.enc.out);

  std::vector<CommentPair> test_pairs = load_pairs(a.test);
  std::vector<LabeledExample> test = label_pairs(test_pairs, c.classes, c.pre, "test");
  std::vector<int> pred, gold;
  for (const LabeledExample& ex : test) {
    Vec y = predict(*c.head, checkpoint_encode(c, ex.tree));
    int best = 0;
    for (std::size_t i = 1; i < y.size(); ++i)
      if (y[i] > y[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
    pred.push_back(best);
    gold.push_back(ex.label);
  }
  ClassMetrics m = evaluate_assignment(pred, gold, static_cast<int>(c.classes.size()));
  emit({{"purity", m.purity},
        {"f1", m.macro_f1},
        {"accuracy", m.accuracy},
        {"assignment", m.assignment}});
}

struct TrainGenArgs {
  std::string pairs, encoder, out;
  std::string cell = "gru";
  int epochs = 800;
  int hidden = 64;
  int embed = 64;
  double lr = 0.05;
  std::uint64_t seed = 1;
  int min_freq = 3;
};

void run_train_gen(const TrainGenArgs& a) {
  Checkpoint enc = load_checkpoint(a.encoder);
  std::vector<CommentPair> pairs = load_pairs(a.pairs);
  if (pairs.empty()) throw UserError("no training pairs in " + a.pairs);

  Vocab vocab = build_comment_vocab_from(pairs, a.min_freq);
  std::vector<GenPair> data;
  data.reserve(pairs.size());
  for (const CommentPair& p : pairs) {
    Vec vm = checkpoint_encode(enc, preprocess_tree(enc.pre, p.tree));
    data.push_back({std::move(vm), comment_to_ids(p.comment, vocab)});
  }

  TrainGenConfig cfg;
  cfg.cell = a.cell;
  cfg.hidden = a.hidden;
  cfg.embed = a.embed;
  cfg.epochs = a.epochs;
  cfg.lr = a.lr;
  cfg.seed = a.seed;
  GenTrainResult r = train_generator(data, vocab, cfg);

  Checkpoint out;
  out.kind = "generator";
  out.seed = a.seed;
  out.epochs = a.epochs;
  out.lr = a.lr;
  out.variant = enc.variant;
  out.pre = enc.pre;
  out.encoder = std::move(enc.encoder);
  out.decoder = std::move(r.decoder);
  save_checkpoint(out, a.out);
  if (!r.loss_curve.empty())
    std::cerr << "final mean loss " << r.loss_curve.back() << "\n";
  emit({{"pairs", pairs.size()},
        {"vocab", vocab.size()},
        {"cell", a.cell},
        {"checkpoint", a.out}});
}

struct GenerateArgs {
  std::string model, code;
  int beam = 1;
  double alpha = 0.0;
  int max_len = 30;
};

void run_generate(const GenerateArgs& a) {
  Checkpoint c = load_checkpoint(a.model);
  if (!c.decoder) throw UserError("checkpoint " + a.model + " has no decoder (train-gen first)");
  ParseNode tree = preprocess_tree(c.pre, load_code_arg(a.code));
  Vec vm = checkpoint_encode(c, tree);
  BeamConfig cfg{a.beam, a.alpha, a.max_len};
  std::vector<int> ids = beam_decode(*c.decoder, vm, cfg);
  std::vector<std::string> words = ids_to_words(ids, decoder_vocab(*c.decoder));
  std::string line;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) line += ' ';
    line += words[i];
  }
  std::cout << line << "\n";
}

struct RougeArgs {
  std::string hyp, ref;
  int n = 2;
};

void run_rouge(const RougeArgs& a) {
  std::vector<std::vector<std::string>> hyps = read_token_lines(a.hyp);
  std::vector<std::vector<std::string>> refs = read_token_lines(a.ref);
  if (hyps.size() != refs.size())
    throw UserError("--hyp has " + std::to_string(hyps.size()) + " lines but --ref has " +
                    std::to_string(refs.size()));
  std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> zipped;
  zipped.reserve(hyps.size());
  for (std::size_t i = 0; i < hyps.size(); ++i) zipped.emplace_back(hyps[i], refs[i]);
  RougeScore s = corpus_rouge(zipped, a.n);
  emit({{"recall", s.recall}, {"precision", s.precision}, {"f1", s.f1}});
}

struct TuneBeamArgs {
  std::string model, pairs;
  int max_len = 30;
};

void run_tune_beam(const TuneBeamArgs& a) {
  Checkpoint c = load_checkpoint(a.model);
  if (!c.decoder) throw UserError("checkpoint " + a.model + " has no decoder (train-gen first)");
  std::vector<CommentPair> pairs = load_pairs(a.pairs);
  if (pairs.empty()) throw UserError("no validation pairs in " + a.pairs);
  const Vocab& vocab = decoder_vocab(*c.decoder);
  std::vector<GenPair> data;
  data.reserve(pairs.size());
  for (const CommentPair& p : pairs) {
    Vec vm = checkpoint_encode(c, preprocess_tree(c.pre, p.tree));
    data.push_back({std::move(vm), comment_to_ids(p.comment, vocab)});
  }
  BeamConfig best = tune_beam(*c.decoder, data, a.max_len, std::cerr);
  emit({{"beam", best.beam_size}, {"alpha", best.alpha}, {"max_len", best.max_len}});
}

struct GradcheckArgs {
  std::uint64_t seed = 7;
  int instances = 50;
};

void run_gradcheck(const GradcheckArgs& a) {
  std::vector<GradCheckResult> results = gradcheck_all(a.seed, a.instances);
  bool all_passed = true;
  json suites = json::array();
  for (const GradCheckResult& r : results) {
    std::cerr << r.suite << ": max rel err " << r.max_rel_err << " over " << r.instances
              << " instances -> " << (r.passed ? "ok" : "FAIL") << "\n";
    suites.push_back({{"suite", r.suite},
                      {"instances", r.instances},
                      {"max_rel_err", r.max_rel_err},
                      {"passed", r.passed}});
    all_passed = all_passed && r.passed;
  }
  emit({{"suites", suites}, {"passed", all_passed}});
  if (!all_passed)
    throw InternalError("analytic gradients disagree with finite differences");
}

struct SplitIdentArgs {
  std::string name;
  std::string context;
  int pos = -1;
};

void run_split_ident(const SplitIdentArgs& a) {
  json doc;
  doc["ident"] = a.name;
  doc["words"] = json(split_identifier(a.name));
  if (!a.context.empty()) {
    AbbrevContext ctx;
    std::istringstream ss(a.context);
    std::string w;
    while (ss >> w) ctx.words.push_back(w);
    ctx.ident_pos = a.pos;
    auto expanded = expand_abbreviation(a.name, ctx);
    doc["expanded"] = expanded ? json(*expanded) : json(nullptr);
  }
  emit(doc);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tree-structured code encoding and comment generation"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML config with [subcommand] sections; flags override it");

  ExtractArgs extract_args;
  CLI::App* extract = app.add_subcommand("extract", "mine (method, comment) pairs from a source tree");
  extract->add_option("--repo", extract_args.repo, "root directory to scan")->required();
  extract->add_option("--out", extract_args.out, "output pairs JSONL path")->required();
  extract->callback([&] { run_extract(extract_args); });

  SplitArgs split_args;
  CLI::App* split = app.add_subcommand("split", "shuffle and split a pairs file");
  split->add_option("--pairs", split_args.pairs, "pairs JSONL path")->required();
  split->add_option("--ratios", split_args.ratios, "train,val,test ratios summing to 1");
  split->add_option("--seed", split_args.seed, "shuffle seed");
  split->callback([&] { run_split(split_args); });

  TrainEncoderArgs tenc_args;
  CLI::App* tenc = app.add_subcommand("train-encoder", "train the code encoder on labeled pairs");
  tenc->add_option("--train", tenc_args.train, "training pairs JSONL")->required();
  tenc->add_option("--out", tenc_args.out, "checkpoint output path")->required();
  tenc->add_option("--model", tenc_args.model, "sum | avg | les | lea")
      ->check(CLI::IsMember({"sum", "avg", "les", "lea"}));
  tenc->add_option("--dim", tenc_args.dim, "code vector dimension")->check(CLI::PositiveNumber);
  tenc->add_option("--epochs", tenc_args.epochs, "training epochs")->check(CLI::PositiveNumber);
  tenc->add_option("--lr", tenc_args.lr, "AdaGrad learning rate");
  tenc->add_option("--seed", tenc_args.seed, "init/shuffle seed");
  tenc->add_flag("--no-ident", tenc_args.no_ident, "anonymize identifiers to placeholders");
  tenc->add_flag("--expand-abbrev", tenc_args.expand, "expand abbreviations from context");
  tenc->callback([&] { run_train_encoder(tenc_args); });

  ClassifyArgs cls_args;
  CLI::App* cls = app.add_subcommand("classify", "train on one pairs file, evaluate on another");
  cls->add_option("--train", cls_args.enc.train, "training pairs JSONL")->required();
  cls->add_option("--test", cls_args.test, "test pairs JSONL")->required();
  cls->add_option("--model", cls_args.enc.model, "sum | avg | les | lea")
      ->check(CLI::IsMember({"sum", "avg", "les", "lea"}));
  cls->add_option("--dim", cls_args.enc.dim, "code vector dimension")->check(CLI::PositiveNumber);
  cls->add_option("--epochs", cls_args.enc.epochs, "training epochs")->check(CLI::PositiveNumber);
  cls->add_option("--lr", cls_args.enc.lr, "AdaGrad learning rate");
  cls->add_option("--seed", cls_args.enc.seed, "init/shuffle seed");
  cls->add_option("--out", cls_args.enc.out, "also save the trained checkpoint here");
  cls->add_flag("--no-ident", cls_args.enc.no_ident, "anonymize identifiers to placeholders");
  cls->add_flag("--expand-abbrev", cls_args.enc.expand, "expand abbreviations from context");
  cls->callback([&] { run_classify(cls_args); });

  TrainGenArgs tgen_args;
  CLI::App* tgen = app.add_subcommand("train-gen", "train the comment decoder over a frozen encoder");
  tgen->add_option("--pairs", tgen_args.pairs, "training pairs JSONL")->required();
  tgen->add_option("--encoder", tgen_args.encoder, "encoder checkpoint")->required();
  tgen->add_option("--out", tgen_args.out, "generator checkpoint output path")->required();
  tgen->add_option("--cell", tgen_args.cell, "gru | basic")
      ->check(CLI::IsMember({"gru", "basic"}));
  tgen->add_option("--epochs", tgen_args.epochs, "training epochs")->check(CLI::PositiveNumber);
  tgen->add_option("--hidden", tgen_args.hidden, "decoder hidden size")->check(CLI::PositiveNumber);
  tgen->add_option("--embed", tgen_args.embed, "comment word embedding size")
      ->check(CLI::PositiveNumber);
  tgen->add_option("--lr", tgen_args.lr, "AdaGrad learning rate");
  tgen->add_option("--seed", tgen_args.seed, "init/shuffle seed");
  tgen->add_option("--min-freq", tgen_args.min_freq, "vocabulary frequency cutoff")
      ->check(CLI::PositiveNumber);
  tgen->callback([&] { run_train_gen(tgen_args); });

  GenerateArgs gen_args;
  CLI::App* gen = app.add_subcommand("generate", "decode one comment for a source file or tree JSON");
  gen->add_option("--model", gen_args.model, "generator checkpoint")->required();
  gen->add_option("--code", gen_args.code, "source file or tree JSON file")->required();
  gen->add_option("--beam", gen_args.beam, "beam size")->check(CLI::Range(1, 1000));
  gen->add_option("--alpha", gen_args.alpha, "length-penalty weight")->check(CLI::Range(0.0, 1.0));
  gen->add_option("--max-len", gen_args.max_len, "maximum words")->check(CLI::PositiveNumber);
  gen->callback([&] { run_generate(gen_args); });

  RougeArgs rouge_args;
  CLI::App* rg = app.add_subcommand("rouge", "n-gram overlap of hypothesis vs reference lines");
  rg->add_option("--hyp", rouge_args.hyp, "hypothesis file, one tokenized line per sample")
      ->required();
  rg->add_option("--ref", rouge_args.ref, "reference file, aligned line by line")->required();
  rg->add_option("-n,--n", rouge_args.n, "n-gram order")->check(CLI::PositiveNumber);
  rg->callback([&] { run_rouge(rouge_args); });

  TuneBeamArgs tune_args;
  CLI::App* tune = app.add_subcommand("tune-beam", "grid-search beam size and length penalty");
  tune->add_option("--model", tune_args.model, "generator checkpoint")->required();
  tune->add_option("--pairs", tune_args.pairs, "validation pairs JSONL")->required();
  tune->add_option("--max-len", tune_args.max_len, "maximum words")->check(CLI::PositiveNumber);
  tune->callback([&] { run_tune_beam(tune_args); });

  GradcheckArgs gc_args;
  CLI::App* gc = app.add_subcommand("gradcheck", "finite-difference check of every backward pass");
  gc->add_option("--seed", gc_args.seed, "instance seed");
  gc->add_option("--instances", gc_args.instances, "instances per suite")
      ->check(CLI::PositiveNumber);
  gc->callback([&] { run_gradcheck(gc_args); });

  SplitIdentArgs si_args;
  CLI::App* si = app.add_subcommand("split-ident", "inspect identifier splitting and expansion");
  si->add_option("name", si_args.name, "identifier to split")->required();
  si->add_option("--context", si_args.context, "context words for abbreviation expansion");
  si->add_option("--pos", si_args.pos, "identifier position within the context");
  si->callback([&] { run_split_ident(si_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help() << std::flush;
    return 1;
  } catch (const UserError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const InternalError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
