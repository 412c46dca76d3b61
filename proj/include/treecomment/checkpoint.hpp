// Self-describing JSON checkpoints for trained models.
//
// One format, two kinds:
//   "encoder"   — tree/bag encoder (+ optional classifier head)
//   "generator" — frozen encoder + comment decoder
//
// Numbers are written in shortest round-trip form, so save -> load gives
// bitwise-identical tensors. Loading never partially applies a file: a wrong
// format string is a user error (exit 1), while a truncated, corrupt, or
// dimensionally inconsistent file is an internal error (exit 2) naming the
// offending section.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "treecomment/classifier.hpp"
#include "treecomment/decoder.hpp"
#include "treecomment/encoder.hpp"
#include "treecomment/tree.hpp"

namespace treecomment {

inline constexpr const char* kCheckpointFormat = "treecomment-ckpt/1";

// Tree preprocessing baked into a model; inference must replay it.
struct Preprocess {
  bool rewrite_idents = true;   // split identifiers into CombineName word nodes
  bool expand_abbrevs = false;  // expand abbreviations from statement context
  bool strip_idents = false;    // anonymize identifiers to positional placeholders

  bool operator==(const Preprocess&) const = default;
};

struct Checkpoint {
  std::string kind = "encoder";  // "encoder" | "generator"
  std::uint64_t seed = 0;
  int epochs = 0;
  double lr = 0.05;
  std::string variant = "sum";  // sum | avg | les | lea
  Preprocess pre;
  CodeRnnParams encoder;

  // Classifier head, present on checkpoints trained with labels.
  std::optional<ClassifierHead> head;
  std::vector<std::string> classes;  // label names indexing head rows

  // Comment decoder, present on "generator" checkpoints.
  std::optional<DecoderParams> decoder;
};

void save_checkpoint(const Checkpoint& c, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Replays c's stored preprocessing on a freshly parsed tree.
ParseNode preprocess_tree(const Preprocess& pre, const ParseNode& tree);

// Encodes a preprocessed tree with the checkpoint's encoder and variant.
Vec checkpoint_encode(const Checkpoint& c, const ParseNode& preprocessed);

}  // namespace treecomment
