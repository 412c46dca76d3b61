// Finite-difference oracles for every hand-written backward pass.
//
// Each suite draws seeded random instances (small dims, small trees or
// sequences), computes analytic gradients, and compares against central
// differences. The comparison is |a-b| / max(|a|, |b|, 1e-6) <= 1e-4; the
// 1e-6 denominator floor absorbs finite-difference roundoff on gradients
// that are exactly or nearly zero (dead relu units, unused embedding rows).

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "treecomment/numeric.hpp"
#include "treecomment/tree.hpp"

namespace treecomment {

inline constexpr double kGradCheckStep = 1e-5;
inline constexpr double kGradCheckTol = 1e-4;
inline constexpr double kGradCheckFloor = 1e-6;

struct GradCheckResult {
  std::string suite;
  int instances = 0;
  double max_rel_err = 0.0;
  bool passed = false;
};

// Random well-formed ParseTree with at most max_nodes nodes, drawn from a
// small pool of kinds, identifiers, and literals. If with_token_leaf is set
// the result is guaranteed to contain at least one identifier leaf.
ParseNode random_tree(Rng& rng, int max_nodes, bool with_token_leaf = false);

// variant: sum | avg | les | lea — joint encoder + softmax-head loss.
GradCheckResult gradcheck_encoder(const std::string& variant, int instances, std::uint64_t seed);

// Softmax classifier head alone, over a fixed random input vector.
GradCheckResult gradcheck_head(int instances, std::uint64_t seed);

// cell: gru | basic — full-sequence teacher-forced loss.
GradCheckResult gradcheck_decoder(const std::string& cell, int instances, std::uint64_t seed);

// All suites; 50 instances each by default.
std::vector<GradCheckResult> gradcheck_all(std::uint64_t seed, int instances = 50);

}  // namespace treecomment
