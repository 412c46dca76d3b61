// N-gram overlap scoring (default bigrams) between candidate and reference
// token lists: clipped multiset overlap, recall/precision/F1.

#pragma once

#include <string>
#include <utility>
#include <vector>

namespace treecomment {

struct RougeScore {
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
};

// overlap = sum over distinct n-grams of min(candidate count, reference
// count); recall = overlap / reference n-gram count, precision = overlap /
// candidate n-gram count, 0/0 defined as 0; f1 is their harmonic mean (0 when
// both are 0). Comparison is case-insensitive.
RougeScore rouge_n(const std::vector<std::string>& candidate,
                   const std::vector<std::string>& reference, int n);

// Unweighted mean of per-pair scores; throws UserError on an empty list.
RougeScore corpus_rouge(
    const std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>>& pairs,
    int n);

}  // namespace treecomment
