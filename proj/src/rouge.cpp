#include "treecomment/rouge.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>

#include "treecomment/error.hpp"

namespace treecomment {

namespace {

std::string lower(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// n-gram multiset as joined strings; '\x1f' cannot occur in tokens.
std::unordered_map<std::string, std::size_t> ngram_counts(const std::vector<std::string>& tokens,
                                                          int n) {
  std::unordered_map<std::string, std::size_t> counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key;
    for (int j = 0; j < n; ++j) {
      if (j) key += '\x1f';
      key += lower(tokens[i + j]);
    }
    ++counts[key];
  }
  return counts;
}

}  // namespace

RougeScore rouge_n(const std::vector<std::string>& candidate,
                   const std::vector<std::string>& reference, int n) {
  if (n < 1) throw UserError("rouge: n must be >= 1");
  auto cand = ngram_counts(candidate, n);
  auto ref = ngram_counts(reference, n);
  std::size_t cand_total = 0, ref_total = 0, overlap = 0;
  for (const auto& [gram, count] : cand) cand_total += count;
  for (const auto& [gram, count] : ref) ref_total += count;
  for (const auto& [gram, count] : cand) {
    auto it = ref.find(gram);
    if (it != ref.end()) overlap += std::min(count, it->second);
  }
  RougeScore s;
  s.recall = ref_total == 0 ? 0.0 : static_cast<double>(overlap) / static_cast<double>(ref_total);
  s.precision =
      cand_total == 0 ? 0.0 : static_cast<double>(overlap) / static_cast<double>(cand_total);
  s.f1 = s.recall + s.precision == 0.0 ? 0.0
                                       : 2.0 * s.recall * s.precision / (s.recall + s.precision);
  return s;
}

RougeScore corpus_rouge(
    const std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>>& pairs,
    int n) {
  if (pairs.empty()) throw UserError("rouge: empty pair list");
  RougeScore mean;
  for (const auto& [cand, ref] : pairs) {
    RougeScore s = rouge_n(cand, ref, n);
    mean.recall += s.recall;
    mean.precision += s.precision;
    mean.f1 += s.f1;
  }
  const double n_pairs = static_cast<double>(pairs.size());
  mean.recall /= n_pairs;
  mean.precision /= n_pairs;
  mean.f1 /= n_pairs;
  return mean;
}

}  // namespace treecomment
