#include "treecomment/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "treecomment/decoder.hpp"
#include "treecomment/error.hpp"
#include "treecomment/parser.hpp"

namespace treecomment {

using nlohmann::json;
namespace fs = std::filesystem;

json pair_to_json(const CommentPair& pair) {
  json j;
  j["tree"] = dump_node(pair.tree);
  j["comment"] = pair.comment;
  j["meta"] = {{"path", pair.path}, {"method", pair.method}};
  return j;
}

CommentPair pair_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw UserError(where + ": expected an object");
  auto tree_it = j.find("tree");
  if (tree_it == j.end()) throw UserError(where + ": missing \"tree\"");
  CommentPair pair;
  pair.tree = load_node(*tree_it, where + ".tree");
  auto comment_it = j.find("comment");
  if (comment_it == j.end() || !comment_it->is_array())
    throw UserError(where + ": missing \"comment\" array");
  for (std::size_t i = 0; i < comment_it->size(); ++i) {
    const auto& w = (*comment_it)[i];
    if (!w.is_string())
      throw UserError(where + ".comment[" + std::to_string(i) + "]: expected a string");
    pair.comment.push_back(w.get<std::string>());
  }
  if (auto meta = j.find("meta"); meta != j.end() && meta->is_object()) {
    if (auto it = meta->find("path"); it != meta->end() && it->is_string())
      pair.path = it->get<std::string>();
    if (auto it = meta->find("method"); it != meta->end() && it->is_string())
      pair.method = it->get<std::string>();
  }
  return pair;
}

std::vector<CommentPair> load_pairs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UserError("cannot open pairs file: " + path);
  std::vector<CommentPair> pairs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw UserError(path + ":" + std::to_string(lineno) + ": invalid JSON");
    pairs.push_back(pair_from_json(j, path + ":" + std::to_string(lineno)));
  }
  return pairs;
}

void save_pairs(const std::vector<CommentPair>& pairs, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw UserError("cannot write pairs file: " + path);
  for (const auto& pair : pairs) out << pair_to_json(pair).dump() << "\n";
}

std::vector<std::string> normalize_comment(const std::string& raw) {
  // Per-line: drop leading whitespace and the doc-comment '*' gutter.
  std::string text;
  std::istringstream lines(raw);
  std::string line;
  while (std::getline(lines, line)) {
    std::size_t i = 0;
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    while (i < line.size() && line[i] == '*') ++i;
    text += line.substr(i);
    text += ' ';
  }
  // Remove HTML-ish tags wholesale.
  std::string untagged;
  bool in_tag = false;
  for (char c : text) {
    if (c == '<') in_tag = true;
    else if (c == '>') in_tag = false;
    else if (!in_tag) untagged += c;
  }
  // Tokenize; delete punctuation characters inside tokens; lowercase.
  std::vector<std::string> words;
  std::istringstream tokens(untagged);
  std::string tok;
  while (tokens >> tok) {
    std::string cleaned;
    for (char c : tok) {
      if (std::isalnum(static_cast<unsigned char>(c)))
        cleaned += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    if (!cleaned.empty()) words.push_back(cleaned);
  }
  return words;
}

namespace {

// Scans forward from the '{' at open_pos to its matching '}', skipping
// string/char literals and comments. Returns npos when unbalanced.
std::size_t find_matching_brace(const std::string& s, std::size_t open_pos) {
  int depth = 0;
  enum { Code, Str, Chr, Line, Block } state = Code;
  for (std::size_t i = open_pos; i < s.size(); ++i) {
    char c = s[i];
    switch (state) {
      case Code:
        if (c == '{') ++depth;
        else if (c == '}') {
          if (--depth == 0) return i;
        } else if (c == '"') state = Str;
        else if (c == '\'') state = Chr;
        else if (c == '/' && i + 1 < s.size() && s[i + 1] == '/') state = Line;
        else if (c == '/' && i + 1 < s.size() && s[i + 1] == '*') {
          state = Block;
          ++i;
        }
        break;
      case Str:
        if (c == '\\') ++i;
        else if (c == '"') state = Code;
        break;
      case Chr:
        if (c == '\\') ++i;
        else if (c == '\'') state = Code;
        break;
      case Line:
        if (c == '\n') state = Code;
        break;
      case Block:
        if (c == '*' && i + 1 < s.size() && s[i + 1] == '/') {
          state = Code;
          ++i;
        }
        break;
    }
  }
  return std::string::npos;
}

const std::set<std::string> kHeaderModifiers = {"public", "private",      "protected", "static",
                                                "final",  "synchronized", "abstract",  "native",
                                                "default"};
const std::set<std::string> kNotMethodWords = {"if",     "while", "for", "switch", "catch",
                                               "return", "new",   "do",  "try",    "class",
                                               "else",   "interface", "enum"};

struct MethodHeader {
  std::string name;
  bool constructor = false;
  std::size_t body_open = 0;  // position of '{'
};

// Tries to read "[modifiers] [type] name ( params ) [throws ...] {" at pos.
std::optional<MethodHeader> match_method_header(const std::string& s, std::size_t pos) {
  std::vector<std::string> words;
  std::size_t i = pos;
  for (;;) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i < s.size() &&
        (std::isalpha(static_cast<unsigned char>(s[i])) || s[i] == '_' || s[i] == '$')) {
      std::string w;
      while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_' ||
                              s[i] == '$'))
        w += s[i++];
      words.push_back(w);
      // Swallow array brackets attached to a type.
      while (i + 1 < s.size() && s[i] == '[' && s[i + 1] == ']') i += 2;
      continue;
    }
    break;
  }
  if (words.empty() || i >= s.size() || s[i] != '(') return std::nullopt;
  if (kNotMethodWords.count(words.front())) return std::nullopt;

  std::size_t meaningful = 0;
  for (const auto& w : words)
    if (!kHeaderModifiers.count(w)) ++meaningful;
  if (meaningful == 0 || kNotMethodWords.count(words.back())) return std::nullopt;

  // Matching close paren of the parameter list.
  int depth = 0;
  std::size_t j = i;
  for (; j < s.size(); ++j) {
    if (s[j] == '(') ++depth;
    else if (s[j] == ')' && --depth == 0) break;
    else if (s[j] == '{' || s[j] == ';') return std::nullopt;
  }
  if (j >= s.size()) return std::nullopt;
  ++j;
  // Optional "throws A, B".
  while (j < s.size() && std::isspace(static_cast<unsigned char>(s[j]))) ++j;
  if (s.compare(j, 6, "throws") == 0) {
    j += 6;
    for (; j < s.size() && s[j] != '{' && s[j] != ';'; ++j) {
    }
  }
  while (j < s.size() && std::isspace(static_cast<unsigned char>(s[j]))) ++j;
  if (j >= s.size() || s[j] != '{') return std::nullopt;

  MethodHeader h;
  h.name = words.back();
  h.constructor = meaningful == 1;  // no type word before the name
  h.body_open = j;
  return h;
}

struct FileExtract {
  std::vector<CommentPair> pairs;
  std::vector<std::string> failures;  // log lines
  ExtractStats stats;
};

FileExtract extract_from_file(const fs::path& file, const std::string& rel) {
  FileExtract out;
  std::ifstream in(file);
  if (!in) {
    out.failures.push_back(rel + ": unreadable, skipped");
    return out;
  }
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  std::size_t pos = 0;
  while ((pos = text.find("/*", pos)) != std::string::npos) {
    std::size_t end = text.find("*/", pos + 2);
    if (end == std::string::npos) break;
    std::string body = text.substr(pos + 2, end - pos - 2);
    if (!body.empty() && body.front() == '*') body.erase(body.begin());  // "/**" doc form
    std::size_t after = end + 2;
    pos = after;

    // Skip whitespace and annotation lines between the comment and the
    // declaration it documents.
    std::size_t k = after;
    for (;;) {
      while (k < text.size() && std::isspace(static_cast<unsigned char>(text[k]))) ++k;
      if (k < text.size() && text[k] == '@') {
        ++k;
        while (k < text.size() && (std::isalnum(static_cast<unsigned char>(text[k])) ||
                                   text[k] == '.' || text[k] == '_'))
          ++k;
        if (k < text.size() && text[k] == '(') {
          int depth = 0;
          for (; k < text.size(); ++k) {
            if (text[k] == '(') ++depth;
            else if (text[k] == ')' && --depth == 0) {
              ++k;
              break;
            }
          }
        }
        continue;
      }
      break;
    }

    auto header = match_method_header(text, k);
    if (!header) continue;
    ++out.stats.commented_methods;
    if (header->constructor) {
      ++out.stats.constructors;
      continue;
    }
    std::vector<std::string> words = normalize_comment(body);
    if (words.size() <= 8) {
      ++out.stats.too_short;
      continue;
    }
    std::size_t close = find_matching_brace(text, header->body_open);
    if (close == std::string::npos) {
      out.failures.push_back(rel + ": unbalanced braces in " + header->name + ", skipped");
      ++out.stats.parse_failures;
      continue;
    }
    std::string source = text.substr(header->body_open, close - header->body_open + 1);
    try {
      CommentPair pair;
      pair.tree = parse_source(source);
      pair.comment = std::move(words);
      pair.path = rel;
      pair.method = header->name;
      out.pairs.push_back(std::move(pair));
    } catch (const UserError& e) {
      out.failures.push_back(rel + ": cannot parse " + header->name + " (" + e.what() +
                             "), skipped");
      ++out.stats.parse_failures;
    }
  }
  return out;
}

}  // namespace

std::vector<CommentPair> extract_pairs(const std::string& root, std::ostream& log,
                                       ExtractStats* stats) {
  fs::path base(root);
  if (!fs::is_directory(base)) throw UserError("not a directory: " + root);

  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(base)) {
    if (entry.is_regular_file() && entry.path().extension() == ".java")
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  // Per-file extraction is independent; results land in per-file slots and
  // are merged in sorted path order, so the output never depends on thread
  // scheduling.
  std::vector<FileExtract> slots(files.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < files.size(); ++i) {
    slots[i] = extract_from_file(files[i], files[i].lexically_relative(base).generic_string());
  }

  std::vector<CommentPair> pairs;
  ExtractStats total;
  total.files = files.size();
  for (const auto& slot : slots) {
    for (const auto& line : slot.failures) log << line << "\n";
    for (const auto& pair : slot.pairs) pairs.push_back(pair);
    total.commented_methods += slot.stats.commented_methods;
    total.parse_failures += slot.stats.parse_failures;
    total.too_short += slot.stats.too_short;
    total.constructors += slot.stats.constructors;
  }
  if (stats) *stats = total;
  return pairs;
}

CorpusSplit split_corpus(std::vector<CommentPair> pairs, const SplitSpec& spec) {
  if (spec.train <= 0.0 || spec.val <= 0.0 || spec.test <= 0.0)
    throw UserError("split ratios must all be positive");
  if (std::fabs(spec.train + spec.val + spec.test - 1.0) > 1e-9)
    throw UserError("split ratios must sum to 1");

  Rng rng(spec.seed);
  rng.shuffle(pairs);

  const std::size_t n = pairs.size();
  std::size_t n_train = static_cast<std::size_t>(std::llround(spec.train * static_cast<double>(n)));
  std::size_t n_val = static_cast<std::size_t>(std::llround(spec.val * static_cast<double>(n)));
  if (n_train + n_val > n) n_val = n - n_train;
  const std::size_t n_test = n - n_train - n_val;
  if (n_train == 0 || n_val == 0 || n_test == 0)
    throw UserError("corpus too small to split: " + std::to_string(n) + " pairs -> " +
                    std::to_string(n_train) + "/" + std::to_string(n_val) + "/" +
                    std::to_string(n_test));

  CorpusSplit split;
  split.train.assign(pairs.begin(), pairs.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.val.assign(pairs.begin() + static_cast<std::ptrdiff_t>(n_train),
                   pairs.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  split.test.assign(pairs.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), pairs.end());
  return split;
}

Vocab build_comment_vocab_from(const std::vector<CommentPair>& train, int min_freq) {
  if (train.empty()) throw UserError("vocabulary needs a nonempty training set");
  std::map<std::string, std::size_t> counts;
  for (const auto& pair : train)
    for (const auto& w : pair.comment) ++counts[w];

  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [word, count] : counts)
    if (count >= static_cast<std::size_t>(min_freq)) kept.emplace_back(word, count);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocab vocab = make_comment_vocab();
  for (const auto& [word, _] : kept) vocab.add(word);
  return vocab;
}

std::vector<int> comment_to_ids(const std::vector<std::string>& words, const Vocab& vocab) {
  std::vector<int> ids;
  ids.reserve(words.size() + 2);
  ids.push_back(kStartId);
  for (const auto& w : words) ids.push_back(vocab.id_of(w));
  ids.push_back(kEndId);
  return ids;
}

}  // namespace treecomment
