#include "treecomment/checkpoint.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "treecomment/error.hpp"
#include "treecomment/ident.hpp"

namespace treecomment {

using json = nlohmann::json;

namespace {

json tensor_to_json(const Vec& v) { return json(v); }

json vocab_items(const Vocab& v) { return json(v.items); }

const json& require(const json& j, const char* key, const std::string& section) {
  if (!j.is_object())
    throw InternalError("checkpoint " + section + ": expected an object");
  auto it = j.find(key);
  if (it == j.end())
    throw InternalError("checkpoint " + section + ": missing key '" + key + "'");
  return *it;
}

std::string require_string(const json& j, const char* key, const std::string& section) {
  const json& v = require(j, key, section);
  if (!v.is_string())
    throw InternalError("checkpoint " + section + ": key '" + key + "' must be a string");
  return v.get<std::string>();
}

int require_int(const json& j, const char* key, const std::string& section) {
  const json& v = require(j, key, section);
  if (!v.is_number_integer())
    throw InternalError("checkpoint " + section + ": key '" + key + "' must be an integer");
  return v.get<int>();
}

double require_double(const json& j, const char* key, const std::string& section) {
  const json& v = require(j, key, section);
  if (!v.is_number())
    throw InternalError("checkpoint " + section + ": key '" + key + "' must be a number");
  double d = v.get<double>();
  if (!std::isfinite(d))
    throw InternalError("checkpoint " + section + ": key '" + key + "' is not finite");
  return d;
}

bool require_bool(const json& j, const char* key, const std::string& section) {
  const json& v = require(j, key, section);
  if (!v.is_boolean())
    throw InternalError("checkpoint " + section + ": key '" + key + "' must be a boolean");
  return v.get<bool>();
}

std::vector<std::string> require_string_list(const json& j, const char* key,
                                             const std::string& section) {
  const json& v = require(j, key, section);
  if (!v.is_array())
    throw InternalError("checkpoint " + section + ": key '" + key + "' must be an array");
  std::vector<std::string> out;
  out.reserve(v.size());
  for (const json& el : v) {
    if (!el.is_string())
      throw InternalError("checkpoint " + section + ": key '" + key +
                          "' has a non-string entry");
    out.push_back(el.get<std::string>());
  }
  return out;
}

void fill_tensor(const json& tensors, const std::string& name, Vec& out,
                 const std::string& section) {
  auto it = tensors.find(name);
  if (it == tensors.end())
    throw InternalError("checkpoint " + section + ": missing tensor '" + name + "'");
  const json& arr = *it;
  if (!arr.is_array() || arr.size() != out.size())
    throw InternalError("checkpoint " + section + ": tensor '" + name + "' has " +
                        std::to_string(arr.size()) + " values, expected " +
                        std::to_string(out.size()));
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!arr[i].is_number())
      throw InternalError("checkpoint " + section + ": tensor '" + name +
                          "' has a non-numeric entry at index " + std::to_string(i));
    out[i] = arr[i].get<double>();
    if (!std::isfinite(out[i]))
      throw InternalError("checkpoint " + section + ": tensor '" + name +
                          "' has a non-finite entry at index " + std::to_string(i));
  }
}

void fill_tensors(const json& section_json, std::vector<NamedTensor> tensors,
                  const std::string& section) {
  const json& t = require(section_json, "tensors", section);
  if (!t.is_object())
    throw InternalError("checkpoint " + section + ": 'tensors' must be an object");
  for (NamedTensor& nt : tensors) fill_tensor(t, nt.name, *nt.data, section);
  if (t.size() != tensors.size())
    throw InternalError("checkpoint " + section + ": unexpected extra tensor entries");
}

Vocab vocab_from_items(const std::vector<std::string>& items, int unk_id,
                       const std::string& section) {
  if (items.empty())
    throw InternalError("checkpoint " + section + ": empty vocabulary");
  Vocab v(items[0]);
  for (std::size_t i = 1; i < items.size(); ++i) v.add(items[i]);
  if (v.size() != static_cast<int>(items.size()))
    throw InternalError("checkpoint " + section + ": vocabulary has duplicate entries");
  v.unk_id = unk_id;
  return v;
}

json tensors_to_json(std::vector<NamedTensor> tensors) {
  json t = json::object();
  for (const NamedTensor& nt : tensors) t[nt.name] = tensor_to_json(*nt.data);
  return t;
}

bool valid_variant(const std::string& v) {
  return v == "sum" || v == "avg" || v == "les" || v == "lea";
}

}  // namespace

void save_checkpoint(const Checkpoint& c, const std::string& path) {
  if (c.kind != "encoder" && c.kind != "generator")
    throw InternalError("checkpoint: unknown kind '" + c.kind + "'");
  if (!valid_variant(c.variant))
    throw InternalError("checkpoint: unknown encoder variant '" + c.variant + "'");
  if (c.kind == "generator" && !c.decoder)
    throw InternalError("checkpoint: generator checkpoint lacks a decoder");

  // A const-correct copy: tensors() needs mutable access for NamedTensor.
  Checkpoint& mut = const_cast<Checkpoint&>(c);

  json j;
  j["format"] = kCheckpointFormat;
  j["kind"] = c.kind;
  j["seed"] = c.seed;
  j["meta"] = {{"epochs", c.epochs}, {"lr", c.lr}};
  j["preprocess"] = {{"rewrite_idents", c.pre.rewrite_idents},
                     {"expand_abbrevs", c.pre.expand_abbrevs},
                     {"strip_idents", c.pre.strip_idents}};
  j["encoder"] = {{"variant", c.variant},
                  {"dim", c.encoder.dim},
                  {"kinds", vocab_items(c.encoder.kinds)},
                  {"words", vocab_items(c.encoder.words)},
                  {"tensors", tensors_to_json(mut.encoder.tensors())}};
  if (c.head) {
    if (static_cast<int>(c.classes.size()) != c.head->Ws.rows)
      throw InternalError("checkpoint: head rows and class names disagree");
    j["head"] = {{"classes", json(c.classes)},
                 {"tensors", tensors_to_json(mut.head->tensors())}};
  }
  if (c.decoder) {
    const DecoderParams& d = *c.decoder;
    j["decoder"] = {{"cell", decoder_cell_name(d)},
                    {"hidden", decoder_hidden(d)},
                    {"embed", decoder_embed(d)},
                    {"vocab", vocab_items(decoder_vocab(d))},
                    {"tensors", tensors_to_json(decoder_tensors(*mut.decoder))}};
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw UserError("cannot write checkpoint: " + path);
  out << j.dump() << "\n";
  out.flush();
  if (!out) throw UserError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UserError("cannot open checkpoint: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  json j = json::parse(ss.str(), nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object())
    throw InternalError("checkpoint " + path + ": not valid JSON (truncated or corrupt)");

  auto fmt = j.find("format");
  if (fmt == j.end() || !fmt->is_string())
    throw InternalError("checkpoint " + path + ": missing format string");
  if (fmt->get<std::string>() != kCheckpointFormat)
    throw UserError("checkpoint " + path + ": unsupported format '" +
                    fmt->get<std::string>() + "' (expected " + kCheckpointFormat + ")");

  Checkpoint c;
  c.kind = require_string(j, "kind", "header");
  if (c.kind != "encoder" && c.kind != "generator")
    throw InternalError("checkpoint header: unknown kind '" + c.kind + "'");
  {
    const json& seed = require(j, "seed", "header");
    if (!seed.is_number_unsigned() && !seed.is_number_integer())
      throw InternalError("checkpoint header: 'seed' must be an integer");
    c.seed = seed.get<std::uint64_t>();
  }
  const json& meta = require(j, "meta", "header");
  c.epochs = require_int(meta, "epochs", "meta");
  c.lr = require_double(meta, "lr", "meta");

  const json& pre = require(j, "preprocess", "header");
  c.pre.rewrite_idents = require_bool(pre, "rewrite_idents", "preprocess");
  c.pre.expand_abbrevs = require_bool(pre, "expand_abbrevs", "preprocess");
  c.pre.strip_idents = require_bool(pre, "strip_idents", "preprocess");

  const json& enc = require(j, "encoder", "header");
  c.variant = require_string(enc, "variant", "encoder");
  if (!valid_variant(c.variant))
    throw InternalError("checkpoint encoder: unknown variant '" + c.variant + "'");
  c.encoder.dim = require_int(enc, "dim", "encoder");
  if (c.encoder.dim <= 0) throw InternalError("checkpoint encoder: dim must be positive");
  c.encoder.kinds = vocab_from_items(require_string_list(enc, "kinds", "encoder"), 0, "encoder");
  c.encoder.words = vocab_from_items(require_string_list(enc, "words", "encoder"), 0, "encoder");
  c.encoder.allocate();
  fill_tensors(enc, c.encoder.tensors(), "encoder");

  if (j.contains("head")) {
    const json& head = j["head"];
    c.classes = require_string_list(head, "classes", "head");
    if (c.classes.size() < 2) throw InternalError("checkpoint head: needs at least 2 classes");
    if (std::set<std::string>(c.classes.begin(), c.classes.end()).size() != c.classes.size())
      throw InternalError("checkpoint head: duplicate class names");
    ClassifierHead h;
    h.allocate(static_cast<int>(c.classes.size()), c.encoder.dim);
    fill_tensors(head, h.tensors(), "head");
    c.head = std::move(h);
  }

  if (j.contains("decoder")) {
    const json& dec = j["decoder"];
    std::string cell = require_string(dec, "cell", "decoder");
    if (cell != "gru" && cell != "basic")
      throw InternalError("checkpoint decoder: unknown cell '" + cell + "'");
    int hidden = require_int(dec, "hidden", "decoder");
    int embed = require_int(dec, "embed", "decoder");
    if (hidden <= 0 || embed <= 0)
      throw InternalError("checkpoint decoder: dims must be positive");
    std::vector<std::string> words = require_string_list(dec, "vocab", "decoder");
    if (words.size() < 3 || words[0] != kStartWord || words[1] != kEndWord ||
        words[2] != kUnkWord)
      throw InternalError("checkpoint decoder: vocabulary must begin with the sentinels");
    Vocab vocab = vocab_from_items(words, kUnkId, "decoder");
    DecoderParams d = make_decoder(cell, vocab, hidden, embed, c.encoder.dim);
    fill_tensors(dec, decoder_tensors(d), "decoder");
    c.decoder = std::move(d);
  } else if (c.kind == "generator") {
    throw InternalError("checkpoint decoder: generator checkpoint lacks a decoder section");
  }

  return c;
}

ParseNode preprocess_tree(const Preprocess& pre, const ParseNode& tree) {
  if (pre.strip_idents) return strip_identifiers(tree);
  if (!pre.rewrite_idents) return tree;
  RewritePolicy policy;
  policy.expand_abbreviations = pre.expand_abbrevs;
  return rewrite_identifiers(tree, policy);
}

Vec checkpoint_encode(const Checkpoint& c, const ParseNode& preprocessed) {
  return encode_for_classify(preprocessed, c.encoder, c.variant);
}

}  // namespace treecomment
