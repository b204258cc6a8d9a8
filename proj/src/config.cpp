#include "rgat/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rgat {

Variant variant_from_string(const std::string& s) {
  if (s == "transformer") return Variant::kTransformer;
  if (s == "gat") return Variant::kGat;
  if (s == "gat-ratt") return Variant::kGatRatt;
  if (s == "rgat") return Variant::kRgat;
  throw std::invalid_argument(
      "bad variant '" + s + "' (want transformer|gat|gat-ratt|rgat)");
}

std::string variant_string(Variant v) {
  switch (v) {
    case Variant::kTransformer: return "transformer";
    case Variant::kGat: return "gat";
    case Variant::kGatRatt: return "gat-ratt";
    case Variant::kRgat: return "rgat";
  }
  throw std::invalid_argument("bad variant value");
}

void ModelConfig::validate() const {
  if (word_dim < 1 || pos_dim < 1 || position_dim < 1 || relation_dim < 1)
    throw std::invalid_argument("config: embedding dimensions must be positive");
  if (position_clip < 1)
    throw std::invalid_argument("config: position_clip must be positive");
  if (lstm_hidden < 1) throw std::invalid_argument("config: lstm_hidden must be positive");
  if (hidden < 1 || heads < 1 || hidden % heads != 0)
    throw std::invalid_argument("config: hidden must be a positive multiple of heads");
  if (layers < 1 || layers > 8)
    throw std::invalid_argument("config: layers must be in [1,8]");
  if (fused_dim < 1) throw std::invalid_argument("config: fused_dim must be positive");
  if (input_dropout < 0.0 || input_dropout >= 1.0)
    throw std::invalid_argument("config: input_dropout must be in [0,1)");
  if (l2 < 0.0) throw std::invalid_argument("config: l2 must be >= 0");
  if (lr <= 0.0) throw std::invalid_argument("config: lr must be > 0");
  if (epochs < 1 || batch_size < 1 || patience < 0)
    throw std::invalid_argument("config: bad training schedule");
  if (weighted_factors &&
      (variant == Variant::kTransformer || variant == Variant::kGat))
    throw std::invalid_argument(
        "config: weighted_factors needs a relation-aware variant");
}

namespace {

int to_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    int x = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing chars");
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad integer for " + key + ": '" + v + "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing chars");
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad number for " + key + ": '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("config: bad bool for " + key + ": '" + v + "'");
}

uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    uint64_t x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing chars");
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad integer for " + key + ": '" + v + "'");
  }
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

void ModelConfig::apply_entry(const std::string& key, const std::string& value) {
  if (key == "word_dim") word_dim = to_int(key, value);
  else if (key == "pos_dim") pos_dim = to_int(key, value);
  else if (key == "position_dim") position_dim = to_int(key, value);
  else if (key == "relation_dim") relation_dim = to_int(key, value);
  else if (key == "position_clip") position_clip = to_int(key, value);
  else if (key == "pretrained_embeddings") pretrained_embeddings = value;
  else if (key == "freeze_word_embeddings") freeze_word_embeddings = to_bool(key, value);
  else if (key == "lstm_hidden") lstm_hidden = to_int(key, value);
  else if (key == "hidden") hidden = to_int(key, value);
  else if (key == "heads") heads = to_int(key, value);
  else if (key == "layers") layers = to_int(key, value);
  else if (key == "variant") variant = variant_from_string(value);
  else if (key == "weighted_factors") weighted_factors = to_bool(key, value);
  else if (key == "fused_dim") fused_dim = to_int(key, value);
  else if (key == "input_dropout") input_dropout = to_double(key, value);
  else if (key == "l2") l2 = to_double(key, value);
  else if (key == "lr") lr = to_double(key, value);
  else if (key == "epochs") epochs = to_int(key, value);
  else if (key == "batch_size") batch_size = to_int(key, value);
  else if (key == "patience") patience = to_int(key, value);
  else if (key == "seed") seed = to_u64(key, value);
  else throw std::invalid_argument("config: unknown key '" + key + "'");
}

ModelConfig ModelConfig::from_text(const std::string& text) {
  ModelConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected key = value");
    cfg.apply_entry(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

ModelConfig ModelConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

std::map<std::string, std::string> ModelConfig::to_map() const {
  return {
      {"word_dim", std::to_string(word_dim)},
      {"pos_dim", std::to_string(pos_dim)},
      {"position_dim", std::to_string(position_dim)},
      {"relation_dim", std::to_string(relation_dim)},
      {"position_clip", std::to_string(position_clip)},
      {"pretrained_embeddings", pretrained_embeddings},
      {"freeze_word_embeddings", freeze_word_embeddings ? "true" : "false"},
      {"lstm_hidden", std::to_string(lstm_hidden)},
      {"hidden", std::to_string(hidden)},
      {"heads", std::to_string(heads)},
      {"layers", std::to_string(layers)},
      {"variant", variant_string(variant)},
      {"weighted_factors", weighted_factors ? "true" : "false"},
      {"fused_dim", std::to_string(fused_dim)},
      {"input_dropout", format_double(input_dropout)},
      {"l2", format_double(l2)},
      {"lr", format_double(lr)},
      {"epochs", std::to_string(epochs)},
      {"batch_size", std::to_string(batch_size)},
      {"patience", std::to_string(patience)},
      {"seed", std::to_string(seed)},
  };
}

std::string ModelConfig::to_text() const {
  std::string out;
  for (const auto& [k, v] : to_map()) {
    out += k;
    out += " = ";
    out += v;
    out += "\n";
  }
  return out;
}

}  // namespace rgat
