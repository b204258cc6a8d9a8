#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace rgat {

enum class Variant { kTransformer, kGat, kGatRatt, kRgat };

Variant variant_from_string(const std::string& s);
std::string variant_string(Variant v);

// Every architectural and optimization hyperparameter. A serialized config
// plus the data files and the seed fully determine a run.
struct ModelConfig {
  // embeddings
  int word_dim = 300;
  int pos_dim = 30;
  int position_dim = 30;
  int relation_dim = 30;
  int position_clip = 50;  // target-relative distance clipped to [-clip, clip]
  std::string pretrained_embeddings;  // optional GloVe-style text file
  bool freeze_word_embeddings = false;

  // contextual encoder (per-direction hidden; output is twice this)
  int lstm_hidden = 50;

  // graph encoder
  int hidden = 100;
  int heads = 5;
  int layers = 6;
  Variant variant = Variant::kRgat;
  bool weighted_factors = false;

  // head
  int fused_dim = 50;

  // training
  double input_dropout = 0.7;
  double l2 = 1e-5;
  double lr = 1e-3;
  int epochs = 30;
  int batch_size = 32;
  int patience = 10;
  uint64_t seed = 1;

  void validate() const;  // throws on out-of-range values

  // flat "key = value" text, '#' comments; unknown keys are rejected
  static ModelConfig from_file(const std::string& path);
  static ModelConfig from_text(const std::string& text);
  void apply_entry(const std::string& key, const std::string& value);
  std::map<std::string, std::string> to_map() const;
  std::string to_text() const;
};

}  // namespace rgat
