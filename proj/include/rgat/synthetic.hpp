#pragma once

#include <cstdint>
#include <vector>

#include "rgat/dataset.hpp"

namespace rgat {

struct SynthOptions {
  int n_words = 40;         // filler token inventory
  int n_pos = 5;
  int n_filler_labels = 6;  // besides the cue and anchor labels
  int min_tokens = 5;       // must be >= 4
  int max_tokens = 9;
};

inline constexpr const char* kCueToken = "cue";
inline constexpr const char* kAnchorToken = "anchor";
inline constexpr const char* kCuePositiveLabel = "cue_pos";
inline constexpr const char* kCueNegativeLabel = "cue_neg";
inline constexpr const char* kAnchorLabel = "anch";

// Label-determined synthetic task. Each instance is a uniform random tree;
// the target token has two designated neighbors with fixed tokens, the cue
// ("cue") and the anchor ("anchor"). The label on the target-cue edge alone
// decides the polarity: cue_pos -> positive, cue_neg -> negative, a plain
// filler label -> neutral. The anchor edge always carries the same label,
// giving attention a stable alternative to point at. Tree shape, target
// position and every token identity are drawn independently of the class,
// so models that cannot read edge labels carry no class signal beyond
// chance.
std::vector<RawRecord> gen_synthetic(int n_instances, const SynthOptions& opt,
                                     uint64_t seed);

}  // namespace rgat
