#pragma once

#include <string>

#include "rgat/model.hpp"

namespace rgat {

// Checkpoint container, one file:
//   bytes 0..7   magic "RGATCKP1"
//   bytes 8..15  manifest length (uint64, little-endian)
//   manifest     JSON: config map, vocabularies, tensor table
//                [{name, shape, trainable}, ...]
//   payload      tensor values in table order, doubles, little-endian
void save_checkpoint(const std::string& path, const RgatModel& model);
RgatModel load_checkpoint(const std::string& path);

}  // namespace rgat
