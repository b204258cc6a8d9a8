#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

namespace rgat {

inline constexpr int kNumClasses = 3;

struct ClassScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct MetricsReport {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::array<ClassScore, kNumClasses> per_class{};
  // confusion[gold][pred]
  std::array<std::array<int64_t, kNumClasses>, kNumClasses> confusion{};
  int64_t total = 0;

  // Per-class F1 is 0 when precision+recall is undefined; macro-F1 is the
  // unweighted mean over the three classes.
  static MetricsReport from_pairs(std::span<const int> gold,
                                  std::span<const int> pred);

  std::string summary() const;
};

}  // namespace rgat
