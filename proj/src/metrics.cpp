#include "rgat/metrics.hpp"

#include <cstdio>
#include <stdexcept>

namespace rgat {

MetricsReport MetricsReport::from_pairs(std::span<const int> gold,
                                        std::span<const int> pred) {
  if (gold.size() != pred.size())
    throw std::invalid_argument("metrics: gold/pred length mismatch");
  if (gold.empty()) throw std::invalid_argument("metrics: empty evaluation set");
  MetricsReport r;
  for (size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] < 0 || gold[i] >= kNumClasses || pred[i] < 0 ||
        pred[i] >= kNumClasses)
      throw std::invalid_argument("metrics: class index out of range");
    r.confusion[static_cast<size_t>(gold[i])][static_cast<size_t>(pred[i])]++;
  }
  r.total = static_cast<int64_t>(gold.size());
  int64_t correct = 0;
  double f1_sum = 0.0;
  for (int c = 0; c < kNumClasses; ++c) {
    correct += r.confusion[c][c];
    int64_t tp = r.confusion[c][c];
    int64_t fp = 0, fn = 0;
    for (int o = 0; o < kNumClasses; ++o) {
      if (o == c) continue;
      fp += r.confusion[o][c];
      fn += r.confusion[c][o];
    }
    ClassScore& s = r.per_class[static_cast<size_t>(c)];
    s.precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    s.recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    s.f1 = s.precision + s.recall > 0.0
               ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
               : 0.0;
    f1_sum += s.f1;
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(r.total);
  r.macro_f1 = f1_sum / kNumClasses;
  return r;
}

std::string MetricsReport::summary() const {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "acc=%.4f macro_f1=%.4f", accuracy, macro_f1);
  return buf;
}

}  // namespace rgat
