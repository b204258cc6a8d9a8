#pragma once

#include <vector>

#include "rgat/dataset.hpp"
#include "rgat/metrics.hpp"
#include "rgat/model.hpp"

namespace rgat {

struct EpochStats {
  int epoch = 0;          // 1-based
  double train_loss = 0;  // summed objective over the epoch, L2 included
  double dev_accuracy = 0;
  double dev_macro_f1 = 0;
};

struct TrainResult {
  std::vector<EpochStats> epochs;
  int best_epoch = 0;
  MetricsReport best_dev;
};

// Trains with Adamax on summed cross-entropy + L2 per batch. Deterministic
// given config+seed: epoch shuffles and dropout masks come from named
// streams derived from the seed. Keeps the best-dev-accuracy parameters and
// restores them into the model before returning. Stops early after
// `patience` epochs without improvement, or once dev accuracy reaches 1.
TrainResult train_model(RgatModel& model, const Dataset& train,
                        const Dataset& dev);

MetricsReport evaluate_model(const RgatModel& model, const Dataset& data);
std::vector<int> predict_all(const RgatModel& model, const Dataset& data);

}  // namespace rgat
