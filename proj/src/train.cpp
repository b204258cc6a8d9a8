#include "rgat/train.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "rgat/adamax.hpp"

namespace rgat {

std::vector<int> predict_all(const RgatModel& model, const Dataset& data) {
  int n = static_cast<int>(data.size());
  std::vector<int> pred(static_cast<size_t>(n));
  std::exception_ptr error;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    try {
      pred[static_cast<size_t>(i)] =
          model.predict(data.instances[static_cast<size_t>(i)]);
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return pred;
}

MetricsReport evaluate_model(const RgatModel& model, const Dataset& data) {
  if (data.instances.empty())
    throw std::invalid_argument("evaluate: empty dataset");
  std::vector<int> pred = predict_all(model, data);
  std::vector<int> gold;
  gold.reserve(data.size());
  for (const Instance& inst : data.instances)
    gold.push_back(polarity_index(inst.polarity));
  return MetricsReport::from_pairs(gold, pred);
}

TrainResult train_model(RgatModel& model, const Dataset& train,
                        const Dataset& dev) {
  const ModelConfig& cfg = model.config();
  if (train.instances.empty() || dev.instances.empty())
    throw std::invalid_argument("train: empty dataset");

  Adamax opt(model.params().trainable_params(), cfg.lr);
  Rng base(cfg.seed);
  TrainResult result;

  std::vector<size_t> order(train.size());
  std::iota(order.begin(), order.end(), size_t{0});

  std::vector<Tensor> best_values;
  double best_acc = -1.0;
  int stale_epochs = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng shuffle_rng = base.derive("shuffle", static_cast<uint64_t>(epoch));
    shuffle_rng.shuffle(order);
    Rng dropout_rng = base.derive("dropout", static_cast<uint64_t>(epoch));

    double epoch_loss = 0.0;
    size_t batch_count = 0;
    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(cfg.batch_size), ++batch_count) {
      size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
      opt.zero_grad();
      Tape t;
      Var loss;
      for (size_t k = start; k < end; ++k) {
        const Instance& inst = train.instances[order[k]];
        Var logits = model.forward(t, inst, /*training=*/true, &dropout_rng);
        Var nll = model.nll(t, logits, inst.polarity);
        loss = k == start ? nll : t.add(loss, nll);
      }
      loss = t.add(loss, model.l2_penalty(t));
      double loss_value = t.value(loss)[0];
      if (!std::isfinite(loss_value))
        throw std::runtime_error("train: non-finite loss at epoch " +
                                 std::to_string(epoch) + " batch " +
                                 std::to_string(batch_count));
      epoch_loss += loss_value;
      t.backward(loss);
      opt.step();
    }

    MetricsReport dev_metrics = evaluate_model(model, dev);
    result.epochs.push_back(
        {epoch, epoch_loss, dev_metrics.accuracy, dev_metrics.macro_f1});
    if (dev_metrics.accuracy > best_acc) {
      best_acc = dev_metrics.accuracy;
      best_values = model.snapshot_values();
      result.best_epoch = epoch;
      result.best_dev = dev_metrics;
      stale_epochs = 0;
    } else if (++stale_epochs >= cfg.patience) {
      break;
    }
    if (best_acc >= 1.0) break;  // dev accuracy cannot improve further
  }

  model.restore_values(best_values);
  return result;
}

}  // namespace rgat
