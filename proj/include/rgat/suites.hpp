#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "rgat/config.hpp"
#include "rgat/dataset.hpp"

namespace rgat {

struct SuiteRow {
  std::string suite;
  std::string condition;  // variant / parser condition / masked label / depth
  uint64_t seed = 0;
  int layers = 0;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double accuracy_delta = 0.0;  // vs the suite's baseline, where one exists
  std::map<std::string, double> extras;
};

struct SuiteResult {
  std::string suite;
  std::vector<SuiteRow> rows;
};

struct SuiteOptions {
  std::vector<uint64_t> seeds = {1, 2, 3};  // ablation model seeds
  int random_tree_seeds = 10;               // parse_perturb tree draws
  std::vector<std::string> mask_labels;     // label_ablation; empty = all
  bool delete_edges = false;                // drop edges instead of relabeling
  int jobs = 1;                             // parallel trainings
};

// Suites: ablation (all four variants x seeds), parse_perturb (gold /
// permuted labels / random trees averaged over the tree seeds),
// label_ablation (retrain with each label masked, decrement vs baseline),
// weighted_factors (trainable beta1/beta2 vs the fixed model, with per-layer
// beta statistics), depth_sweep (layers 1..8). Training data defines the
// vocabularies; the second record set is used for both early stopping and
// the reported scores.
SuiteResult run_suite(const std::string& name, const ModelConfig& base,
                      const std::vector<RawRecord>& train_records,
                      const std::vector<RawRecord>& test_records,
                      const SuiteOptions& opt);

void write_suite_csv(const SuiteResult& result, std::ostream& out);
void write_suite_json(const SuiteResult& result, std::ostream& out);

}  // namespace rgat
