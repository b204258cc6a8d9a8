#include "rgat/suites.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "rgat/model.hpp"
#include "rgat/train.hpp"

namespace rgat {

namespace {

using GraphTransform = std::function<DepGraph(
    const DepGraph&, const DataVocabs&, size_t index, bool is_test)>;
using PostHook = std::function<void(const RgatModel&, SuiteRow&)>;

SuiteRow run_one(const ModelConfig& cfg,
                 const std::vector<RawRecord>& train_records,
                 const std::vector<RawRecord>& test_records,
                 const GraphTransform& transform, std::string suite,
                 std::string condition, uint64_t row_seed,
                 const PostHook& post = nullptr) {
  DataVocabs vocabs;
  Dataset train = build_dataset(train_records, vocabs, true);
  Dataset test = build_dataset(test_records, vocabs, false);
  if (transform) {
    for (size_t i = 0; i < train.instances.size(); ++i)
      train.instances[i].graph =
          transform(train.instances[i].graph, vocabs, i, false);
    for (size_t i = 0; i < test.instances.size(); ++i)
      test.instances[i].graph =
          transform(test.instances[i].graph, vocabs, i, true);
  }
  RgatModel model(cfg, std::move(vocabs), cfg.seed);
  TrainResult t = train_model(model, train, test);
  SuiteRow row;
  row.suite = std::move(suite);
  row.condition = std::move(condition);
  row.seed = row_seed;
  row.layers = cfg.layers;
  row.accuracy = t.best_dev.accuracy;
  row.macro_f1 = t.best_dev.macro_f1;
  if (post) post(model, row);
  return row;
}

void run_parallel(std::vector<std::function<void()>>& tasks, int jobs) {
  jobs = std::max(1, std::min<int>(jobs, static_cast<int>(tasks.size())));
  if (jobs == 1) {
    for (auto& task : tasks) task();
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::exception_ptr> errors(tasks.size());
  auto worker = [&] {
    while (true) {
      size_t i = next.fetch_add(1);
      if (i >= tasks.size()) break;
      try {
        tasks[i]();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(static_cast<size_t>(jobs));
  for (int t = 0; t < jobs; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

void beta_statistics(const RgatModel& model, SuiteRow& row) {
  for (const char* which : {"beta1", "beta2"}) {
    std::vector<double> values;
    for (int l = 0; l < model.config().layers; ++l) {
      const Parameter* p = model.params().find(
          "graph.layer" + std::to_string(l) + "." + which);
      if (p) values.push_back(p->value[0]);
    }
    if (values.empty()) continue;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(values.size());
    row.extras[std::string(which) + "_mean"] = mean;
    row.extras[std::string(which) + "_std"] = std::sqrt(var);
  }
}

SuiteResult suite_ablation(const ModelConfig& base,
                           const std::vector<RawRecord>& train_records,
                           const std::vector<RawRecord>& test_records,
                           const SuiteOptions& opt) {
  SuiteResult result{"ablation", {}};
  const Variant variants[] = {Variant::kTransformer, Variant::kGat,
                              Variant::kGatRatt, Variant::kRgat};
  result.rows.resize(4 * opt.seeds.size());
  std::vector<std::function<void()>> tasks;
  size_t slot = 0;
  for (Variant v : variants)
    for (uint64_t s : opt.seeds) {
      ModelConfig cfg = base;
      cfg.variant = v;
      cfg.weighted_factors = false;
      cfg.seed = s;
      tasks.push_back([&result, slot, cfg, &train_records, &test_records, v, s] {
        result.rows[slot] = run_one(cfg, train_records, test_records, nullptr,
                                    "ablation", variant_string(v), s);
      });
      ++slot;
    }
  run_parallel(tasks, opt.jobs);
  return result;
}

SuiteResult suite_parse_perturb(const ModelConfig& base,
                                const std::vector<RawRecord>& train_records,
                                const std::vector<RawRecord>& test_records,
                                const SuiteOptions& opt) {
  SuiteResult result{"parse_perturb", {}};
  int k = opt.random_tree_seeds;
  result.rows.resize(static_cast<size_t>(2 + k));
  std::vector<std::function<void()>> tasks;

  tasks.push_back([&result, &base, &train_records, &test_records] {
    result.rows[0] = run_one(base, train_records, test_records, nullptr,
                             "parse_perturb", "gold", base.seed);
  });

  uint64_t permute_seed = base.seed;
  GraphTransform permute = [permute_seed](const DepGraph& g, const DataVocabs&,
                                          size_t index, bool is_test) {
    Rng stream = Rng(permute_seed)
                     .derive(is_test ? "permute-test" : "permute-train", index);
    return permute_labels(g, stream.seed());
  };
  tasks.push_back([&result, &base, &train_records, &test_records, permute] {
    result.rows[1] = run_one(base, train_records, test_records, permute,
                             "parse_perturb", "permuted-labels", base.seed);
  });

  for (int t = 1; t <= k; ++t) {
    uint64_t tree_seed = static_cast<uint64_t>(t);
    GraphTransform trees = [tree_seed](const DepGraph& g,
                                       const DataVocabs& vocabs, size_t index,
                                       bool is_test) {
      Rng stream =
          Rng(tree_seed).derive(is_test ? "tree-test" : "tree-train", index);
      return random_tree(g.n, vocabs.relations, stream.seed());
    };
    size_t slot = static_cast<size_t>(1 + t);
    tasks.push_back(
        [&result, slot, &base, &train_records, &test_records, trees, tree_seed] {
          result.rows[slot] = run_one(base, train_records, test_records, trees,
                                      "parse_perturb", "random-tree", tree_seed);
        });
  }
  run_parallel(tasks, opt.jobs);

  SuiteRow mean;
  mean.suite = "parse_perturb";
  mean.condition = "random-tree-mean";
  mean.layers = base.layers;
  for (int t = 0; t < k; ++t) {
    mean.accuracy += result.rows[static_cast<size_t>(2 + t)].accuracy;
    mean.macro_f1 += result.rows[static_cast<size_t>(2 + t)].macro_f1;
  }
  mean.accuracy /= k;
  mean.macro_f1 /= k;
  result.rows.push_back(std::move(mean));
  return result;
}

SuiteResult suite_label_ablation(const ModelConfig& base,
                                 const std::vector<RawRecord>& train_records,
                                 const std::vector<RawRecord>& test_records,
                                 const SuiteOptions& opt) {
  SuiteResult result{"label_ablation", {}};
  std::vector<std::string> labels = opt.mask_labels;
  if (labels.empty()) {
    DataVocabs probe;
    build_dataset(train_records, probe, true);
    for (int id : probe.relations.regular_ids())
      labels.push_back(probe.relations.label(id));
  }
  result.rows.resize(1 + labels.size());
  std::vector<std::function<void()>> tasks;
  tasks.push_back([&result, &base, &train_records, &test_records] {
    result.rows[0] = run_one(base, train_records, test_records, nullptr,
                             "label_ablation", "baseline", base.seed);
  });
  bool delete_edges = opt.delete_edges;
  for (size_t li = 0; li < labels.size(); ++li) {
    std::string label = labels[li];
    GraphTransform mask = [label, delete_edges](const DepGraph& g,
                                                const DataVocabs& vocabs,
                                                size_t, bool) {
      int id = vocabs.relations.require(label);
      return delete_edges ? remove_label_edges(g, id) : mask_label(g, id);
    };
    size_t slot = 1 + li;
    tasks.push_back(
        [&result, slot, &base, &train_records, &test_records, mask, label] {
          result.rows[slot] = run_one(base, train_records, test_records, mask,
                                      "label_ablation", label, base.seed);
        });
  }
  run_parallel(tasks, opt.jobs);
  for (size_t li = 1; li < result.rows.size(); ++li)
    result.rows[li].accuracy_delta =
        result.rows[0].accuracy - result.rows[li].accuracy;
  return result;
}

SuiteResult suite_weighted_factors(const ModelConfig& base,
                                   const std::vector<RawRecord>& train_records,
                                   const std::vector<RawRecord>& test_records,
                                   const SuiteOptions& opt) {
  SuiteResult result{"weighted_factors", {}};
  result.rows.resize(2);
  std::vector<std::function<void()>> tasks;
  ModelConfig fixed = base;
  fixed.weighted_factors = false;
  tasks.push_back([&result, fixed, &train_records, &test_records] {
    result.rows[0] = run_one(fixed, train_records, test_records, nullptr,
                             "weighted_factors", "fixed", fixed.seed);
  });
  ModelConfig weighted = base;
  weighted.weighted_factors = true;
  if (weighted.variant == Variant::kTransformer ||
      weighted.variant == Variant::kGat)
    weighted.variant = Variant::kRgat;
  tasks.push_back([&result, weighted, &train_records, &test_records] {
    result.rows[1] =
        run_one(weighted, train_records, test_records, nullptr,
                "weighted_factors", "weighted", weighted.seed, beta_statistics);
  });
  run_parallel(tasks, opt.jobs);
  result.rows[1].accuracy_delta =
      result.rows[0].accuracy - result.rows[1].accuracy;
  return result;
}

SuiteResult suite_depth_sweep(const ModelConfig& base,
                              const std::vector<RawRecord>& train_records,
                              const std::vector<RawRecord>& test_records,
                              const SuiteOptions& opt) {
  SuiteResult result{"depth_sweep", {}};
  result.rows.resize(8);
  std::vector<std::function<void()>> tasks;
  for (int depth = 1; depth <= 8; ++depth) {
    ModelConfig cfg = base;
    cfg.layers = depth;
    size_t slot = static_cast<size_t>(depth - 1);
    tasks.push_back([&result, slot, cfg, &train_records, &test_records] {
      result.rows[slot] = run_one(cfg, train_records, test_records, nullptr,
                                  "depth_sweep", "depth", cfg.seed);
    });
  }
  run_parallel(tasks, opt.jobs);
  return result;
}

}  // namespace

SuiteResult run_suite(const std::string& name, const ModelConfig& base,
                      const std::vector<RawRecord>& train_records,
                      const std::vector<RawRecord>& test_records,
                      const SuiteOptions& opt) {
  base.validate();
  if (name == "ablation")
    return suite_ablation(base, train_records, test_records, opt);
  if (name == "parse_perturb")
    return suite_parse_perturb(base, train_records, test_records, opt);
  if (name == "label_ablation")
    return suite_label_ablation(base, train_records, test_records, opt);
  if (name == "weighted_factors")
    return suite_weighted_factors(base, train_records, test_records, opt);
  if (name == "depth_sweep")
    return suite_depth_sweep(base, train_records, test_records, opt);
  throw std::invalid_argument(
      "unknown suite '" + name +
      "' (want ablation|parse_perturb|label_ablation|weighted_factors|depth_sweep)");
}

void write_suite_csv(const SuiteResult& result, std::ostream& out) {
  out << "suite,condition,seed,layers,accuracy,macro_f1,accuracy_delta\n";
  char buf[128];
  for (const SuiteRow& r : result.rows) {
    std::snprintf(buf, sizeof(buf), ",%llu,%d,%.6f,%.6f,%.6f",
                  static_cast<unsigned long long>(r.seed), r.layers, r.accuracy,
                  r.macro_f1, r.accuracy_delta);
    out << r.suite << "," << r.condition << buf << "\n";
  }
}

void write_suite_json(const SuiteResult& result, std::ostream& out) {
  nlohmann::json j;
  j["suite"] = result.suite;
  j["rows"] = nlohmann::json::array();
  for (const SuiteRow& r : result.rows) {
    nlohmann::json row;
    row["suite"] = r.suite;
    row["condition"] = r.condition;
    row["seed"] = r.seed;
    row["layers"] = r.layers;
    row["accuracy"] = r.accuracy;
    row["macro_f1"] = r.macro_f1;
    row["accuracy_delta"] = r.accuracy_delta;
    for (const auto& [k, v] : r.extras) row[k] = v;
    j["rows"].push_back(std::move(row));
  }
  out << j.dump(2) << "\n";
}

}  // namespace rgat
