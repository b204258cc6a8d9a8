// Command-line surface: ingest, train, eval, suite, gradcheck, trace, synth.
// Every command writes its machine-readable outputs plus a manifest.json
// (config echo, input digests, seed, output list) into the --out directory;
// reruns with the same inputs reproduce the outputs byte for byte.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rgat/checkpoint.hpp"
#include "rgat/conllu.hpp"
#include "rgat/gradcheck.hpp"
#include "rgat/kernels.hpp"
#include "rgat/model.hpp"
#include "rgat/suites.hpp"
#include "rgat/synthetic.hpp"
#include "rgat/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rgat;

namespace {

constexpr const char* kVersion = "rgat 1.0.0";

std::string fnv1a_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  uint64_t h = 0xcbf29ce484222325ull;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ull;
    }
  }
  char hex[20];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

struct RunManifest {
  std::string command;
  std::map<std::string, std::string> config;
  std::map<std::string, std::string> inputs;  // path -> digest
  std::vector<std::string> outputs;
  uint64_t seed = 0;

  void add_input(const std::string& path) { inputs[path] = fnv1a_file(path); }

  void write(const fs::path& dir) const {
    json j;
    j["version"] = kVersion;
    j["command"] = command;
    j["config"] = config;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    j["seed"] = seed;
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    out << j.dump(2) << "\n";
  }
};

fs::path prepare_out(const std::string& out) {
  fs::path dir(out.empty() ? "run" : out);
  fs::create_directories(dir);
  return dir;
}

// shared model/data flags
struct CommonOpts {
  std::string config_path;
  std::string out = "run";
  uint64_t seed = 0;
  bool seed_set = false;
  std::string variant;
  int layers = 0;
  bool weighted_factors = false;
  std::vector<std::string> mask_labels;
  bool random_tree = false;
  bool permute_labels_flag = false;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_perturb) {
  cmd->add_option("--config", o.config_path, "key = value config file");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--seed", o.seed, "override the config seed")
      ->each([&o](const std::string&) { o.seed_set = true; });
  cmd->add_option("--variant", o.variant,
                  "graph encoder variant: transformer|gat|gat-ratt|rgat");
  cmd->add_option("--layers", o.layers, "graph encoder depth (1-8)");
  cmd->add_flag("--weighted-factors", o.weighted_factors,
                "trainable attention mixing factors");
  if (with_perturb) {
    cmd->add_option("--mask-label", o.mask_labels,
                    "replace this dependency label by <removed> (repeatable)");
    cmd->add_flag("--random-tree", o.random_tree,
                  "replace every dependency graph by a seeded random tree");
    cmd->add_flag("--permute-labels", o.permute_labels_flag,
                  "randomly permute edge labels within each graph");
  }
}

ModelConfig resolve_config(const CommonOpts& o) {
  ModelConfig cfg = o.config_path.empty() ? ModelConfig{}
                                          : ModelConfig::from_file(o.config_path);
  if (o.seed_set) cfg.seed = o.seed;
  if (!o.variant.empty()) cfg.variant = variant_from_string(o.variant);
  if (o.layers > 0) cfg.layers = o.layers;
  if (o.weighted_factors) cfg.weighted_factors = true;
  cfg.validate();
  return cfg;
}

void perturb_dataset(Dataset& ds, const DataVocabs& vocabs, const CommonOpts& o,
                     uint64_t seed, const std::string& stream) {
  for (const std::string& label : o.mask_labels) {
    int id = vocabs.relations.require(label);
    for (Instance& inst : ds.instances)
      inst.graph = mask_label(inst.graph, id);
  }
  if (o.random_tree)
    for (size_t i = 0; i < ds.instances.size(); ++i)
      ds.instances[i].graph =
          random_tree(ds.instances[i].graph.n, vocabs.relations,
                      Rng(seed).derive("tree-" + stream, i).seed());
  if (o.permute_labels_flag)
    for (size_t i = 0; i < ds.instances.size(); ++i)
      ds.instances[i].graph = permute_labels(
          ds.instances[i].graph, Rng(seed).derive("permute-" + stream, i).seed());
}

void write_epochs_csv(const fs::path& path, const TrainResult& r) {
  std::ofstream out(path, std::ios::binary);
  out << "epoch,train_loss,dev_accuracy,dev_macro_f1\n";
  char buf[128];
  for (const EpochStats& e : r.epochs) {
    std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%.6f\n", e.epoch,
                  e.train_loss, e.dev_accuracy, e.dev_macro_f1);
    out << buf;
  }
}

json metrics_json(const MetricsReport& m) {
  json j;
  j["accuracy"] = m.accuracy;
  j["macro_f1"] = m.macro_f1;
  for (int c = 0; c < kNumClasses; ++c) {
    json pc;
    pc["precision"] = m.per_class[static_cast<size_t>(c)].precision;
    pc["recall"] = m.per_class[static_cast<size_t>(c)].recall;
    pc["f1"] = m.per_class[static_cast<size_t>(c)].f1;
    j["per_class"][std::string(polarity_string(polarity_from_index(c)))] = pc;
  }
  j["confusion"] = m.confusion;
  j["total"] = m.total;
  return j;
}

int cmd_synth(int n, uint64_t seed, const SynthOptions& opt,
              const std::string& out) {
  fs::path dir = prepare_out(out);
  std::vector<RawRecord> records = gen_synthetic(n, opt, seed);
  write_jsonl_file((dir / "data.jsonl").string(), records);
  RunManifest m;
  m.command = "synth";
  m.seed = seed;
  m.config = {{"n", std::to_string(n)},
              {"words", std::to_string(opt.n_words)},
              {"pos", std::to_string(opt.n_pos)},
              {"fillers", std::to_string(opt.n_filler_labels)},
              {"min_tokens", std::to_string(opt.min_tokens)},
              {"max_tokens", std::to_string(opt.max_tokens)}};
  m.outputs = {"data.jsonl"};
  m.write(dir);
  std::cout << "wrote " << (dir / "data.jsonl").string() << " (" << n
            << " instances)\n";
  return 0;
}

int cmd_ingest(const std::string& conllu_path, const std::string& targets_path,
               const std::string& out) {
  fs::path dir = prepare_out(out);
  std::ifstream cin_(conllu_path);
  if (!cin_) throw std::runtime_error("cannot open " + conllu_path);
  std::vector<ConlluSentence> sentences = read_conllu(cin_);

  // targets: sentence_index <tab> start <tab> end <tab> polarity
  std::ifstream tin(targets_path);
  if (!tin) throw std::runtime_error("cannot open " + targets_path);
  std::vector<RawRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(tin, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    long sent_idx;
    int begin, end;
    std::string polarity;
    if (!(ss >> sent_idx >> begin >> end >> polarity))
      throw std::runtime_error("targets line " + std::to_string(line_no) +
                               ": want 'sentence start end polarity'");
    if (sent_idx < 0 || sent_idx >= static_cast<long>(sentences.size()))
      throw std::runtime_error("targets line " + std::to_string(line_no) +
                               ": sentence index out of range");
    const ConlluSentence& s = sentences[static_cast<size_t>(sent_idx)];
    polarity_from_string(polarity);
    if (begin < 0 || begin >= end || end > static_cast<int>(s.forms.size()))
      throw std::runtime_error("targets line " + std::to_string(line_no) +
                               ": bad span");
    RawRecord r;
    r.tokens = s.forms;
    r.pos = s.upos;
    r.head = s.heads;
    r.deprel = s.deprels;
    r.target_begin = begin;
    r.target_end = end;
    r.polarity = polarity;
    records.push_back(std::move(r));
  }
  write_jsonl_file((dir / "instances.jsonl").string(), records);
  RunManifest m;
  m.command = "ingest";
  m.add_input(conllu_path);
  m.add_input(targets_path);
  m.outputs = {"instances.jsonl"};
  m.write(dir);
  std::cout << "wrote " << (dir / "instances.jsonl").string() << " ("
            << records.size() << " instances)\n";
  return 0;
}

int cmd_train(const std::string& train_path, const std::string& dev_path,
              const CommonOpts& o) {
  fs::path dir = prepare_out(o.out);
  ModelConfig cfg = resolve_config(o);

  std::vector<RawRecord> train_records = read_jsonl_file(train_path);
  std::vector<RawRecord> dev_records = read_jsonl_file(dev_path);
  DataVocabs vocabs;
  Dataset train = build_dataset(train_records, vocabs, true);
  Dataset dev = build_dataset(dev_records, vocabs, false);
  perturb_dataset(train, vocabs, o, cfg.seed, "train");
  perturb_dataset(dev, vocabs, o, cfg.seed, "dev");

  RgatModel model(cfg, vocabs, cfg.seed);
  if (!cfg.pretrained_embeddings.empty())
    model.load_pretrained_embeddings(cfg.pretrained_embeddings);

  TrainResult result = train_model(model, train, dev);
  save_checkpoint((dir / "checkpoint.bin").string(), model);
  write_epochs_csv(dir / "epochs.csv", result);
  {
    std::ofstream out(dir / "dev_metrics.json", std::ios::binary);
    json j = metrics_json(result.best_dev);
    j["best_epoch"] = result.best_epoch;
    out << j.dump(2) << "\n";
  }
  RunManifest m;
  m.command = "train";
  m.config = cfg.to_map();
  m.seed = cfg.seed;
  m.add_input(train_path);
  m.add_input(dev_path);
  m.outputs = {"checkpoint.bin", "epochs.csv", "dev_metrics.json"};
  m.write(dir);
  std::printf("best epoch %d: %s\n", result.best_epoch,
              result.best_dev.summary().c_str());
  return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& test_path,
             const CommonOpts& o) {
  fs::path dir = prepare_out(o.out);
  RgatModel model = load_checkpoint(ckpt_path);
  std::vector<RawRecord> records = read_jsonl_file(test_path);
  DataVocabs vocabs = model.vocabs();
  Dataset test = build_dataset(records, vocabs, false);
  perturb_dataset(test, vocabs, o, model.config().seed, "eval");

  MetricsReport metrics = evaluate_model(model, test);
  {
    std::ofstream out(dir / "metrics.json", std::ios::binary);
    out << metrics_json(metrics).dump(2) << "\n";
  }
  {
    std::ofstream out(dir / "predictions.jsonl", std::ios::binary);
    for (size_t i = 0; i < test.instances.size(); ++i) {
      const Instance& inst = test.instances[i];
      std::array<double, 3> probs = model.predict_probs(inst);
      int best = 0;
      for (int c = 1; c < kNumClasses; ++c)
        if (probs[static_cast<size_t>(c)] > probs[static_cast<size_t>(best)])
          best = c;
      json j;
      j["id"] = i;
      j["probs"] = probs;
      j["pred"] = polarity_string(polarity_from_index(best));
      j["gold"] = polarity_string(inst.polarity);
      out << j.dump() << "\n";
    }
  }
  RunManifest m;
  m.command = "eval";
  m.config = model.config().to_map();
  m.seed = model.config().seed;
  m.add_input(ckpt_path);
  m.add_input(test_path);
  m.outputs = {"metrics.json", "predictions.jsonl"};
  m.write(dir);
  std::cout << metrics.summary() << "\n";
  return 0;
}

int cmd_suite(const std::string& name, const std::string& train_path,
              const std::string& test_path, const CommonOpts& o,
              const SuiteOptions& sopt) {
  fs::path dir = prepare_out(o.out);
  ModelConfig cfg = resolve_config(o);
  std::vector<RawRecord> train_records = read_jsonl_file(train_path);
  std::vector<RawRecord> test_records = read_jsonl_file(test_path);

  SuiteOptions opt = sopt;
  opt.mask_labels = o.mask_labels;
  // suite workers already saturate the cores; the kernels stay bit-identical
  if (opt.jobs > 1) kernels::set_parallel(false);
  SuiteResult result = run_suite(name, cfg, train_records, test_records, opt);
  kernels::set_parallel(true);
  {
    std::ofstream out(dir / "results.csv", std::ios::binary);
    write_suite_csv(result, out);
  }
  {
    std::ofstream out(dir / "results.json", std::ios::binary);
    write_suite_json(result, out);
  }
  RunManifest m;
  m.command = "suite " + name;
  m.config = cfg.to_map();
  m.seed = cfg.seed;
  m.add_input(train_path);
  m.add_input(test_path);
  m.outputs = {"results.csv", "results.json"};
  m.write(dir);
  std::ofstream devnull;
  write_suite_csv(result, std::cout);
  return 0;
}

int cmd_gradcheck(int tokens, int layers, uint64_t seed) {
  SynthOptions sopt;
  sopt.min_tokens = tokens;
  sopt.max_tokens = tokens;
  std::vector<RawRecord> records = gen_synthetic(1, sopt, seed);

  ModelConfig cfg;
  cfg.variant = Variant::kRgat;
  cfg.layers = layers;
  cfg.seed = seed;

  // one model replica per shard so the workers never share mutable state;
  // the inner kernels run serially to keep the cores free for the shards
  auto make_context = [&](int) {
    auto state = std::make_shared<std::pair<RgatModel, Dataset>>([&] {
      DataVocabs vocabs;
      Dataset data = build_dataset(records, vocabs, true);
      return std::pair<RgatModel, Dataset>(RgatModel(cfg, vocabs, seed),
                                           std::move(data));
    }());
    RgatModel* model = &state->first;
    const Instance* inst = &state->second.instances[0];
    GradCheckContext ctx;
    ctx.loss = [state, model, inst] {
      Tape t;
      Var logits = model->forward(t, *inst, /*training=*/false);
      Var loss = t.add(model->nll(t, logits, inst->polarity), model->l2_penalty(t));
      return t.value(loss)[0];
    };
    ctx.grads = [state, model, inst] {
      Tape t;
      Var logits = model->forward(t, *inst, /*training=*/false);
      Var loss = t.add(model->nll(t, logits, inst->polarity), model->l2_penalty(t));
      t.backward(loss);
    };
    ctx.params = model->params().trainable_params();
    return ctx;
  };

  int shards = std::max(1, kernels::thread_count());
  if (shards > 1) kernels::set_parallel(false);
  auto t0 = std::chrono::steady_clock::now();
  GradCheckReport report = grad_check_sharded(make_context, shards, 1e-5, 200, seed);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  kernels::set_parallel(true);

  std::printf("max relative error %.3e over %lld coordinates (%.1fs, %d shards)\n",
              report.max_rel_error,
              static_cast<long long>(report.coords_checked), secs, shards);
  std::printf("worst: %s[%lld] analytic %.6e numeric %.6e\n",
              report.worst_param.c_str(),
              static_cast<long long>(report.worst_coord),
              report.worst_analytic, report.worst_numeric);
  return report.max_rel_error < 1e-4 ? 0 : 1;
}

int cmd_trace(const std::string& ckpt_path, const std::string& data_path,
              const std::vector<size_t>& ids, const std::string& out) {
  fs::path dir = prepare_out(out);
  RgatModel model = load_checkpoint(ckpt_path);
  std::vector<RawRecord> records = read_jsonl_file(data_path);
  DataVocabs vocabs = model.vocabs();
  Dataset data = build_dataset(records, vocabs, false);

  std::vector<size_t> wanted = ids;
  if (wanted.empty())
    for (size_t i = 0; i < data.instances.size(); ++i) wanted.push_back(i);

  json all = json::array();
  for (size_t id : wanted) {
    if (id >= data.instances.size())
      throw std::runtime_error("trace: instance id " + std::to_string(id) +
                               " out of range");
    const Instance& inst = data.instances[id];
    AttentionTrace trace;
    std::array<double, 3> probs = model.predict_probs(inst, &trace);
    json j;
    j["id"] = id;
    j["tokens"] = inst.tokens;
    j["layers"] = trace.layers;
    j["heads"] = trace.heads;
    j["probs"] = probs;
    j["gold"] = polarity_string(inst.polarity);
    json edges = json::array();
    for (int a = 0; a < inst.graph.n; ++a)
      for (int b = 0; b < inst.graph.n; ++b) {
        if (!inst.graph.edge(a, b)) continue;
        json e;
        e["i"] = a;
        e["j"] = b;
        e["label"] = vocabs.relations.label(inst.graph.label(a, b));
        json weights = json::array();
        for (int l = 0; l < trace.layers; ++l) {
          json per_head = json::array();
          for (int z = 0; z < trace.heads; ++z)
            per_head.push_back(trace.at(l, z).at(a, b));
          weights.push_back(std::move(per_head));
        }
        e["alpha"] = std::move(weights);
        edges.push_back(std::move(e));
      }
    j["edges"] = std::move(edges);
    all.push_back(std::move(j));
  }
  std::ofstream outf(dir / "trace.json", std::ios::binary);
  outf << all.dump(2) << "\n";
  RunManifest m;
  m.command = "trace";
  m.add_input(ckpt_path);
  m.add_input(data_path);
  m.outputs = {"trace.json"};
  m.write(dir);
  std::cout << "wrote " << (dir / "trace.json").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relational graph attention for targeted sentiment classification"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  int jobs = 1;
  app.add_option("--jobs", jobs, "parallel trainings for suite runs")
      ->capture_default_str();
  bool serial = false;
  app.add_flag("--serial", serial, "disable the OpenMP kernel paths");

  // synth
  auto* synth = app.add_subcommand("synth", "generate the synthetic dataset");
  int synth_n = 1000;
  uint64_t synth_seed = 7;
  SynthOptions sopt;
  std::string synth_out = "run";
  synth->add_option("--n", synth_n, "instance count")->capture_default_str();
  synth->add_option("--seed", synth_seed, "generator seed")->capture_default_str();
  synth->add_option("--words", sopt.n_words, "token inventory");
  synth->add_option("--pos", sopt.n_pos, "POS inventory");
  synth->add_option("--fillers", sopt.n_filler_labels, "filler label inventory");
  synth->add_option("--min-tokens", sopt.min_tokens, "minimum sentence length");
  synth->add_option("--max-tokens", sopt.max_tokens, "maximum sentence length");
  synth->add_option("--out", synth_out, "output directory");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "CoNLL-U + targets -> instance JSONL");
  std::string conllu_path, targets_path, ingest_out = "run";
  ingest->add_option("conllu", conllu_path, "CoNLL-U file")->required();
  ingest->add_option("targets", targets_path,
                     "targets file: sentence start end polarity")->required();
  ingest->add_option("--out", ingest_out, "output directory");

  // train
  auto* train = app.add_subcommand("train", "train a model");
  std::string train_path, dev_path;
  CommonOpts train_opts;
  train->add_option("train", train_path, "training JSONL")->required();
  train->add_option("dev", dev_path, "development JSONL")->required();
  add_common(train, train_opts, /*with_perturb=*/true);

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string eval_ckpt, eval_data;
  CommonOpts eval_opts;
  eval->add_option("checkpoint", eval_ckpt, "checkpoint file")->required();
  eval->add_option("test", eval_data, "test JSONL")->required();
  add_common(eval, eval_opts, /*with_perturb=*/true);

  // suite
  auto* suite = app.add_subcommand("suite", "run an experiment suite");
  std::string suite_name, suite_train, suite_test;
  CommonOpts suite_opts;
  SuiteOptions suite_sopt;
  suite->add_option("name", suite_name,
                    "ablation|parse_perturb|label_ablation|weighted_factors|depth_sweep")
      ->required();
  suite->add_option("train", suite_train, "training JSONL")->required();
  suite->add_option("test", suite_test, "test JSONL")->required();
  add_common(suite, suite_opts, /*with_perturb=*/false);
  suite->add_option("--mask-label", suite_opts.mask_labels,
                    "labels for label_ablation (repeatable; default: all)");
  suite->add_flag("--delete-edges", suite_sopt.delete_edges,
                  "label_ablation removes edges instead of relabeling");
  suite->add_option("--random-tree-seeds", suite_sopt.random_tree_seeds,
                    "tree draws for parse_perturb");
  suite->add_option("--seeds", suite_sopt.seeds, "model seeds for ablation");

  // gradcheck
  auto* gradcheck_cmd = app.add_subcommand(
      "gradcheck", "finite-difference check of the full loss gradient");
  int gc_tokens = 6, gc_layers = 2;
  uint64_t gc_seed = 11;
  gradcheck_cmd->add_option("--tokens", gc_tokens, "instance length")
      ->capture_default_str();
  gradcheck_cmd->add_option("--layers", gc_layers, "graph encoder depth")
      ->capture_default_str();
  gradcheck_cmd->add_option("--seed", gc_seed, "seed")->capture_default_str();

  // trace
  auto* trace = app.add_subcommand("trace", "export attention traces");
  std::string trace_ckpt, trace_data, trace_out = "run";
  std::vector<size_t> trace_ids;
  trace->add_option("checkpoint", trace_ckpt, "checkpoint file")->required();
  trace->add_option("data", trace_data, "instance JSONL")->required();
  trace->add_option("--ids", trace_ids, "instance indices (default: all)");
  trace->add_option("--out", trace_out, "output directory");

  CLI11_PARSE(app, argc, argv);
  if (serial) kernels::set_parallel(false);

  try {
    if (*synth) return cmd_synth(synth_n, synth_seed, sopt, synth_out);
    if (*ingest) return cmd_ingest(conllu_path, targets_path, ingest_out);
    if (*train) return cmd_train(train_path, dev_path, train_opts);
    if (*eval) return cmd_eval(eval_ckpt, eval_data, eval_opts);
    if (*suite) {
      suite_sopt.jobs = jobs;
      return cmd_suite(suite_name, suite_train, suite_test, suite_opts,
                       suite_sopt);
    }
    if (*gradcheck_cmd) return cmd_gradcheck(gc_tokens, gc_layers, gc_seed);
    if (*trace) return cmd_trace(trace_ckpt, trace_data, trace_ids, trace_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
