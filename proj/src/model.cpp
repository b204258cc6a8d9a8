#include "rgat/model.hpp"

#include "rgat/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rgat {

int position_bucket(int i, Span span, int clip) {
  int d;
  if (i < span.begin)
    d = i - span.begin;
  else if (i >= span.end)
    d = i - (span.end - 1);
  else
    d = 0;
  d = std::clamp(d, -clip, clip);
  return d + clip;
}

std::vector<int> position_buckets(int n, Span span, int clip) {
  std::vector<int> out(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<size_t>(i)] = position_bucket(i, span, clip);
  return out;
}

namespace {

Tensor uniform_tensor(std::vector<int> shape, double lo, double hi, Rng& rng) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& x : t.data) x = rng.uniform(lo, hi);
  return t;
}

Tensor fanin_tensor(std::vector<int> shape, Rng& rng) {
  double bound = 1.0 / std::sqrt(static_cast<double>(shape[0]));
  return uniform_tensor(std::move(shape), -bound, bound, rng);
}

Tensor graph_mask(const DepGraph& g, bool use_graph) {
  Tensor m = Tensor::zeros({g.n, g.n});
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j)
      m.at(i, j) = use_graph ? (g.edge(i, j) ? 1.0 : 0.0) : 1.0;
  return m;
}

}  // namespace

RgatModel::RgatModel(ModelConfig cfg, DataVocabs vocabs, uint64_t init_seed)
    : cfg_(std::move(cfg)), vocabs_(std::move(vocabs)) {
  cfg_.validate();
  Rng rng = Rng(init_seed).derive("init");
  int in = input_dim();
  int h = cfg_.hidden;
  int hd = cfg_.hidden / cfg_.heads;
  int lh = cfg_.lstm_hidden;
  int fd = cfg_.fused_dim;
  double lstm_bound = 1.0 / std::sqrt(static_cast<double>(lh));

  word_emb_ = &store_.add(
      "emb.word",
      uniform_tensor({vocabs_.words.size(), cfg_.word_dim}, -0.25, 0.25, rng),
      !cfg_.freeze_word_embeddings);
  pos_emb_ = &store_.add(
      "emb.pos",
      uniform_tensor({vocabs_.pos.size(), cfg_.pos_dim}, -0.25, 0.25, rng));
  position_emb_ = &store_.add(
      "emb.position",
      uniform_tensor({2 * cfg_.position_clip + 1, cfg_.position_dim}, -0.25,
                     0.25, rng));
  rel_emb_ = &store_.add(
      "emb.relation",
      uniform_tensor({vocabs_.relations.size(), cfg_.relation_dim}, -0.25, 0.25,
                     rng));

  auto make_lstm = [&](const std::string& prefix) {
    LstmDir d;
    d.w_x = &store_.add(prefix + ".w_x",
                        uniform_tensor({in, 4 * lh}, -lstm_bound, lstm_bound, rng));
    d.w_h = &store_.add(prefix + ".w_h",
                        uniform_tensor({lh, 4 * lh}, -lstm_bound, lstm_bound, rng));
    Tensor b = uniform_tensor({4 * lh}, -lstm_bound, lstm_bound, rng);
    for (int i = lh; i < 2 * lh; ++i) b[i] += 1.0;  // forget-gate bias
    d.b = &store_.add(prefix + ".b", std::move(b));
    return d;
  };
  fwd_ = make_lstm("ctx.fwd");
  bwd_ = make_lstm("ctx.bwd");

  in_proj_w_ = &store_.add("graph.in_proj.w", fanin_tensor({in, h}, rng));
  in_proj_b_ = &store_.add("graph.in_proj.b", fanin_tensor({h}, rng));

  layers_.resize(static_cast<size_t>(cfg_.layers));
  for (int l = 0; l < cfg_.layers; ++l) {
    LayerParams& lp = layers_[static_cast<size_t>(l)];
    std::string base = "graph.layer" + std::to_string(l);
    for (int z = 0; z < cfg_.heads; ++z) {
      std::string hb = base + ".head" + std::to_string(z);
      HeadParams hp;
      hp.w_q = &store_.add(hb + ".w_q", fanin_tensor({h, hd}, rng));
      hp.w_k = &store_.add(hb + ".w_k", fanin_tensor({h, hd}, rng));
      hp.w_v = &store_.add(hb + ".w_v", fanin_tensor({h, hd}, rng));
      hp.w_kr = &store_.add(hb + ".w_kr",
                            fanin_tensor({cfg_.relation_dim, hd}, rng));
      lp.heads.push_back(hp);
    }
    lp.w_vr = &store_.add(base + ".w_vr",
                          fanin_tensor({cfg_.relation_dim, hd}, rng));
    lp.pct_w1 = &store_.add(base + ".pct.w1", fanin_tensor({h, h}, rng));
    lp.pct_b1 = &store_.add(base + ".pct.b1", fanin_tensor({h}, rng));
    lp.pct_w2 = &store_.add(base + ".pct.w2", fanin_tensor({h, h}, rng));
    lp.pct_b2 = &store_.add(base + ".pct.b2", fanin_tensor({h}, rng));
    if (cfg_.weighted_factors) {
      lp.beta1 = &store_.add(base + ".beta1", Tensor::scalar(1.0));
      lp.beta2 = &store_.add(base + ".beta2", Tensor::scalar(1.0));
    }
  }

  syn_w_ = &store_.add("head.syn.w", fanin_tensor({h, fd}, rng));
  syn_b_ = &store_.add("head.syn.b", fanin_tensor({fd}, rng));
  con_w_ = &store_.add("head.con.w", fanin_tensor({2 * lh, fd}, rng));
  con_b_ = &store_.add("head.con.b", fanin_tensor({fd}, rng));
  gate_w_ = &store_.add("head.gate.w", fanin_tensor({2 * fd, fd}, rng));
  gate_b_ = &store_.add("head.gate.b", fanin_tensor({fd}, rng));
  cls_w_ = &store_.add("head.cls.w", fanin_tensor({fd, kNumClasses}, rng));
  cls_b_ = &store_.add("head.cls.b", fanin_tensor({kNumClasses}, rng));
}

Var RgatModel::linear(Tape& t, Var x, Parameter* w, Parameter* b) const {
  Var y = t.matmul(x, t.param(*w));
  return b ? t.add(y, t.param(*b)) : y;
}

Var lstm_run(Tape& t, Var x, Var w_x, Var w_h, Var b, int hidden,
             bool reverse) {
  int n = t.value(x).rows();
  Var h = t.input(Tensor::zeros({1, hidden}));
  Var c = t.input(Tensor::zeros({1, hidden}));
  std::vector<Var> outs(static_cast<size_t>(n));
  for (int step = 0; step < n; ++step) {
    int i = reverse ? n - 1 - step : step;
    Var xi = t.slice_rows(x, i, i + 1);
    Var gates = t.add(t.add(t.matmul(xi, w_x), t.matmul(h, w_h)), b);
    Var gi = t.sigmoid(t.slice_cols(gates, 0, hidden));
    Var gf = t.sigmoid(t.slice_cols(gates, hidden, 2 * hidden));
    Var gc = t.tanh(t.slice_cols(gates, 2 * hidden, 3 * hidden));
    Var go = t.sigmoid(t.slice_cols(gates, 3 * hidden, 4 * hidden));
    c = t.add(t.mul(gf, c), t.mul(gi, gc));
    h = t.mul(go, t.tanh(c));
    outs[static_cast<size_t>(i)] = h;
  }
  return t.stack_rows(outs);
}

Var RgatModel::bilstm(Tape& t, Var x) const {
  int lh = cfg_.lstm_hidden;
  Var fwd = lstm_run(t, x, t.param(*fwd_.w_x), t.param(*fwd_.w_h),
                     t.param(*fwd_.b), lh, false);
  Var bwd = lstm_run(t, x, t.param(*bwd_.w_x), t.param(*bwd_.w_h),
                     t.param(*bwd_.b), lh, true);
  return t.concat_cols(fwd, bwd);
}

Var RgatModel::encode_graph(Tape& t, Var h0, const DepGraph& graph,
                            AttentionTrace* trace, int num_layers) const {
  int depth = num_layers < 0 ? cfg_.layers : num_layers;
  if (depth > cfg_.layers)
    throw std::invalid_argument("encode_graph: depth exceeds configured layers");
  int n = graph.n;
  bool masked = cfg_.variant != Variant::kTransformer;
  bool rel_attn =
      cfg_.variant == Variant::kGatRatt || cfg_.variant == Variant::kRgat;
  bool rel_agg = cfg_.variant == Variant::kRgat;
  Tensor mask = graph_mask(graph, masked);
  double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(cfg_.hidden / cfg_.heads));

  if (trace) {
    trace->layers = depth;
    trace->heads = cfg_.heads;
    trace->n = n;
    trace->alpha.assign(static_cast<size_t>(depth) * cfg_.heads, Tensor{});
  }

  Var rel_table;
  if (rel_attn || rel_agg) rel_table = t.param(*rel_emb_);

  Var h = h0;
  for (int l = 0; l < depth; ++l) {
    const LayerParams& lp = layers_[static_cast<size_t>(l)];
    Var rel_proj_v;
    if (rel_agg) rel_proj_v = t.matmul(rel_table, t.param(*lp.w_vr));

    Var cat;
    for (int z = 0; z < cfg_.heads; ++z) {
      const HeadParams& hp = lp.heads[static_cast<size_t>(z)];
      Var q = t.matmul(h, t.param(*hp.w_q));
      Var k = t.matmul(h, t.param(*hp.w_k));
      Var node_scores = t.scale(t.matmul_bt(q, k), inv_sqrt);
      Var mix = node_scores;
      if (rel_attn) {
        Var rel_proj_k = t.matmul(rel_table, t.param(*hp.w_kr));
        Var rel_scores = t.scale(
            t.relation_scores(q, rel_proj_k, graph.labels, mask), inv_sqrt);
        if (cfg_.weighted_factors)
          mix = t.add(t.mul(node_scores, t.param(*lp.beta1)),
                      t.mul(rel_scores, t.param(*lp.beta2)));
        else
          mix = t.add(node_scores, rel_scores);
      }
      Var alpha = t.masked_softmax(mix, mask);
      if (trace)
        trace->alpha[static_cast<size_t>(l) * cfg_.heads + z] = t.value(alpha);
      Var av = t.matmul(alpha, t.matmul(h, t.param(*hp.w_v)));
      if (rel_agg)
        av = t.add(av,
                   t.relation_weighted_sum(alpha, rel_proj_v, graph.labels, mask));
      Var out = t.sigmoid(av);
      cat = z == 0 ? out : t.concat_cols(cat, out);
    }
    Var pct_hidden =
        t.relu(t.add(t.matmul(cat, t.param(*lp.pct_w1)), t.param(*lp.pct_b1)));
    h = t.add(t.matmul(pct_hidden, t.param(*lp.pct_w2)), t.param(*lp.pct_b2));
  }
  return h;
}

Var RgatModel::forward(Tape& t, const Instance& inst, bool training,
                       Rng* dropout_rng, AttentionTrace* trace) const {
  int n = static_cast<int>(inst.tokens.size());
  if (n == 0) throw std::invalid_argument("forward: empty instance");
  if (inst.graph.n != n)
    throw std::invalid_argument("forward: graph size does not match tokens");
  if (inst.target.begin < 0 || inst.target.begin >= inst.target.end ||
      inst.target.end > n)
    throw std::invalid_argument("forward: bad target span");

  std::vector<int> word_ids(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i)
    word_ids[static_cast<size_t>(i)] = vocabs_.words.id(inst.tokens[static_cast<size_t>(i)]);
  std::vector<int> pos_ids = inst.pos_tags;
  std::vector<int> position_ids =
      position_buckets(n, inst.target, cfg_.position_clip);

  Var v = t.embedding(t.param(*word_emb_), std::move(word_ids));
  Var tg = t.embedding(t.param(*pos_emb_), std::move(pos_ids));
  Var pe = t.embedding(t.param(*position_emb_), std::move(position_ids));
  Var x = t.concat_cols(t.concat_cols(v, tg), pe);
  if (training && cfg_.input_dropout > 0.0) {
    if (!dropout_rng)
      throw std::invalid_argument("forward: training requires a dropout rng");
    x = t.dropout(x, cfg_.input_dropout, *dropout_rng);
  }

  Var hctx = bilstm(t, x);
  Var hg = linear(t, x, in_proj_w_, in_proj_b_);
  hg = encode_graph(t, hg, inst.graph, trace);

  Var hsyn = t.mean_rows(hg, inst.target.begin, inst.target.end);
  Var hcon = t.mean_rows(hctx, inst.target.begin, inst.target.end);
  Var hs = linear(t, hsyn, syn_w_, syn_b_);
  Var hc = linear(t, hcon, con_w_, con_b_);
  Var g = t.sigmoid(linear(t, t.concat_cols(hs, hc), gate_w_, gate_b_));
  Var ones = t.input(Tensor::full({1, cfg_.fused_dim}, 1.0));
  Var hf = t.add(t.mul(g, hs), t.mul(t.sub(ones, g), hc));
  return linear(t, hf, cls_w_, cls_b_);
}

Var RgatModel::nll(Tape& t, Var logits, Polarity gold) const {
  Tensor ones = Tensor::full({1, kNumClasses}, 1.0);
  Var probs = t.masked_softmax(logits, ones);
  Var p = t.pick(probs, 0, polarity_index(gold));
  return t.scale(t.log(p), -1.0);
}

Var RgatModel::l2_penalty(Tape& t) const {
  Var total = t.input(Tensor::scalar(0.0));
  if (cfg_.l2 == 0.0) return total;
  for (const auto& p : store_.all()) {
    if (!p->trainable) continue;
    Var pv = t.param(*p);
    total = t.add(total, t.sum_all(t.mul(pv, pv)));
  }
  return t.scale(total, cfg_.l2);
}

std::array<double, 3> RgatModel::predict_probs(const Instance& inst,
                                               AttentionTrace* trace) const {
  Tape t;
  Var logits = forward(t, inst, /*training=*/false, nullptr, trace);
  Tensor ones = Tensor::full({1, kNumClasses}, 1.0);
  Var probs = t.masked_softmax(logits, ones);
  const Tensor& pv = t.value(probs);
  return {pv[0], pv[1], pv[2]};
}

int RgatModel::predict(const Instance& inst) const {
  std::array<double, 3> p = predict_probs(inst);
  int best = 0;
  for (int c = 1; c < kNumClasses; ++c)
    if (p[static_cast<size_t>(c)] > p[static_cast<size_t>(best)]) best = c;
  return best;
}

void RgatModel::load_pretrained_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embeddings file " + path);
  std::string line;
  int line_no = 0;
  int loaded = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string token;
    ss >> token;
    int row = vocabs_.words.id(token);
    if (row == Vocab::kUnk && token != "<unk>") {
      continue;  // out-of-vocabulary pretrained entry
    }
    for (int j = 0; j < cfg_.word_dim; ++j) {
      double x;
      if (!(ss >> x))
        throw std::runtime_error("embeddings file line " +
                                 std::to_string(line_no) + ": expected " +
                                 std::to_string(cfg_.word_dim) + " values");
      word_emb_->value.at(row, j) = x;
    }
    ++loaded;
  }
  if (loaded == 0)
    throw std::runtime_error("embeddings file " + path +
                             " matched no vocabulary entries");
  word_emb_->trainable = false;
}

std::vector<Tensor> RgatModel::snapshot_values() const {
  std::vector<Tensor> out;
  out.reserve(store_.all().size());
  for (const auto& p : store_.all()) out.push_back(p->value);
  return out;
}

void RgatModel::restore_values(const std::vector<Tensor>& values) {
  if (values.size() != store_.all().size())
    throw std::invalid_argument("restore_values: parameter count mismatch");
  for (size_t i = 0; i < values.size(); ++i) {
    Parameter& p = *store_.all()[i];
    if (!p.value.same_shape(values[i]))
      throw std::invalid_argument("restore_values: shape mismatch for " + p.name);
    p.value = values[i];
  }
}

}  // namespace rgat
