#pragma once

#include <array>
#include <string>
#include <vector>

#include "rgat/config.hpp"
#include "rgat/dataset.hpp"
#include "rgat/tape.hpp"

namespace rgat {

// Per-layer, per-head edge attention recorded during a forward pass. Rows
// sum to 1 over the neighborhood; entries off the graph are exactly 0.
struct AttentionTrace {
  int layers = 0;
  int heads = 0;
  int n = 0;
  std::vector<Tensor> alpha;  // layers*heads entries, each n x n

  const Tensor& at(int layer, int head) const {
    return alpha[static_cast<size_t>(layer) * heads + head];
  }
};

// Signed distance from token i to the nearest token of the span, clipped to
// [-clip, clip] and shifted to a table index in [0, 2*clip].
int position_bucket(int i, Span span, int clip);
std::vector<int> position_buckets(int n, Span span, int clip);

// Single-direction LSTM over the rows of x from zero initial states.
// w_x is [input x 4H], w_h [H x 4H], b [4H]; gate order input, forget,
// cell candidate, output. Output row i always corresponds to token i.
Var lstm_run(Tape& t, Var x, Var w_x, Var w_h, Var b, int hidden,
             bool reverse);

// The full network: word/POS/position embeddings, BiLSTM contextual encoder,
// stacked (relational) graph attention encoder over the dependency graph,
// average-pooled target vectors, gated fusion and a 3-way softmax classifier.
class RgatModel {
 public:
  RgatModel(ModelConfig cfg, DataVocabs vocabs, uint64_t init_seed);

  // 1x3 logits for one instance. training enables input dropout, drawing
  // from dropout_rng.
  Var forward(Tape& t, const Instance& inst, bool training,
              Rng* dropout_rng = nullptr, AttentionTrace* trace = nullptr) const;

  // graph encoder alone; h0 is the projected n x hidden input.
  // num_layers < 0 means the configured depth.
  Var encode_graph(Tape& t, Var h0, const DepGraph& graph,
                   AttentionTrace* trace = nullptr, int num_layers = -1) const;

  Var nll(Tape& t, Var logits, Polarity gold) const;  // -log P(gold)
  Var l2_penalty(Tape& t) const;                      // l2 * ||theta||^2

  std::array<double, 3> predict_probs(const Instance& inst,
                                      AttentionTrace* trace = nullptr) const;
  int predict(const Instance& inst) const;

  // GloVe-style text file: token then word_dim decimals per line. Rows for
  // in-vocabulary tokens are overwritten and the word table is frozen.
  void load_pretrained_embeddings(const std::string& path);

  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }
  const ModelConfig& config() const { return cfg_; }
  const DataVocabs& vocabs() const { return vocabs_; }

  std::vector<Tensor> snapshot_values() const;
  void restore_values(const std::vector<Tensor>& values);

 private:
  struct LstmDir {
    Parameter* w_x;  // [input x 4H], gate order: input, forget, cell, output
    Parameter* w_h;  // [H x 4H]
    Parameter* b;    // [4H]
  };
  struct HeadParams {
    Parameter *w_q, *w_k, *w_v;  // [hidden x head_dim]
    Parameter* w_kr;             // [relation_dim x head_dim]
  };
  struct LayerParams {
    std::vector<HeadParams> heads;
    Parameter* w_vr;  // [relation_dim x head_dim], shared across heads
    Parameter *pct_w1, *pct_b1, *pct_w2, *pct_b2;
    Parameter *beta1 = nullptr, *beta2 = nullptr;
  };

  Var bilstm(Tape& t, Var x) const;
  Var linear(Tape& t, Var x, Parameter* w, Parameter* b) const;
  int input_dim() const { return cfg_.word_dim + cfg_.pos_dim + cfg_.position_dim; }

  ModelConfig cfg_;
  DataVocabs vocabs_;
  ParamStore store_;

  Parameter* word_emb_;
  Parameter* pos_emb_;
  Parameter* position_emb_;
  Parameter* rel_emb_;
  LstmDir fwd_, bwd_;
  Parameter *in_proj_w_, *in_proj_b_;
  std::vector<LayerParams> layers_;
  Parameter *syn_w_, *syn_b_, *con_w_, *con_b_;
  Parameter *gate_w_, *gate_b_;
  Parameter *cls_w_, *cls_b_;
};

}  // namespace rgat
