#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rgat/rng.hpp"
#include "rgat/tensor.hpp"

namespace rgat {

// A named model tensor. Gradients accumulate across backward passes (one per
// batch instance) until zero_grad(); frozen parameters take no gradient.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool trainable = true;

  Parameter(std::string n, Tensor v, bool train)
      : name(std::move(n)),
        value(std::move(v)),
        grad(Tensor::zeros(value.shape)),
        trainable(train) {}
};

class ParamStore {
 public:
  Parameter& add(std::string name, Tensor init, bool trainable = true);
  Parameter* find(std::string_view name);
  const Parameter* find(std::string_view name) const;
  const std::vector<std::unique_ptr<Parameter>>& all() const { return params_; }
  std::vector<Parameter*> trainable_params() const;
  void zero_grads();
  int64_t scalar_count(bool trainable_only) const;

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

// Handle to a tape node.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode tape. Ops append nodes in topological order; backward() walks
// them in reverse, accumulating into each input's gradient buffer. Gradients
// of trainable parameter leaves land directly in Parameter::grad. A tape is
// confined to one thread; parameters are read-only during the forward pass.
// References returned by value()/grad() stay valid for the tape's lifetime.
class Tape {
 public:
  // leaves
  Var input(Tensor v);
  Var param(Parameter& p);

  // core arithmetic; shape mismatches throw, naming op and shapes
  Var matmul(Var a, Var b);
  Var matmul_bt(Var a, Var b);  // a * b^T
  Var transpose(Var a);
  Var add(Var a, Var b);  // b may be same-shape, a row vector, or a scalar
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);  // elementwise, same broadcast rules as add
  Var scale(Var a, double c);
  Var concat_cols(Var a, Var b);
  Var stack_rows(std::span<const Var> rows);
  Var slice_rows(Var a, int begin, int end);
  Var slice_cols(Var a, int begin, int end);
  Var mean_rows(Var a, int begin, int end);  // 1 x cols
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var relu(Var a);
  Var exp(Var a);
  Var log(Var a);
  Var pick(Var a, int i, int j);  // 1x1
  Var sum_all(Var a);             // 1x1

  // table is [V x d]; result row t is table[ids[t]]
  Var embedding(Var table, std::vector<int> ids);

  // Row-wise softmax over entries with mask != 0, max-subtracted; masked
  // entries are exactly 0. A fully masked row yields all zeros.
  Var masked_softmax(Var scores, const Tensor& mask);

  // Inverted dropout: zero with probability p, survivors scaled by 1/(1-p).
  // Callers skip the op entirely at inference. 0 <= p < 1.
  Var dropout(Var a, double p, Rng& rng);

  // Relational attention pieces. labels is a row-major n x n id matrix and
  // adj the matching 0/1 adjacency; both are constants w.r.t. the tape.
  //   relation_scores:       e[i][j] = q_i . rel_proj[labels[i][j]]  (edges)
  //   relation_weighted_sum: out[i]  = sum_j alpha[i][j] * rel_proj[labels[i][j]]
  Var relation_scores(Var q, Var rel_proj, const std::vector<int>& labels,
                      const Tensor& adj);
  Var relation_weighted_sum(Var alpha, Var rel_proj,
                            const std::vector<int>& labels, const Tensor& adj);

  void backward(Var loss);  // loss must be 1x1

  const Tensor& value(Var v) const;
  const Tensor& grad(Var v);  // allocates (zeros) on first access
  bool needs_grad(Var v) const { return node(v.id).needs_grad; }
  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;                  // owned, unused for parameter leaves
    const Tensor* ext_value = nullptr;
    Tensor grad;                   // owned, unused when ext_grad set
    Tensor* ext_grad = nullptr;    // -> Parameter::grad
    bool needs_grad = false;
    bool grad_zeroed = false;
    std::function<void(Tape&)> back;
  };

  Node& node(int id) { return nodes_[static_cast<size_t>(id)]; }
  const Node& node(int id) const { return nodes_[static_cast<size_t>(id)]; }
  const Tensor& val(int id) const {
    const Node& n = node(id);
    return n.ext_value ? *n.ext_value : n.value;
  }
  Tensor& grad_buf(int id);
  Var push(Tensor value, bool needs_grad, std::function<void(Tape&)> back);
  void check(Var v) const;
  [[noreturn]] static void shape_error(const std::string& op,
                                       const Tensor& a, const Tensor& b);

  std::deque<Node> nodes_;
};

}  // namespace rgat
