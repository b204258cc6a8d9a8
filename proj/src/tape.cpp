#include "rgat/tape.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "rgat/kernels.hpp"

namespace rgat {

namespace {

// out = op(a) * op(b), optionally accumulating
void mm(const Tensor& a, bool ta, const Tensor& b, bool tb, Tensor& out,
        bool accumulate) {
  int m = ta ? a.cols() : a.rows();
  int ka = ta ? a.rows() : a.cols();
  int kb = tb ? b.cols() : b.rows();
  int n = tb ? b.rows() : b.cols();
  if (ka != kb)
    throw std::invalid_argument("gemm: inner dimensions disagree " +
                                a.shape_str() + " vs " + b.shape_str());
  kernels::gemm(ta, tb, m, n, ka, a.data.data(), a.cols(), b.data.data(),
                b.cols(), out.data.data(), n, accumulate);
}

enum class Bcast { kSame, kRow, kScalar };

}  // namespace

Parameter& ParamStore::add(std::string name, Tensor init, bool trainable) {
  if (find(name)) throw std::invalid_argument("duplicate parameter: " + name);
  params_.push_back(
      std::make_unique<Parameter>(std::move(name), std::move(init), trainable));
  return *params_.back();
}

Parameter* ParamStore::find(std::string_view name) {
  for (auto& p : params_)
    if (p->name == name) return p.get();
  return nullptr;
}

const Parameter* ParamStore::find(std::string_view name) const {
  for (auto& p : params_)
    if (p->name == name) return p.get();
  return nullptr;
}

std::vector<Parameter*> ParamStore::trainable_params() const {
  std::vector<Parameter*> out;
  for (auto& p : params_)
    if (p->trainable) out.push_back(p.get());
  return out;
}

void ParamStore::zero_grads() {
  for (auto& p : params_) p->grad.fill(0.0);
}

int64_t ParamStore::scalar_count(bool trainable_only) const {
  int64_t n = 0;
  for (auto& p : params_)
    if (!trainable_only || p->trainable) n += p->value.size();
  return n;
}

void Tape::shape_error(const std::string& op, const Tensor& a,
                       const Tensor& b) {
  throw std::invalid_argument(op + ": incompatible shapes " + a.shape_str() +
                              " and " + b.shape_str());
}

void Tape::check(Var v) const {
  if (v.id < 0 || v.id >= static_cast<int>(nodes_.size()))
    throw std::invalid_argument("invalid tape handle");
}

Tensor& Tape::grad_buf(int id) {
  Node& n = node(id);
  if (n.ext_grad) return *n.ext_grad;
  if (!n.grad_zeroed) {
    n.grad = Tensor::zeros(val(id).shape);
    n.grad_zeroed = true;
  }
  return n.grad;
}

Var Tape::push(Tensor value, bool needs_grad, std::function<void(Tape&)> back) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  if (needs_grad) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::input(Tensor v) { return push(std::move(v), false, nullptr); }

Var Tape::param(Parameter& p) {
  Node n;
  n.ext_value = &p.value;
  if (p.trainable) {
    n.needs_grad = true;
    n.ext_grad = &p.grad;
  }
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

const Tensor& Tape::value(Var v) const {
  check(v);
  return val(v.id);
}

const Tensor& Tape::grad(Var v) {
  check(v);
  return grad_buf(v.id);
}

Var Tape::matmul(Var a, Var b) {
  check(a);
  check(b);
  const Tensor &av = val(a.id), &bv = val(b.id);
  if (av.ndim() != 2 || bv.ndim() != 2 || av.cols() != bv.rows())
    shape_error("matmul", av, bv);
  Tensor out = Tensor::zeros({av.rows(), bv.cols()});
  mm(av, false, bv, false, out, false);
  bool ng = node(a.id).needs_grad || node(b.id).needs_grad;
  int id = static_cast<int>(nodes_.size());
  return push(std::move(out), ng, [a, b, id](Tape& t) {
    const Tensor& g = t.grad_buf(id);
    if (t.node(a.id).needs_grad)
      mm(g, false, t.val(b.id), true, t.grad_buf(a.id), true);
    if (t.node(b.id).needs_grad)
      mm(t.val(a.id), true, g, false, t.grad_buf(b.id), true);
  });
}

Var Tape::matmul_bt(Var a, Var b) {
  check(a);
  check(b);
  const Tensor &av = val(a.id), &bv = val(b.id);
  if (av.ndim() != 2 || bv.ndim() != 2 || av.cols() != bv.cols())
    shape_error("matmul_bt", av, bv);
  Tensor out = Tensor::zeros({av.rows(), bv.rows()});
  mm(av, false, bv, true, out, false);
  bool ng = node(a.id).needs_grad || node(b.id).needs_grad;
  int id = static_cast<int>(nodes_.size());
  return push(std::move(out), ng, [a, b, id](Tape& t) {
    const Tensor& g = t.grad_buf(id);
    if (t.node(a.id).needs_grad)
      mm(g, false, t.val(b.id), false, t.grad_buf(a.id), true);
    if (t.node(b.id).needs_grad)
      mm(g, true, t.val(a.id), false, t.grad_buf(b.id), true);
  });
}

Var Tape::transpose(Var a) {
  check(a);
  const Tensor& av = val(a.id);
  if (av.ndim() != 2)
    throw std::invalid_argument("transpose: need rank 2, got " +
                                av.shape_str());
  int r = av.rows(), c = av.cols();
  Tensor out = Tensor::zeros({c, r});
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out.at(j, i) = av.at(i, j);
  bool ng = node(a.id).needs_grad;
  int id = static_cast<int>(nodes_.size());
  return push(std::move(out), ng, [a, id, r, c](Tape& t) {
    const Tensor& g = t.grad_buf(id);
    Tensor& ga = t.grad_buf(a.id);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) ga.at(i, j) += g.at(j, i);
  });
}

namespace {

Bcast classify(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape == b.shape) return Bcast::kSame;
  if (b.size() == 1) return Bcast::kScalar;
  bool row_vec = (b.ndim() == 1 && b.shape[0] == a.cols()) ||
                 (b.ndim() == 2 && b.rows() == 1 && b.cols() == a.cols());
  if (a.ndim() == 2 && row_vec) return Bcast::kRow;
  throw std::invalid_argument(std::string(op) + ": incompatible shapes " +
                              a.shape_str() + " and " + b.shape_str());
}

}  // namespace

Var Tape::add(Var a, Var b) {
  check(a);
  check(b);
  const Tensor &av = val(a.id), &bv = val(b.id);
  Bcast k = classify("add", av, bv);
  Tensor out = av;
  int cols = av.ndim() == 2 ? av.cols() : static_cast<int>(av.size());
  for (int64_t i = 0; i < out.size(); ++i) {
    double bval = k == Bcast::kSame ? bv[i]
                  : k == Bcast::kScalar ? bv[0]
                                        : bv[i % cols];
    out[i] += bval;
  }
  bool ng = node(a.id).needs_grad || node(b.id).needs_grad;
  int id = static_cast<int>(nodes_.size());
  return push(std::move(out), ng, [a, b, id, k, cols](Tape& t) {
    const Tensor& g = t.grad_buf(id);
    if (t.node(a.id).needs_grad) {
      Tensor& ga = t.grad_buf(a.id);
      for (int64_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (t.node(b.id).needs_grad) {
      Tensor& gb = t.grad_buf(b.id);
      for (int64_t i = 0; i < g.size(); ++i) {
        int64_t bi = k == Bcast::kSame ? i : k == Bcast::kScalar ? 0 : i % cols;
        gb[bi] += g[i];
      }
    }
  });
}

Var Tape::sub(Var a, Var b) {
  check(a);
  check(b);
  const Tensor &av = val(a.id), &bv = val(b.id);
  Bcast k = classify("sub", av, bv);
  Tensor out = av;
  int cols = av.ndim() == 2 ? av.cols() : static_cast<int>(av.size());
  for (int64_t i = 0; i < out.size(); ++i) {
    double bval = k == Bcast::kSame ? bv[i]
                  : k == Bcast::kScalar ? bv[0]
                                        : bv[i % cols];
    out[i] -= bval;
  }
  bool ng = node(a.id).needs_grad || node(b.id).needs_grad;
  int id = static_cast<int>(nodes_.size());
  return push(std::move(out), ng, [a, b, id, k, cols](Tape& t) {
    const Tensor& g = t.grad_buf(id);
    if (t.node(a.id).needs_grad) {
      Tensor& ga = t.grad_buf(a.id);
      for (int64_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (t.node(b.id).needs_grad) {
      Tensor& gb = t.grad_buf(b.id);
      for (int64_t i = 0; i < g.size(); ++i) {
        int64_t bi = k == Bcast::kSame ? i : k == Bcast::kScalar ? 0 : i % cols;
        gb[bi] -= g[i];
      }
    }
  });
}

Var Tape::mul(Var a, Var b) {
  check(a);
  check(b);
  const Tensor &av = val(a.id), &bv = val(b.id);
  Bcast k = classify("mul", av, bv);
  Tensor out = av;
  int cols = av.ndim() == 2 ? av.cols() : static_cast<int>(av.size());
  for (int64_t i = 0; i < out.size(); ++i) {
    double bval = k == Bcast::kSame ? bv[i]
                  : k == Bcast::kScalar ? bv[0]
                                        : bv[i % cols];
    out[i] *= bval;
  }
  bool ng = node(a.id).needs_grad || node(b.id).needs_grad;
  int id = static_cast<int>(nodes_.size());
  return push(std::move(out), ng, [a, b, id, k, cols](Tape& t) {
    const Tensor& g = t.grad_buf(id);
    const Tensor &av2 = t.val(a.id), &bv2 = t.val(b.id);
    if (t.node(a.id).needs_grad) {
      Tensor& ga = t.grad_buf(a.id);
      for (int64_t i = 0; i < g.size(); ++i) {
        int64_t bi = k == Bcast::kSame ? i : k == Bcast::kScalar ? 0 : i % cols;
        ga[i] += g[i] * bv2[bi];
      }
    }
    if (t.node(b.id).needs_grad) {
      Tensor& gb = t.grad_buf(b.id);
      for (int64_t i = 0; i < g.size(); ++i) {
        int64_t bi = k == Bcast::kSame ? i : k == Bcast::kScalar ? 0 : i % cols;
        gb[bi] += g[i] * av2[i];
      }
    }
  });
}

Var Tape::scale(Var a, double c) {
  check(a);
  Tensor out = val(a.id);
  for (double& x : out.data) x *= c;
  bool ng = node(a.id).needs_grad;
  int id = static_cast<int>(nodes_.size());
  return push(std::move(out), ng, [a, id, c](Tape& t) {
    const Tensor& g = t.grad_buf(id);
    Tensor& ga = t.grad_buf(a.id);
    for (int64_t i = 0; i < g.size(); ++i) ga[i] += c * g[i];
  });
}

Var Tape::concat_cols(Var a, Var b) {
  check(a);
  check(b);
  const Tensor &av = val(a.id), &bv = val(b.id);
  if (av.ndim() != 2 || bv.ndim() != 2 || av.rows() != bv.rows())
    shape_error("concat_cols", av, bv);
  int n = av.rows(), ca = av.cols(), cb = bv.cols();
  Tensor out = Tensor::zeros({n, ca + cb});
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < ca; ++j) out.at(i, j) = av.at(i, j);
    for (int j = 0; j < cb; ++j) out.at(i, ca + j) = bv.at(i, j);
  }
  bool ng = node(a.id).needs_grad || node(b.id).needs_grad;
  int id = static_cast<int>(nodes_.size());
  return push(std::move(out), ng, [a, b, id, n, ca, cb](Tape& t) {
    const Tensor& g = t.grad_buf(id);
    if (t.node(a.id).needs_grad) {
      Tensor& ga = t.grad_buf(a.id);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < ca; ++j) ga.at(i, j) += g.at(i, j);
    }
    if (t.node(b.id).needs_grad) {
      Tensor& gb = t.grad_buf(b.id);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < cb; ++j) gb.at(i, j) += g.at(i, ca + j);
    }
  });
}

Var Tape::stack_rows(std::span<const Var> rows) {
  if (rows.empty()) throw std::invalid_argument("stack_rows: empty row list");
  for (Var r : rows) check(r);
  int d = static_cast<int>(val(rows[0].id).size());
  int n = static_cast<int>(rows.size());
  Tensor out = Tensor::zeros({n, d});
  bool ng = false;
  for (int i = 0; i < n; ++i) {
    const Tensor& rv = val(rows[i].id);
    if (rv.size() != d || rv.rows() != 1)
      shape_error("stack_rows", val(rows[0].id), rv);
    for (int j = 0; j < d; ++j) out.at(i, j) = rv[j];
    ng = ng || node(rows[i].id).needs_grad;
  }
  std::vector<Var> saved(rows.begin(), rows.end());
  int id = static_cast<int>(nodes_.size());
  return push(std::move(out), ng, [saved, id, d](Tape& t) {
    const Tensor& g = t.grad_buf(id);
    for (size_t i = 0; i < saved.size(); ++i) {
      if (!t.node(saved[i].id).needs_grad) continue;
      Tensor& gr = t.grad_buf(saved[i].id);
      for (int j = 0; j < d; ++j) gr[j] += g.at(static_cast<int>(i), j);
    }
  });
}

Var Tape::slice_rows(Var a, int begin, int end) {
  check(a);
  const Tensor& av = val(a.id);
  if (av.ndim() != 2 || begin < 0 || end > av.rows() || begin >= end)
    throw std::invalid_argument("slice_rows: bad range [" +
                                std::to_string(begin) + "," +
                                std::to_string(end) + ") for " + av.shape_str());
  int c = av.cols();
  Tensor out = Tensor::zeros({end - begin, c});
  for (int i = begin; i < end; ++i)
    for (int j = 0; j < c; ++j) out.at(i - begin, j) = av.at(i, j);
  bool ng = node(a.id).needs_grad;
  int id = static_cast<int>(nodes_.size());
  return push(std::move(out), ng, [a, id, begin, end, c](Tape& t) {
    const Tensor& g = t.grad_buf(id);
    Tensor& ga = t.grad_buf(a.id);
    for (int i = begin; i < end; ++i)
      for (int j = 0; j < c; ++j) ga.at(i, j) += g.at(i - begin, j);
  });
}

Var Tape::slice_cols(Var a, int begin, int end) {
  check(a);
  const Tensor& av = val(a.id);
  if (av.ndim() != 2 || begin < 0 || end > av.cols() || begin >= end)
    throw std::invalid_argument("slice_cols: bad range [" +
                                std::to_string(begin) + "," +
                                std::to_string(end) + ") for " + av.shape_str());
  int n = av.rows();
  Tensor out = Tensor::zeros({n, end - begin});
  for (int i = 0; i < n; ++i)
    for (int j = begin; j < end; ++j) out.at(i, j - begin) = av.at(i, j);
  bool ng = node(a.id).needs_grad;
  int id = static_cast<int>(nodes_.size());
  return push(std::move(out), ng, [a, id, begin, end, n](Tape& t) {
    const Tensor& g = t.grad_buf(id);
    Tensor& ga = t.grad_buf(a.id);
    for (int i = 0; i < n; ++i)
      for (int j = begin; j < end; ++j) ga.at(i, j) += g.at(i, j - begin);
  });
}

Var Tape::mean_rows(Var a, int begin, int end) {
  check(a);
  const Tensor& av = val(a.id);
  if (av.ndim() != 2 || begin < 0 || end > av.rows() || begin >= end)
    throw std::invalid_argument("mean_rows: bad range [" +
                                std::to_string(begin) + "," +
                                std::to_string(end) + ") for " + av.shape_str());
  int c = av.cols();
  double inv = 1.0 / (end - begin);
  Tensor out = Tensor::zeros({1, c});
  for (int j = 0; j < c; ++j) {
    double s = 0.0;
    for (int i = begin; i < end; ++i) s += av.at(i, j);
    out[j] = s * inv;
  }
  bool ng = node(a.id).needs_grad;
  int id = static_cast<int>(nodes_.size());
  return push(std::move(out), ng, [a, id, begin, end, c, inv](Tape& t) {
    const Tensor& g = t.grad_buf(id);
    Tensor& ga = t.grad_buf(a.id);
    for (int i = begin; i < end; ++i)
      for (int j = 0; j < c; ++j) ga.at(i, j) += g[j] * inv;
  });
}

namespace {

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Var Tape::sigmoid(Var a) {
  check(a);
  Tensor out = val(a.id);
  for (double& x : out.data) x = stable_sigmoid(x);
  bool ng = node(a.id).needs_grad;
  int id = static_cast<int>(nodes_.size());
  return push(std::move(out), ng, [a, id](Tape& t) {
    const Tensor& g = t.grad_buf(id);
    const Tensor& y = t.val(id);
    Tensor& ga = t.grad_buf(a.id);
    for (int64_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var Tape::tanh(Var a) {
  check(a);
  Tensor out = val(a.id);
  for (double& x : out.data) x = std::tanh(x);
  bool ng = node(a.id).needs_grad;
  int id = static_cast<int>(nodes_.size());
  return push(std::move(out), ng, [a, id](Tape& t) {
    const Tensor& g = t.grad_buf(id);
    const Tensor& y = t.val(id);
    Tensor& ga = t.grad_buf(a.id);
    for (int64_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var Tape::relu(Var a) {
  check(a);
  Tensor out = val(a.id);
  for (double& x : out.data) x = x > 0.0 ? x : 0.0;
  bool ng = node(a.id).needs_grad;
  int id = static_cast<int>(nodes_.size());
  return push(std::move(out), ng, [a, id](Tape& t) {
    const Tensor& g = t.grad_buf(id);
    const Tensor& x = t.val(a.id);
    Tensor& ga = t.grad_buf(a.id);
    for (int64_t i = 0; i < g.size(); ++i)
      if (x[i] > 0.0) ga[i] += g[i];
  });
}

Var Tape::exp(Var a) {
  check(a);
  Tensor out = val(a.id);
  for (double& x : out.data) x = std::exp(x);
  bool ng = node(a.id).needs_grad;
  int id = static_cast<int>(nodes_.size());
  return push(std::move(out), ng, [a, id](Tape& t) {
    const Tensor& g = t.grad_buf(id);
    const Tensor& y = t.val(id);
    Tensor& ga = t.grad_buf(a.id);
    for (int64_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
  });
}

Var Tape::log(Var a) {
  check(a);
  Tensor out = val(a.id);
  for (double& x : out.data) x = std::log(x);
  bool ng = node(a.id).needs_grad;
  int id = static_cast<int>(nodes_.size());
  return push(std::move(out), ng, [a, id](Tape& t) {
    const Tensor& g = t.grad_buf(id);
    const Tensor& x = t.val(a.id);
    Tensor& ga = t.grad_buf(a.id);
    for (int64_t i = 0; i < g.size(); ++i) ga[i] += g[i] / x[i];
  });
}

Var Tape::pick(Var a, int i, int j) {
  check(a);
  const Tensor& av = val(a.id);
  if (av.ndim() != 2 || i < 0 || i >= av.rows() || j < 0 || j >= av.cols())
    throw std::invalid_argument("pick: index (" + std::to_string(i) + "," +
                                std::to_string(j) + ") outside " +
                                av.shape_str());
  Tensor out = Tensor::scalar(av.at(i, j));
  bool ng = node(a.id).needs_grad;
  int id = static_cast<int>(nodes_.size());
  return push(std::move(out), ng, [a, id, i, j](Tape& t) {
    t.grad_buf(a.id).at(i, j) += t.grad_buf(id)[0];
  });
}

Var Tape::sum_all(Var a) {
  check(a);
  const Tensor& av = val(a.id);
  double s = 0.0;
  for (double x : av.data) s += x;
  Tensor out = Tensor::scalar(s);
  bool ng = node(a.id).needs_grad;
  int id = static_cast<int>(nodes_.size());
  return push(std::move(out), ng, [a, id](Tape& t) {
    double g = t.grad_buf(id)[0];
    Tensor& ga = t.grad_buf(a.id);
    for (int64_t i = 0; i < ga.size(); ++i) ga[i] += g;
  });
}

Var Tape::embedding(Var table, std::vector<int> ids) {
  check(table);
  const Tensor& tv = val(table.id);
  if (tv.ndim() != 2)
    throw std::invalid_argument("embedding: table must be rank 2, got " +
                                tv.shape_str());
  int v = tv.rows(), d = tv.cols();
  for (int id : ids)
    if (id < 0 || id >= v)
      throw std::invalid_argument("embedding: id " + std::to_string(id) +
                                  " outside table " + tv.shape_str());
  int n = static_cast<int>(ids.size());
  Tensor out = Tensor::zeros({n, d});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) out.at(i, j) = tv.at(ids[i], j);
  bool ng = node(table.id).needs_grad;
  int id = static_cast<int>(nodes_.size());
  return push(std::move(out), ng, [table, id, ids = std::move(ids), d](Tape& t) {
    const Tensor& g = t.grad_buf(id);
    Tensor& gt = t.grad_buf(table.id);
    for (size_t i = 0; i < ids.size(); ++i)
      for (int j = 0; j < d; ++j)
        gt.at(ids[i], j) += g.at(static_cast<int>(i), j);
  });
}

Var Tape::masked_softmax(Var scores, const Tensor& mask) {
  check(scores);
  const Tensor& sv = val(scores.id);
  if (sv.ndim() != 2 || !sv.same_shape(mask))
    shape_error("masked_softmax", sv, mask);
  int n = sv.rows(), c = sv.cols();
  Tensor out = Tensor::zeros({n, c});
  for (int i = 0; i < n; ++i) {
    double maxv = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < c; ++j)
      if (mask.at(i, j) != 0.0 && sv.at(i, j) > maxv) maxv = sv.at(i, j);
    if (maxv == -std::numeric_limits<double>::infinity()) continue;  // all masked
    double sum = 0.0;
    for (int j = 0; j < c; ++j)
      if (mask.at(i, j) != 0.0) {
        double e = std::exp(sv.at(i, j) - maxv);
        out.at(i, j) = e;
        sum += e;
      }
    for (int j = 0; j < c; ++j)
      if (mask.at(i, j) != 0.0) out.at(i, j) /= sum;
  }
  bool ng = node(scores.id).needs_grad;
  int id = static_cast<int>(nodes_.size());
  return push(std::move(out), ng, [scores, id, mask, n, c](Tape& t) {
    const Tensor& g = t.grad_buf(id);
    const Tensor& y = t.val(id);
    Tensor& gs = t.grad_buf(scores.id);
    for (int i = 0; i < n; ++i) {
      double dot = 0.0;
      for (int j = 0; j < c; ++j)
        if (mask.at(i, j) != 0.0) dot += g.at(i, j) * y.at(i, j);
      for (int j = 0; j < c; ++j)
        if (mask.at(i, j) != 0.0)
          gs.at(i, j) += y.at(i, j) * (g.at(i, j) - dot);
    }
  });
}

Var Tape::dropout(Var a, double p, Rng& rng) {
  check(a);
  if (p < 0.0 || p >= 1.0)
    throw std::invalid_argument("dropout: probability must be in [0,1), got " +
                                std::to_string(p));
  const Tensor& av = val(a.id);
  double keep_scale = 1.0 / (1.0 - p);
  std::vector<double> mult(static_cast<size_t>(av.size()));
  for (double& m : mult) m = rng.uniform() < p ? 0.0 : keep_scale;
  Tensor out = av;
  for (int64_t i = 0; i < out.size(); ++i) out[i] *= mult[i];
  bool ng = node(a.id).needs_grad;
  int id = static_cast<int>(nodes_.size());
  return push(std::move(out), ng, [a, id, mult = std::move(mult)](Tape& t) {
    const Tensor& g = t.grad_buf(id);
    Tensor& ga = t.grad_buf(a.id);
    for (int64_t i = 0; i < g.size(); ++i) ga[i] += g[i] * mult[i];
  });
}

Var Tape::relation_scores(Var q, Var rel_proj, const std::vector<int>& labels,
                          const Tensor& adj) {
  check(q);
  check(rel_proj);
  const Tensor &qv = val(q.id), &rv = val(rel_proj.id);
  int n = qv.rows(), d = qv.cols(), v = rv.rows();
  if (rv.cols() != d) shape_error("relation_scores", qv, rv);
  if (adj.ndim() != 2 || adj.rows() != n || adj.cols() != n ||
      labels.size() != static_cast<size_t>(n) * n)
    throw std::invalid_argument("relation_scores: adjacency/labels do not match " +
                                qv.shape_str());
  Tensor out = Tensor::zeros({n, n});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (adj.at(i, j) == 0.0) continue;
      int l = labels[static_cast<size_t>(i) * n + j];
      if (l < 0 || l >= v)
        throw std::invalid_argument("relation_scores: label id " +
                                    std::to_string(l) + " outside table " +
                                    rv.shape_str());
      double s = 0.0;
      for (int k = 0; k < d; ++k) s += qv.at(i, k) * rv.at(l, k);
      out.at(i, j) = s;
    }
  bool ng = node(q.id).needs_grad || node(rel_proj.id).needs_grad;
  int id = static_cast<int>(nodes_.size());
  return push(std::move(out), ng,
              [q, rel_proj, id, labels, adj, n, d](Tape& t) {
                const Tensor& g = t.grad_buf(id);
                const Tensor &qv2 = t.val(q.id), &rv2 = t.val(rel_proj.id);
                bool want_q = t.node(q.id).needs_grad;
                bool want_r = t.node(rel_proj.id).needs_grad;
                for (int i = 0; i < n; ++i)
                  for (int j = 0; j < n; ++j) {
                    if (adj.at(i, j) == 0.0) continue;
                    int l = labels[static_cast<size_t>(i) * n + j];
                    double gij = g.at(i, j);
                    if (gij == 0.0) continue;
                    if (want_q) {
                      Tensor& gq = t.grad_buf(q.id);
                      for (int k = 0; k < d; ++k)
                        gq.at(i, k) += gij * rv2.at(l, k);
                    }
                    if (want_r) {
                      Tensor& gr = t.grad_buf(rel_proj.id);
                      for (int k = 0; k < d; ++k)
                        gr.at(l, k) += gij * qv2.at(i, k);
                    }
                  }
              });
}

Var Tape::relation_weighted_sum(Var alpha, Var rel_proj,
                                const std::vector<int>& labels,
                                const Tensor& adj) {
  check(alpha);
  check(rel_proj);
  const Tensor &av = val(alpha.id), &rv = val(rel_proj.id);
  int n = av.rows(), d = rv.cols(), v = rv.rows();
  if (av.cols() != n || adj.rows() != n || adj.cols() != n ||
      labels.size() != static_cast<size_t>(n) * n)
    throw std::invalid_argument(
        "relation_weighted_sum: adjacency/labels do not match " +
        av.shape_str());
  Tensor out = Tensor::zeros({n, d});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (adj.at(i, j) == 0.0) continue;
      int l = labels[static_cast<size_t>(i) * n + j];
      if (l < 0 || l >= v)
        throw std::invalid_argument("relation_weighted_sum: label id " +
                                    std::to_string(l) + " outside table " +
                                    rv.shape_str());
      double w = av.at(i, j);
      for (int k = 0; k < d; ++k) out.at(i, k) += w * rv.at(l, k);
    }
  bool ng = node(alpha.id).needs_grad || node(rel_proj.id).needs_grad;
  int id = static_cast<int>(nodes_.size());
  return push(std::move(out), ng,
              [alpha, rel_proj, id, labels, adj, n, d](Tape& t) {
                const Tensor& g = t.grad_buf(id);
                const Tensor &av2 = t.val(alpha.id), &rv2 = t.val(rel_proj.id);
                bool want_a = t.node(alpha.id).needs_grad;
                bool want_r = t.node(rel_proj.id).needs_grad;
                for (int i = 0; i < n; ++i)
                  for (int j = 0; j < n; ++j) {
                    if (adj.at(i, j) == 0.0) continue;
                    int l = labels[static_cast<size_t>(i) * n + j];
                    if (want_a) {
                      double s = 0.0;
                      for (int k = 0; k < d; ++k)
                        s += g.at(i, k) * rv2.at(l, k);
                      t.grad_buf(alpha.id).at(i, j) += s;
                    }
                    if (want_r) {
                      Tensor& gr = t.grad_buf(rel_proj.id);
                      double w = av2.at(i, j);
                      for (int k = 0; k < d; ++k)
                        gr.at(l, k) += w * g.at(i, k);
                    }
                  }
              });
}

void Tape::backward(Var loss) {
  check(loss);
  if (val(loss.id).size() != 1)
    throw std::invalid_argument("backward: loss must be scalar, got " +
                                val(loss.id).shape_str());
  grad_buf(loss.id)[0] = 1.0;
  for (int id = loss.id; id >= 0; --id) {
    Node& n = node(id);
    if (!n.needs_grad || !n.back) continue;
    if (!n.ext_grad && !n.grad_zeroed) continue;  // no gradient reached it
    n.back(*this);
  }
}

}  // namespace rgat
