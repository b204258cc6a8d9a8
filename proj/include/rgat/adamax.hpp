#pragma once

#include <vector>

#include "rgat/tape.hpp"

namespace rgat {

// Adamax (the infinity-norm Adam variant):
//   m <- b1*m + (1-b1)*g,  u <- max(b2*u, |g|),
//   theta <- theta - lr/(1-b1^t) * m/(u+eps)
class Adamax {
 public:
  explicit Adamax(std::vector<Parameter*> params, double lr = 1e-3,
                  double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  // applies one update from the accumulated gradients; throws on a
  // non-finite gradient, naming the parameter
  void step();
  void zero_grad();
  int64_t steps() const { return t_; }

 private:
  struct Moments {
    Tensor m, u;
  };
  std::vector<Parameter*> params_;
  std::vector<Moments> state_;
  double lr_, beta1_, beta2_, eps_;
  int64_t t_ = 0;
  double beta1_pow_ = 1.0;
};

}  // namespace rgat
