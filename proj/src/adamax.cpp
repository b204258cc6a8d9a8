#include "rgat/adamax.hpp"

#include <cmath>
#include <stdexcept>

namespace rgat {

Adamax::Adamax(std::vector<Parameter*> params, double lr, double beta1,
               double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2),
      eps_(eps) {
  state_.reserve(params_.size());
  for (Parameter* p : params_)
    state_.push_back({Tensor::zeros(p->value.shape), Tensor::zeros(p->value.shape)});
}

void Adamax::step() {
  ++t_;
  beta1_pow_ *= beta1_;
  double rate = lr_ / (1.0 - beta1_pow_);
  for (size_t pi = 0; pi < params_.size(); ++pi) {
    Parameter& p = *params_[pi];
    Moments& s = state_[pi];
    for (int64_t i = 0; i < p.value.size(); ++i) {
      double g = p.grad[i];
      if (!std::isfinite(g))
        throw std::runtime_error("adamax: non-finite gradient in " + p.name +
                                 " at step " + std::to_string(t_));
      s.m[i] = beta1_ * s.m[i] + (1.0 - beta1_) * g;
      s.u[i] = std::max(beta2_ * s.u[i], std::fabs(g));
      p.value[i] -= rate * s.m[i] / (s.u[i] + eps_);
    }
  }
}

void Adamax::zero_grad() {
  for (Parameter* p : params_) p->grad.fill(0.0);
}

}  // namespace rgat
