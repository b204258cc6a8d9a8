#include "rgat/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace rgat {

int64_t shape_size(const std::vector<int>& shape) {
  int64_t n = 1;
  for (int d : shape) {
    if (d < 0) throw std::invalid_argument("negative tensor dimension");
    n *= d;
  }
  return n;
}

Tensor Tensor::zeros(std::vector<int> shape) {
  Tensor t;
  int64_t n = shape_size(shape);
  t.shape = std::move(shape);
  t.data.assign(static_cast<size_t>(n), 0.0);
  return t;
}

Tensor Tensor::full(std::vector<int> shape, double v) {
  Tensor t = zeros(std::move(shape));
  t.fill(v);
  return t;
}

Tensor Tensor::from(std::vector<int> shape, std::vector<double> values) {
  if (shape_size(shape) != static_cast<int64_t>(values.size()))
    throw std::invalid_argument("tensor data length does not match shape");
  Tensor t;
  t.shape = std::move(shape);
  t.data = std::move(values);
  return t;
}

Tensor Tensor::scalar(double v) { return from({1, 1}, {v}); }

int Tensor::rows() const {
  if (ndim() == 2) return shape[0];
  if (ndim() == 1) return 1;
  throw std::invalid_argument("rows() on tensor of rank " +
                              std::to_string(ndim()));
}

int Tensor::cols() const {
  if (ndim() == 2) return shape[1];
  if (ndim() == 1) return shape[0];
  throw std::invalid_argument("cols() on tensor of rank " +
                              std::to_string(ndim()));
}

void Tensor::fill(double v) {
  for (double& x : data) x = v;
}

bool Tensor::all_finite() const {
  for (double x : data)
    if (!std::isfinite(x)) return false;
  return true;
}

std::string Tensor::shape_str() const {
  std::string s = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  s += "]";
  return s;
}

}  // namespace rgat
