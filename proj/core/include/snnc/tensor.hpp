#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "snnc/errors.hpp"

namespace snnc {

// Dense row-major tensor of doubles. Deliberately minimal: shape plus flat
// storage; the layers know how to interpret the dimensions.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> v;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> dims)
      : shape(std::move(dims)), v(count(shape), 0.0) {}
  Tensor(std::vector<std::size_t> dims, std::vector<double> values)
      : shape(std::move(dims)), v(std::move(values)) {
    check_dims(v.size() == count(shape), "tensor data does not match shape");
  }

  static std::size_t count(const std::vector<std::size_t>& dims) {
    std::size_t n = 1;
    for (std::size_t d : dims) n *= d;
    return n;
  }
  static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape); }

  std::size_t size() const { return v.size(); }
  double* data() { return v.data(); }
  const double* data() const { return v.data(); }
  double& operator[](std::size_t i) { return v[i]; }
  double operator[](std::size_t i) const { return v[i]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

inline double squared_l2(const Tensor& t) {
  double s = 0.0;
  for (double x : t.v) s += x * x;
  return s;
}

inline double l2_norm(const Tensor& t) { return std::sqrt(squared_l2(t)); }

}  // namespace snnc
