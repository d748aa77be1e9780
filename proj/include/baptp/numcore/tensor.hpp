#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "baptp/error.hpp"

namespace baptp::numcore {

std::string shape_str(const std::vector<std::size_t>& shape);

inline std::size_t shape_numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

// Dense tensor with contiguous row-major storage. Immutable by convention
// once handed to a Graph; extents must be positive.
template <typename T>
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<T> data;

  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
    validate_shape();
    data.assign(shape_numel(shape), T(0));
  }

  Tensor(std::vector<std::size_t> s, std::vector<T> values)
      : shape(std::move(s)), data(std::move(values)) {
    validate_shape();
    if (data.size() != shape_numel(shape)) {
      throw ShapeError("tensor: " + std::to_string(data.size()) +
                       " values do not fill shape " + shape_str(shape));
    }
  }

  static Tensor zeros(std::vector<std::size_t> s) { return Tensor(std::move(s)); }
  static Tensor full(std::vector<std::size_t> s, T v) {
    Tensor t(std::move(s));
    for (T& x : t.data) x = v;
    return t;
  }
  static Tensor scalar(T v) { return Tensor({1, 1}, {v}); }

  std::size_t numel() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t rows() const { return shape.at(0); }
  std::size_t cols() const { return shape.at(1); }

  T& operator[](std::size_t i) { return data[i]; }
  const T& operator[](std::size_t i) const { return data[i]; }

  // Rank-2 accessors.
  T& at(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
  const T& at(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

 private:
  void validate_shape() const {
    if (shape.empty()) {
      throw ShapeError("tensor: empty shape");
    }
    for (std::size_t e : shape) {
      if (e == 0) {
        throw ShapeError("tensor: zero extent in shape " + shape_str(shape));
      }
    }
  }
};

inline std::string shape_str(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  s += "]";
  return s;
}

}  // namespace baptp::numcore
