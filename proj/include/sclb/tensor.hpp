#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "sclb/common.hpp"

namespace sclb {

/// Dense n-dimensional array, row-major. The element type is float in
/// production builds; tests instantiate double for high-precision oracles.
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shape, T fill_value = T(0))
      : shape_(std::move(shape)) {
    std::size_t n = 1;
    for (std::size_t d : shape_) {
      if (d == 0) throw ConfigError("tensor: zero dimension in shape");
      n *= d;
    }
    if (shape_.empty()) throw ConfigError("tensor: empty shape");
    data_.assign(n, fill_value);
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_[i]; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  typename std::vector<T>::iterator begin() { return data_.begin(); }
  typename std::vector<T>::iterator end() { return data_.end(); }
  typename std::vector<T>::const_iterator begin() const { return data_.begin(); }
  typename std::vector<T>::const_iterator end() const { return data_.end(); }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  /// Reinterprets the layout under a new shape with the same element count.
  Tensor reshaped(std::vector<std::size_t> new_shape) const {
    std::size_t n = 1;
    for (std::size_t d : new_shape) n *= d;
    if (n != size()) throw ConfigError("tensor: reshape changes element count");
    Tensor out;
    out.shape_ = std::move(new_shape);
    out.data_ = data_;
    return out;
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  bool all_finite() const {
    for (const T& v : data_)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  std::size_t count_nonzero() const {
    std::size_t n = 0;
    for (const T& v : data_)
      if (v != T(0)) ++n;
    return n;
  }

  bool operator==(const Tensor& o) const {
    return shape_ == o.shape_ && data_ == o.data_;
  }

 private:
  std::vector<std::size_t> shape_;
  std::vector<T> data_;
};

template <typename T>
Tensor<T> tensor_fill(std::vector<std::size_t> shape, T value) {
  return Tensor<T>(std::move(shape), value);
}

inline std::string shape_to_string(const std::vector<std::size_t>& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

}  // namespace sclb
