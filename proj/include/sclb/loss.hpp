#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "sclb/tensor.hpp"

namespace sclb {

/// Mean softmax cross-entropy over the batch, stabilized by max subtraction.
/// Returns (loss, dL/dlogits) with gradient (softmax - onehot) / N.
template <typename T>
std::pair<double, Tensor<T>> softmax_xent(const Tensor<T>& logits,
                                          const std::vector<std::uint32_t>& labels) {
  if (logits.rank() != 2) throw ConfigError("softmax_xent: logits must be [N,c]");
  const std::size_t n = logits.dim(0), c = logits.dim(1);
  if (labels.size() != n) throw ConfigError("softmax_xent: label count != batch size");
  Tensor<T> grad({n, c});
  double loss = 0.0;
  std::vector<double> p(c);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] >= c)
      throw ConfigError("softmax_xent: label " + std::to_string(labels[i]) +
                        " out of range [0," + std::to_string(c) + ")");
    const T* row = logits.data() + i * c;
    double zmax = static_cast<double>(row[0]);
    for (std::size_t k = 1; k < c; ++k) zmax = std::max(zmax, static_cast<double>(row[k]));
    double denom = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
      p[k] = std::exp(static_cast<double>(row[k]) - zmax);
      denom += p[k];
    }
    loss += std::log(denom) - (static_cast<double>(row[labels[i]]) - zmax);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t k = 0; k < c; ++k) {
      double g = p[k] / denom;
      if (k == labels[i]) g -= 1.0;
      grad[i * c + k] = static_cast<T>(g * inv_n);
    }
  }
  return {loss / static_cast<double>(n), std::move(grad)};
}

/// Index of the row maximum; ties resolve to the lowest index.
template <typename T>
std::uint32_t argmax_row(const Tensor<T>& logits, std::size_t row) {
  const std::size_t c = logits.dim(1);
  const T* r = logits.data() + row * c;
  std::uint32_t best = 0;
  for (std::size_t k = 1; k < c; ++k)
    if (r[k] > r[best]) best = static_cast<std::uint32_t>(k);
  return best;
}

template <typename T>
std::size_t count_correct(const Tensor<T>& logits, const std::vector<std::uint32_t>& labels) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < logits.dim(0); ++i)
    if (argmax_row(logits, i) == labels[i]) ++correct;
  return correct;
}

}  // namespace sclb
