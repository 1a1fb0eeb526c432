#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sclb/network.hpp"

namespace sclb {

/// Description lengths and the log terms share units. Bits (base 2) is the
/// default so that |d(h)| and log(2/delta) are commensurable; the nats mode
/// exists for sensitivity checks.
enum class LogBase { Bits, Nats };

namespace detail {

inline double log_in(double x, LogBase base) {
  return base == LogBase::Bits ? std::log2(x) : std::log(x);
}

}  // namespace detail

/// Occam bound: L_S + sqrt((|d(h)| + log(2/delta)) / (2m)).
inline double bound_theorem1(double train_loss, std::uint64_t desc_len_bits, std::uint64_t m,
                             double delta, LogBase base = LogBase::Bits) {
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("bound: delta must be in (0,1)");
  if (m == 0) throw ConfigError("bound: sample count must be positive");
  const double num = static_cast<double>(desc_len_bits) + detail::log_in(2.0 / delta, base);
  return train_loss + std::sqrt(num / (2.0 * static_cast<double>(m)));
}

/// Length of the sparse sharing-map encoding:
/// ceil(nnz * log2(k*n) + 2*log2(n)).
inline std::uint64_t sharing_desc_len(std::uint64_t n, std::uint64_t k, std::uint64_t nnz) {
  if (n == 0 || k == 0) throw ConfigError("sharing_desc_len: n and k must be positive");
  if (k > n) throw ConfigError("sharing_desc_len: k must be <= n");
  if (nnz > n) throw ConfigError("sharing_desc_len: nnz must be <= n");
  const double bits = static_cast<double>(nnz) * std::log2(static_cast<double>(k) * static_cast<double>(n)) +
                      2.0 * std::log2(static_cast<double>(n));
  return static_cast<std::uint64_t>(std::ceil(bits));
}

/// Inputs of the sparse-architecture bound.
struct BoundInput {
  double train_loss = 0.0;          // 0-1 loss scale
  std::uint64_t sample_count = 1;   // m
  double delta = 0.05;
  std::uint64_t max_params = 1;     // n
  std::uint64_t distinct_values = 1;  // k
  std::uint64_t bits_per_param = 32;  // b
  std::uint64_t nonzero_count = 0;  // ||w||_0

  void validate() const {
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("bound: delta must be in (0,1)");
    if (sample_count == 0) throw ConfigError("bound: sample count must be positive");
    if (max_params == 0) throw ConfigError("bound: n must be positive");
    if (distinct_values == 0 || distinct_values > max_params)
      throw ConfigError("bound: k must be in [1,n]");
    if (nonzero_count > max_params) throw ConfigError("bound: nnz must be <= n");
    if (bits_per_param == 0) throw ConfigError("bound: b must be positive");
    if (train_loss < 0.0 || train_loss > 1.0) throw ConfigError("bound: train loss must be in [0,1]");
  }
};

/// Sparse-architecture bound:
/// L_S + sqrt((k*b + |d(g)| + log2(2n/delta)) / (2m)).
inline double bound_theorem2(const BoundInput& in, LogBase base = LogBase::Bits) {
  in.validate();
  const double dg = static_cast<double>(sharing_desc_len(in.max_params, in.distinct_values, in.nonzero_count));
  const double num = static_cast<double>(in.distinct_values) * static_cast<double>(in.bits_per_param) + dg +
                     detail::log_in(2.0 * static_cast<double>(in.max_params) / in.delta, base);
  return in.train_loss + std::sqrt(num / (2.0 * static_cast<double>(in.sample_count)));
}

struct BoundReport {
  std::uint64_t n = 0;
  std::uint64_t k = 0;
  std::uint64_t b = 0;
  std::uint64_t nnz = 0;
  std::uint64_t desc_len = 0;  // |d(g)|
  double train_loss = 0.0;
  double gap = 0.0;
  double bound = 0.0;
  LogBase base = LogBase::Bits;
};

/// Evaluates the sparse bound on a trained network: n = weight slots,
/// nnz = exact nonzeros, k = nnz + 1 (every nonzero its own value, plus the
/// shared zero).
template <typename T>
BoundReport network_bound_report(Network<T>& net, std::uint64_t m, double delta, std::uint64_t b,
                                 double train_loss = 0.0, LogBase base = LogBase::Bits) {
  BoundInput in;
  in.train_loss = train_loss;
  in.sample_count = m;
  in.delta = delta;
  in.max_params = net.weight_slot_count();
  in.nonzero_count = net.weight_nonzero_count();
  in.distinct_values = in.nonzero_count + 1;
  in.bits_per_param = b;
  BoundReport r;
  r.n = in.max_params;
  r.k = in.distinct_values;
  r.b = b;
  r.nnz = in.nonzero_count;
  r.desc_len = sharing_desc_len(in.max_params, in.distinct_values, in.nonzero_count);
  r.train_loss = train_loss;
  r.bound = bound_theorem2(in, base);
  r.gap = r.bound - train_loss;
  r.base = base;
  return r;
}

// ---------------------------------------------------------------------------
// Concrete prefix-free encoder for the sharing map. Only the code lengths
// matter for the bound; the encoder exists so prefix-freeness is testable.

/// Sharing map: slot i carries parameter value assignment[i] in [1,k];
/// zero_value_index names the parameter whose value is zero, if any.
struct SharingMap {
  std::vector<std::uint32_t> assignment;
  std::optional<std::uint32_t> zero_value_index;
};

struct Bitstring {
  std::vector<bool> bits;

  void push(std::uint64_t value, std::uint32_t width) {
    for (std::uint32_t i = 0; i < width; ++i)
      bits.push_back(((value >> (width - 1 - i)) & 1u) != 0);
  }

  std::size_t size() const { return bits.size(); }

  bool is_prefix_of(const Bitstring& other) const {
    if (bits.size() > other.bits.size()) return false;
    for (std::size_t i = 0; i < bits.size(); ++i)
      if (bits[i] != other.bits[i]) return false;
    return true;
  }
};

/// Bits needed to address `range` distinct values.
inline std::uint32_t ceil_log2(std::uint64_t range) {
  std::uint32_t w = 0;
  while ((std::uint64_t(1) << w) < range) ++w;
  return w;
}

/// Header: nnz in ceil_log2(n+1) bits, k-1 in ceil_log2(n) bits. Body: for
/// each nonzero slot in ascending order, slot index in ceil_log2(n) bits and
/// its parameter index in ceil_log2(k) bits. Fixed-width headers determine
/// the body length, so no codeword can be a proper prefix of another.
inline Bitstring encode_sharing(std::uint64_t n, std::uint64_t k,
                                const std::vector<std::pair<std::uint32_t, std::uint32_t>>& nonzeros) {
  if (n == 0 || k == 0 || k > n) throw ConfigError("encode_sharing: need 1 <= k <= n");
  if (nonzeros.size() > n) throw ConfigError("encode_sharing: more nonzeros than slots");
  Bitstring out;
  out.push(nonzeros.size(), ceil_log2(n + 1));
  out.push(k - 1, ceil_log2(n));
  for (const auto& [slot, param] : nonzeros) {
    if (slot >= n || param >= k) throw ConfigError("encode_sharing: index out of range");
    out.push(slot, ceil_log2(n));
    out.push(param, ceil_log2(k));
  }
  return out;
}

}  // namespace sclb
