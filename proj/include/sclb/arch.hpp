#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "sclb/network.hpp"

namespace sclb {

enum class Family { DConv, DLocal, DFc, SConv, SLocal, SFc, ThreeFc };

inline const char* family_name(Family f) {
  switch (f) {
    case Family::DConv: return "d-conv";
    case Family::DLocal: return "d-local";
    case Family::DFc: return "d-fc";
    case Family::SConv: return "s-conv";
    case Family::SLocal: return "s-local";
    case Family::SFc: return "s-fc";
    case Family::ThreeFc: return "3-fc";
  }
  return "?";
}

inline Family family_from_name(const std::string& s) {
  for (Family f : {Family::DConv, Family::DLocal, Family::DFc, Family::SConv,
                   Family::SLocal, Family::SFc, Family::ThreeFc})
    if (s == family_name(f)) return f;
  throw ConfigError("unknown architecture '" + s + "'");
}

inline bool is_deep(Family f) { return f == Family::DConv || f == Family::DLocal || f == Family::DFc; }
inline bool is_shallow(Family f) { return f == Family::SConv || f == Family::SLocal || f == Family::SFc; }

enum class DropoutPlacement { None, LastTwo };

struct ArchSpec {
  Family family = Family::SConv;
  std::uint32_t alpha = 1;        // base channels
  std::uint32_t image_size = 32;  // square inputs
  std::uint32_t in_channels = 3;
  std::uint32_t num_classes = 10;
  std::uint32_t hidden = 0;  // 3-fc only: width of the two hidden layers
  DropoutPlacement dropout = DropoutPlacement::None;
  double dropout_rate = 0.5;

  void validate() const {
    if (num_classes < 2) throw ConfigError("arch: num_classes must be >= 2");
    if (in_channels < 1) throw ConfigError("arch: in_channels must be >= 1");
    if (image_size < 1) throw ConfigError("arch: image_size must be >= 1");
    if (family == Family::ThreeFc) {
      if (hidden < 1) throw ConfigError("arch: 3-fc requires hidden >= 1");
      return;
    }
    if (alpha < 1) throw ConfigError("arch: alpha must be >= 1");
    if (is_deep(family) && image_size % 16 != 0)
      throw ConfigError("arch: deep family requires image_size divisible by 16");
    if (is_shallow(family) && image_size % 2 != 0)
      throw ConfigError("arch: shallow family requires even image_size");
  }
};

namespace detail {

struct ConvRow {
  std::uint32_t mult;  // out channels = mult * alpha
  std::uint32_t stride;
};

inline const std::array<ConvRow, 8>& deep_rows() {
  static const std::array<ConvRow, 8> rows = {
      {{1, 1}, {2, 2}, {2, 1}, {4, 2}, {4, 1}, {8, 2}, {8, 1}, {16, 2}}};
  return rows;
}

using u128 = unsigned __int128;

inline std::uint64_t to_u64(u128 v, const char* what) {
  if (v > static_cast<u128>(UINT64_MAX)) throw ConfigError(std::string(what) + ": count overflows 64 bits");
  return static_cast<std::uint64_t>(v);
}

/// Closed-form weight count (no biases, no batch-norm), as published in the
/// architecture tables. The d-local per-layer sizes follow the printed rows,
/// which halve each layer; the realized locally-connected network is larger
/// (see built_weight_count).
inline u128 param_count_i128(const ArchSpec& a) {
  const u128 al = a.alpha, s = a.image_size, ch = a.in_channels, c = a.num_classes;
  switch (a.family) {
    case Family::ThreeFc: {
      const u128 h = a.hidden;
      return ch * s * s * h + h * h + h * c;
    }
    case Family::DConv: {
      u128 total = 9 * ch * al;  // conv1
      for (int j = 2; j <= 8; ++j) total += 9 * (u128(1) << (j - 1)) * al * al;
      return total + 4 * s * s * al * al + 64 * c * al;
    }
    case Family::DLocal: {
      u128 total = 9 * ch * s * s * al;
      for (int j = 2; j <= 8; ++j) total += 9 * s * s * al * al / (u128(1) << (j - 1));
      return total + 4 * s * s * al * al + 64 * c * al;
    }
    case Family::DFc: {
      u128 total = ch * s * s * s * s * al;
      for (int j = 2; j <= 8; ++j) total += s * s * s * s * al * al / (u128(1) << (j - 1));
      return total + 4 * s * s * al * al + 64 * c * al;
    }
    case Family::SConv:
      return 81 * ch * al + 6 * s * s * al * al + 24 * c * al;
    case Family::SLocal:
      return 81 * ch * s * s * al / 4 + 6 * s * s * al * al + 24 * c * al;
    case Family::SFc:
      return ch * s * s * s * s * al / 4 + 6 * s * s * al * al + 24 * c * al;
  }
  throw ConfigError("arch: unknown family");
}

/// Weight count actually registered by build(): connectivity-faithful. Equals
/// param_count for every family except d-local, whose published rows
/// understate the per-location kernels of the stride-1 layers.
inline u128 built_weight_count_i128(const ArchSpec& a) {
  const u128 al = a.alpha, c = a.num_classes;
  u128 cur_c = a.in_channels, cur_s = a.image_size;
  u128 total = 0;
  auto add_stage = [&](std::uint32_t k, std::uint32_t stride, std::uint32_t pad, u128 out_c, bool local, bool dense) {
    const u128 out_s = (cur_s + 2 * pad - k) / stride + 1;
    if (dense)
      total += cur_c * cur_s * cur_s * out_c * out_s * out_s;
    else if (local)
      total += u128(k) * k * cur_c * out_c * out_s * out_s;
    else
      total += u128(k) * k * cur_c * out_c;
    cur_c = out_c;
    cur_s = out_s;
  };
  switch (a.family) {
    case Family::ThreeFc: {
      const u128 h = a.hidden;
      return u128(a.in_channels) * a.image_size * a.image_size * h + h * h + h * c;
    }
    case Family::DConv:
    case Family::DLocal:
    case Family::DFc:
      for (const ConvRow& r : deep_rows())
        add_stage(3, r.stride, 1, r.mult * al, a.family == Family::DLocal, a.family == Family::DFc);
      return total + cur_c * cur_s * cur_s * 64 * al + 64 * al * c;
    case Family::SConv:
    case Family::SLocal:
    case Family::SFc:
      add_stage(9, 2, 4, al, a.family == Family::SLocal, a.family == Family::SFc);
      return total + cur_c * cur_s * cur_s * 24 * al + 24 * al * c;
  }
  throw ConfigError("arch: unknown family");
}

}  // namespace detail

inline std::uint64_t param_count(const ArchSpec& a) {
  a.validate();
  return detail::to_u64(detail::param_count_i128(a), "param_count");
}

inline std::uint64_t built_weight_count(const ArchSpec& a) {
  a.validate();
  return detail::to_u64(detail::built_weight_count_i128(a), "built_weight_count");
}

/// Picks the scale knob (alpha, or hidden width for 3-fc) whose
/// fully-connected embedding is closest in weight count to the target.
inline std::uint32_t solve_alpha(Family family, std::uint64_t target_fc_embedding,
                                 std::uint32_t image_size, std::uint32_t num_classes,
                                 std::uint32_t in_channels = 3) {
  ArchSpec probe;
  probe.family = is_deep(family) ? Family::DFc : (is_shallow(family) ? Family::SFc : Family::ThreeFc);
  probe.image_size = image_size;
  probe.num_classes = num_classes;
  probe.in_channels = in_channels;
  auto count = [&](std::uint64_t x) {
    if (probe.family == Family::ThreeFc)
      probe.hidden = static_cast<std::uint32_t>(x);
    else
      probe.alpha = static_cast<std::uint32_t>(x);
    probe.validate();
    return detail::param_count_i128(probe);
  };
  const detail::u128 target = target_fc_embedding;
  if (count(1) > target)
    throw ConfigError("solve_alpha: target below the size of the smallest model");
  // Largest x with count(x) <= target (count is strictly increasing).
  std::uint64_t lo = 1, hi = 2;
  while (hi < (1u << 30) && count(hi) <= target) {
    lo = hi;
    hi *= 2;
  }
  while (lo + 1 < hi) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (count(mid) <= target)
      lo = mid;
    else
      hi = mid;
  }
  // Nearest of the two bracketing sizes; ties go to the smaller model.
  const detail::u128 below = target - count(lo);
  const detail::u128 above = count(lo + 1) - target;
  return static_cast<std::uint32_t>(above < below ? lo + 1 : lo);
}

/// Builds the network for a spec: every layer except the last carries
/// batch-norm + ReLU; optional dropout sits on the inputs of the last two
/// dense layers. Parameters init: weights uniform(-a,a) with a=sqrt(6/fan_in),
/// biases zero, batch-norm scale 1 / shift 0; deterministic in (seed, layer).
template <typename T>
Network<T> build(const ArchSpec& a, std::uint64_t seed) {
  a.validate();
  Network<T> net;
  net.set_input_shape({a.in_channels, a.image_size, a.image_size});

  std::size_t layer_index = 0;
  auto engine = [&](std::size_t idx) { return RandomEngine(mix_seed(seed, idx)); };

  auto add_fc = [&](const std::string& name, std::size_t in, std::size_t out, ParamGroup g) {
    auto l = std::make_unique<FcLayer<T>>(name, in, out, g);
    RandomEngine rng = engine(layer_index);
    init_uniform_fanin(l->weight().value, in, rng);
    net.add(std::move(l));
    ++layer_index;
  };
  auto add_bn_flat = [&](const std::string& name, std::size_t units) {
    net.add(std::make_unique<BatchNormLayer<T>>(name, units, BatchNormLayer<T>::Flavor::Flat));
    ++layer_index;
  };
  auto add_bn_spatial = [&](const std::string& name, std::size_t channels) {
    net.add(std::make_unique<BatchNormLayer<T>>(name, channels, BatchNormLayer<T>::Flavor::Spatial));
    ++layer_index;
  };
  auto add_relu = [&](const std::string& name) {
    net.add(std::make_unique<ReluLayer<T>>(name));
    ++layer_index;
  };
  auto add_flatten = [&]() {
    net.add(std::make_unique<FlattenLayer<T>>("flatten"));
    ++layer_index;
  };
  auto add_dropout = [&](const std::string& name) {
    if (a.dropout == DropoutPlacement::LastTwo)
      net.add(std::make_unique<DropoutLayer<T>>(name, a.dropout_rate, &net.dropout_rng()));
    ++layer_index;  // index advances regardless so init streams stay aligned
  };

  std::size_t cur_c = a.in_channels, cur_s = a.image_size;

  if (a.family == Family::ThreeFc) {
    add_flatten();
    add_fc("fc1", cur_c * cur_s * cur_s, a.hidden, ParamGroup::FcLike);
    add_bn_flat("bn1", a.hidden);
    add_relu("relu1");
    add_dropout("drop1");
    add_fc("fc2", a.hidden, a.hidden, ParamGroup::FcLike);
    add_bn_flat("bn2", a.hidden);
    add_relu("relu2");
    add_dropout("drop2");
    add_fc("fc3", a.hidden, a.num_classes, ParamGroup::FcLike);
    net.finalize();
    return net;
  }

  const bool deep = is_deep(a.family);
  const bool local = a.family == Family::DLocal || a.family == Family::SLocal;
  const bool dense = a.family == Family::DFc || a.family == Family::SFc;

  if (dense) add_flatten();

  auto add_stage = [&](const std::string& base, std::size_t k, std::size_t stride, std::size_t pad,
                       std::size_t out_c) {
    const std::size_t out_s = conv_out_size(cur_s, k, stride, pad);
    if (dense) {
      add_fc(base, cur_c * cur_s * cur_s, out_c * out_s * out_s, ParamGroup::ConvLike);
      add_bn_flat("bn_" + base, out_c * out_s * out_s);
    } else if (local) {
      auto l = std::make_unique<Local2dLayer<T>>(base, cur_c, out_c, k, stride, pad, cur_s, cur_s,
                                                 ParamGroup::ConvLike);
      RandomEngine rng = engine(layer_index);
      init_uniform_fanin(l->weight().value, cur_c * k * k, rng);
      net.add(std::move(l));
      ++layer_index;
      add_bn_spatial("bn_" + base, out_c);
    } else {
      auto l = std::make_unique<Conv2dLayer<T>>(base, cur_c, out_c, k, stride, pad, ParamGroup::ConvLike);
      RandomEngine rng = engine(layer_index);
      init_uniform_fanin(l->weight().value, cur_c * k * k, rng);
      net.add(std::move(l));
      ++layer_index;
      add_bn_spatial("bn_" + base, out_c);
    }
    add_relu("relu_" + base);
    cur_c = out_c;
    cur_s = out_s;
  };

  if (deep) {
    int j = 1;
    for (const detail::ConvRow& r : detail::deep_rows()) {
      add_stage("conv" + std::to_string(j), 3, r.stride, 1, static_cast<std::size_t>(r.mult) * a.alpha);
      ++j;
    }
  } else {
    add_stage("conv1", 9, 2, 4, a.alpha);
  }

  if (!dense) add_flatten();
  const std::size_t flat = cur_c * cur_s * cur_s;
  const std::size_t fc1_units = (deep ? 64 : 24) * static_cast<std::size_t>(a.alpha);
  add_dropout("drop1");
  add_fc("fc1", flat, fc1_units, ParamGroup::FcLike);
  add_bn_flat("bn_fc1", fc1_units);
  add_relu("relu_fc1");
  add_dropout("drop2");
  add_fc("fc2", fc1_units, a.num_classes, ParamGroup::FcLike);
  net.finalize();
  return net;
}

}  // namespace sclb
