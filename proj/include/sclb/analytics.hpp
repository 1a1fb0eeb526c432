#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sclb/data.hpp"
#include "sclb/network.hpp"

namespace sclb {

struct SparsityRow {
  std::string layer;
  std::uint64_t total = 0;
  std::uint64_t nonzero = 0;
};

struct SparsityReport {
  std::vector<SparsityRow> per_layer;
  // Matched conv/local first-layer sizes, when the caller wants the
  // comparison lines of the layer-size plots.
  std::optional<std::pair<std::uint64_t, std::uint64_t>> reference_counts;

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (const auto& r : per_layer) t += r.total;
    return t;
  }
  std::uint64_t nonzero_total() const {
    std::uint64_t t = 0;
    for (const auto& r : per_layer) t += r.nonzero;
    return t;
  }
};

/// Exact nonzero counts per weight-bearing layer. No tolerance: the
/// hard-threshold optimizer produces bit-exact zeros.
template <typename T>
SparsityReport nnz_report(Network<T>& net) {
  SparsityReport rep;
  for (auto& l : net.layers())
    for (Parameter<T>* p : l->params())
      if (p->counts_as_weight)
        rep.per_layer.push_back({l->name(), p->value.size(), p->value.count_nonzero()});
  return rep;
}

inline void write_sparsity_csv(const std::string& path, const SparsityReport& rep) {
  std::ofstream f(path);
  if (!f) throw FormatError("cannot write '" + path + "'");
  f << "layer,total,nonzero\n";
  for (const auto& r : rep.per_layer) f << r.layer << "," << r.total << "," << r.nonzero << "\n";
}

// ---------------------------------------------------------------------------
// Filter extraction: first-layer weights mapped back to input pixpositions.

template <typename T>
struct FilterImage {
  std::string layer;
  std::size_t unit = 0;  // output unit; local units flatten (channel, i, j)
  std::size_t channels = 0, height = 0, width = 0;
  std::vector<T> weights;  // [channels, height, width]

  std::size_t count_nonzero() const {
    std::size_t n = 0;
    for (T v : weights)
      if (v != T(0)) ++n;
    return n;
  }
};

namespace detail {

template <typename T>
Layer<T>* first_weight_layer(Network<T>& net) {
  for (auto& l : net.layers())
    if (l->kind() == LayerKind::Fc || l->kind() == LayerKind::Conv2D || l->kind() == LayerKind::Local2D)
      return l.get();
  return nullptr;
}

}  // namespace detail

/// Per-output-unit filters of the first parameterized layer placed on the
/// input image grid. A filter is eligible iff it has at least min_nnz
/// nonzeros; if more than max_filters are eligible, a seeded random subset
/// is returned (in ascending unit order).
template <typename T>
std::vector<FilterImage<T>> extract_filters(Network<T>& net, const std::string& layer_name,
                                            std::size_t min_nnz,
                                            std::size_t max_filters = static_cast<std::size_t>(-1),
                                            std::uint64_t seed = 0) {
  if (net.input_shape().size() != 3)
    throw ConfigError("extract_filters: network has no image-shaped input");
  const std::size_t c = net.input_shape()[0], h = net.input_shape()[1], w = net.input_shape()[2];
  Layer<T>* first = detail::first_weight_layer(net);
  if (!first || first->name() != layer_name)
    throw ConfigError("extract_filters: '" + layer_name + "' is not the first parameterized layer");

  std::vector<FilterImage<T>> all;
  if (first->kind() == LayerKind::Fc) {
    auto* fc = static_cast<FcLayer<T>*>(first);
    if (fc->in_features() != c * h * w)
      throw ConfigError("extract_filters: first layer does not cover the input image");
    for (std::size_t o = 0; o < fc->out_features(); ++o) {
      FilterImage<T> f{layer_name, o, c, h, w, {}};
      const T* row = fc->weight().value.data() + o * fc->in_features();
      f.weights.assign(row, row + c * h * w);
      all.push_back(std::move(f));
    }
  } else if (first->kind() == LayerKind::Local2D) {
    auto* lc = static_cast<Local2dLayer<T>*>(first);
    const std::size_t k = lc->kernel(), ho = lc->out_h(), wo = lc->out_w();
    const T* kw = lc->weight().value.data();
    const std::size_t cout = lc->weight().value.dim(0);
    for (std::size_t co = 0; co < cout; ++co)
      for (std::size_t i = 0; i < ho; ++i)
        for (std::size_t j = 0; j < wo; ++j) {
          FilterImage<T> f{layer_name, (co * ho + i) * wo + j, c, h, w, {}};
          f.weights.assign(c * h * w, T(0));
          const T* kloc = kw + (((co * ho + i) * wo + j) * c) * k * k;
          for (std::size_t ci = 0; ci < c; ++ci)
            for (std::size_t u = 0; u < k; ++u)
              for (std::size_t v = 0; v < k; ++v) {
                const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(i * lc->stride() + u) -
                                          static_cast<std::ptrdiff_t>(lc->pad());
                const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(j * lc->stride() + v) -
                                          static_cast<std::ptrdiff_t>(lc->pad());
                if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(h) || iw < 0 ||
                    iw >= static_cast<std::ptrdiff_t>(w))
                  continue;
                f.weights[(ci * h + static_cast<std::size_t>(ih)) * w + static_cast<std::size_t>(iw)] =
                    kloc[(ci * k + u) * k + v];
              }
          all.push_back(std::move(f));
        }
  } else {
    // Convolution kernels are location-free; render at the central window.
    auto* cv = static_cast<Conv2dLayer<T>*>(first);
    const std::size_t k = cv->kernel();
    const std::size_t off_h = (h - std::min(h, k)) / 2, off_w = (w - std::min(w, k)) / 2;
    const T* kw = cv->weight().value.data();
    const std::size_t cout = cv->weight().value.dim(0);
    for (std::size_t co = 0; co < cout; ++co) {
      FilterImage<T> f{layer_name, co, c, h, w, {}};
      f.weights.assign(c * h * w, T(0));
      for (std::size_t ci = 0; ci < c; ++ci)
        for (std::size_t u = 0; u < k && off_h + u < h; ++u)
          for (std::size_t v = 0; v < k && off_w + v < w; ++v)
            f.weights[(ci * h + off_h + u) * w + off_w + v] = kw[((co * c + ci) * k + u) * k + v];
      all.push_back(std::move(f));
    }
  }

  std::vector<FilterImage<T>> eligible;
  for (auto& f : all)
    if (f.count_nonzero() >= min_nnz) eligible.push_back(std::move(f));
  if (eligible.size() <= max_filters) return eligible;

  // Seeded sample without replacement, reported in unit order.
  std::vector<std::uint32_t> pick(eligible.size());
  for (std::size_t i = 0; i < pick.size(); ++i) pick[i] = static_cast<std::uint32_t>(i);
  RandomEngine rng(mix_seed(seed, 0x66696c74ULL));
  rng.shuffle(pick);
  pick.resize(max_filters);
  std::sort(pick.begin(), pick.end());
  std::vector<FilterImage<T>> out;
  for (std::uint32_t i : pick) out.push_back(std::move(eligible[i]));
  return out;
}

/// Spatial spread of a filter: RMS distance of nonzero pixels from their
/// magnitude-weighted centroid, over the same statistic for a uniformly
/// dense filter. A single pixel scores 0, the dense filter scores 1.
/// Channel magnitudes pool onto their shared pixel position.
template <typename T>
double locality_score(const FilterImage<T>& f) {
  const std::size_t h = f.height, w = f.width;
  std::vector<double> mass(h * w, 0.0);
  double total = 0.0;
  for (std::size_t c = 0; c < f.channels; ++c)
    for (std::size_t p = 0; p < h * w; ++p) {
      const double m = std::abs(static_cast<double>(f.weights[c * h * w + p]));
      mass[p] += m;
      total += m;
    }
  if (total == 0.0) throw ConfigError("locality_score: all-zero filter");
  double cy = 0.0, cx = 0.0;
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      cy += mass[y * w + x] * static_cast<double>(y);
      cx += mass[y * w + x] * static_cast<double>(x);
    }
  cy /= total;
  cx /= total;
  double msq = 0.0;
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const double dy = static_cast<double>(y) - cy, dx = static_cast<double>(x) - cx;
      msq += mass[y * w + x] * (dy * dy + dx * dx);
    }
  const double rms = std::sqrt(msq / total);
  const double dh = static_cast<double>(h), dw = static_cast<double>(w);
  const double dense_rms = std::sqrt(((dh * dh - 1.0) + (dw * dw - 1.0)) / 12.0);
  return rms / dense_rms;
}

// ---------------------------------------------------------------------------
// Pixel-permutation harness

/// Applies one fixed pixel permutation identically across channels and
/// images: out[c, p] = in[c, pi[p]].
inline Dataset permute_pixels(const Dataset& ds, const std::vector<std::uint32_t>& pi) {
  const std::size_t hw = ds.height * ds.width;
  if (pi.size() != hw) throw ConfigError("permute_pixels: permutation size mismatch");
  Dataset out = ds;
  for (std::size_t i = 0; i < ds.count; ++i)
    for (std::size_t c = 0; c < ds.channels; ++c) {
      const std::uint8_t* src = ds.image(i) + c * hw;
      std::uint8_t* dst = out.image(i) + c * hw;
      for (std::size_t p = 0; p < hw; ++p) dst[p] = src[pi[p]];
    }
  return out;
}

inline std::pair<Dataset, std::vector<std::uint32_t>> permute_pixels(const Dataset& ds,
                                                                     std::uint64_t seed) {
  auto pi = random_permutation(ds.height * ds.width, seed);
  return {permute_pixels(ds, pi), std::move(pi)};
}

/// Reorders the first dense layer's input columns by the same permutation,
/// all channels consistently: W'[o, c*HW + p] = W[o, c*HW + pi[p]].
template <typename T>
void permute_first_layer(Network<T>& net, const std::vector<std::uint32_t>& pi) {
  if (net.input_shape().size() != 3) throw ConfigError("permute_first_layer: no image input");
  const std::size_t c = net.input_shape()[0];
  const std::size_t hw = net.input_shape()[1] * net.input_shape()[2];
  if (pi.size() != hw) throw ConfigError("permute_first_layer: permutation size mismatch");
  Layer<T>* first = detail::first_weight_layer(net);
  if (!first || first->kind() != LayerKind::Fc)
    throw ConfigError("permute_first_layer: first layer is not dense");
  auto* fc = static_cast<FcLayer<T>*>(first);
  if (fc->in_features() != c * hw)
    throw ConfigError("permute_first_layer: first layer does not cover the input image");
  Tensor<T>& wt = fc->weight().value;
  std::vector<T> row(c * hw);
  for (std::size_t o = 0; o < fc->out_features(); ++o) {
    T* wrow = wt.data() + o * c * hw;
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t p = 0; p < hw; ++p) row[ch * hw + p] = wrow[ch * hw + pi[p]];
    std::copy(row.begin(), row.end(), wrow);
  }
}

// ---------------------------------------------------------------------------
// Image export: P5 (grayscale) for single-channel filters, P6 (RGB) for
// three-channel ones; magnitudes normalized per filter by max |w|.

template <typename T>
void write_filter_image(const std::string& path, const FilterImage<T>& f) {
  if (f.channels != 1 && f.channels != 3)
    throw ConfigError("filter image export supports 1 or 3 channels");
  double maxabs = 0.0;
  for (T v : f.weights) maxabs = std::max(maxabs, std::abs(static_cast<double>(v)));
  const double scale = maxabs > 0.0 ? 255.0 / maxabs : 0.0;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write '" + path + "'");
  out << (f.channels == 1 ? "P5" : "P6") << "\n" << f.width << " " << f.height << "\n255\n";
  const std::size_t hw = f.height * f.width;
  for (std::size_t p = 0; p < hw; ++p)
    for (std::size_t c = 0; c < f.channels; ++c) {
      const double v = std::abs(static_cast<double>(f.weights[c * hw + p])) * scale;
      out.put(static_cast<char>(static_cast<int>(std::lround(std::min(v, 255.0)))));
    }
  if (!out) throw FormatError("write failed for '" + path + "'");
}

template <typename T>
void write_filters_csv(const std::string& path, const std::vector<FilterImage<T>>& filters) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write '" + path + "'");
  out << "unit,channel,row,col,weight\n";
  char buf[64];
  for (const auto& f : filters) {
    const std::size_t hw = f.height * f.width;
    for (std::size_t c = 0; c < f.channels; ++c)
      for (std::size_t y = 0; y < f.height; ++y)
        for (std::size_t x = 0; x < f.width; ++x) {
          const double v = static_cast<double>(f.weights[c * hw + y * f.width + x]);
          if (v == 0.0) continue;  // sparse filters stay small on disk
          std::snprintf(buf, sizeof(buf), "%.9g", v);
          out << f.unit << "," << c << "," << y << "," << x << "," << buf << "\n";
        }
  }
}

}  // namespace sclb
