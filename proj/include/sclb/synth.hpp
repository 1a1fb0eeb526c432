#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "sclb/data.hpp"

namespace sclb {

// Procedural 28x28 digit renderer. Each class is a polyline glyph drawn with
// a random affine jitter (shift, scale, rotation, shear), random stroke
// thickness and brightness, plus Gaussian pixel noise. The draw for image i
// depends only on (seed, i), so any prefix of the stream is stable.

namespace synth_detail {

struct P {
  double x, y;
};

using Stroke = std::vector<P>;

inline const std::vector<std::vector<Stroke>>& glyphs() {
  static const std::vector<std::vector<Stroke>> g = {
      // 0
      {{{0.30, 0.12}, {0.70, 0.12}, {0.82, 0.35}, {0.82, 0.65}, {0.70, 0.88}, {0.30, 0.88}, {0.18, 0.65}, {0.18, 0.35}, {0.30, 0.12}}},
      // 1
      {{{0.32, 0.28}, {0.52, 0.10}, {0.52, 0.90}}, {{0.34, 0.90}, {0.70, 0.90}}},
      // 2
      {{{0.22, 0.28}, {0.32, 0.12}, {0.68, 0.12}, {0.80, 0.28}, {0.78, 0.45}, {0.20, 0.88}, {0.82, 0.88}}},
      // 3
      {{{0.22, 0.14}, {0.74, 0.14}, {0.48, 0.46}, {0.74, 0.60}, {0.76, 0.76}, {0.60, 0.90}, {0.24, 0.88}}},
      // 4
      {{{0.64, 0.90}, {0.64, 0.10}, {0.20, 0.62}, {0.84, 0.62}}},
      // 5
      {{{0.78, 0.12}, {0.26, 0.12}, {0.24, 0.48}, {0.62, 0.44}, {0.80, 0.60}, {0.78, 0.78}, {0.58, 0.90}, {0.22, 0.86}}},
      // 6
      {{{0.70, 0.10}, {0.40, 0.34}, {0.24, 0.60}, {0.24, 0.78}, {0.44, 0.90}, {0.66, 0.86}, {0.76, 0.68}, {0.60, 0.52}, {0.30, 0.58}}},
      // 7
      {{{0.20, 0.12}, {0.82, 0.12}, {0.46, 0.90}}, {{0.34, 0.52}, {0.68, 0.52}}},
      // 8
      {{{0.50, 0.10}, {0.72, 0.24}, {0.50, 0.46}, {0.28, 0.24}, {0.50, 0.10}},
       {{0.50, 0.46}, {0.78, 0.66}, {0.50, 0.90}, {0.22, 0.66}, {0.50, 0.46}}},
      // 9
      {{{0.52, 0.10}, {0.74, 0.22}, {0.74, 0.40}, {0.52, 0.50}, {0.28, 0.40}, {0.28, 0.22}, {0.52, 0.10}},
       {{0.74, 0.40}, {0.68, 0.90}}},
  };
  return g;
}

inline double seg_dist(double px, double py, const P& a, const P& b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double wx = px - a.x, wy = py - a.y;
  const double vv = vx * vx + vy * vy;
  double t = vv > 0.0 ? (wx * vx + wy * vy) / vv : 0.0;
  t = std::min(1.0, std::max(0.0, t));
  const double dx = px - (a.x + t * vx), dy = py - (a.y + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace synth_detail

/// Renders image i of the stream into a 28x28 byte buffer; returns the label.
inline std::uint8_t render_synth_digit(std::uint64_t seed, std::uint64_t index, std::uint8_t* out28x28) {
  using namespace synth_detail;
  const std::uint8_t label = static_cast<std::uint8_t>(index % 10);
  RandomEngine rng(mix_seed(seed, 0x64696769ULL + index * 2ULL));

  const double box = 20.0;                     // glyph box in pixels
  const double cx = 14.0 + rng.uniform(-2.5, 2.5);
  const double cy = 14.0 + rng.uniform(-2.5, 2.5);
  const double sx = box * rng.uniform(0.80, 1.15);
  const double sy = box * rng.uniform(0.80, 1.15);
  const double rot = rng.uniform(-0.22, 0.22);
  const double shear = rng.uniform(-0.18, 0.18);
  const double thick = rng.uniform(0.85, 1.75);
  const double bright = rng.uniform(170.0, 255.0);
  const double noise_sd = rng.uniform(5.0, 13.0);

  const double cr = std::cos(rot), sr = std::sin(rot);
  auto map = [&](const P& p) {
    const double ux = (p.x - 0.5) * sx, uy = (p.y - 0.5) * sy;
    const double vx = ux + shear * uy, vy = uy;
    return P{cx + cr * vx - sr * vy, cy + sr * vx + cr * vy};
  };

  std::vector<Stroke> strokes;
  for (const Stroke& s : glyphs()[label]) {
    Stroke t;
    for (const P& p : s) t.push_back(map(p));
    strokes.push_back(std::move(t));
  }

  for (int y = 0; y < 28; ++y)
    for (int x = 0; x < 28; ++x) {
      double d = 1e9;
      for (const Stroke& s : strokes)
        for (std::size_t i = 0; i + 1 < s.size(); ++i)
          d = std::min(d, seg_dist(x, y, s[i], s[i + 1]));
      double v = bright * std::exp(-(d * d) / (2.0 * thick * thick * 0.55));
      v += noise_sd * rng.normal();
      out28x28[y * 28 + x] = static_cast<std::uint8_t>(std::min(255.0, std::max(0.0, std::round(v))));
    }
  return label;
}

/// Balanced 10-class synthetic digit dataset in MNIST layout (1x28x28).
inline Dataset make_synth_digits(std::size_t count, std::uint64_t seed) {
  Dataset ds;
  ds.count = count;
  ds.channels = 1;
  ds.height = 28;
  ds.width = 28;
  ds.num_classes = 10;
  ds.images.resize(count * 28 * 28);
  ds.labels.resize(count);
  for (std::size_t i = 0; i < count; ++i)
    ds.labels[i] = render_synth_digit(seed, i, ds.images.data() + i * 28 * 28);
  return ds;
}

/// Train/test pair from disjoint stream positions.
inline std::pair<Dataset, Dataset> make_synth_splits(std::size_t n_train, std::size_t n_test,
                                                     std::uint64_t seed) {
  Dataset train = make_synth_digits(n_train, seed);
  Dataset test;
  test.count = n_test;
  test.channels = 1;
  test.height = 28;
  test.width = 28;
  test.num_classes = 10;
  test.images.resize(n_test * 28 * 28);
  test.labels.resize(n_test);
  for (std::size_t i = 0; i < n_test; ++i)
    test.labels[i] = render_synth_digit(seed, n_train + i, test.images.data() + i * 28 * 28);
  return {std::move(train), std::move(test)};
}

}  // namespace sclb
