#pragma once

#include <cmath>
#include <cstddef>
#include <type_traits>

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#define SCLB_HAVE_AVX2 1
#endif

namespace sclb {

// Inner-product and axpy kernels for the dense layers. Reduction order is
// fixed per build, which is what single-run determinism needs. dot_commutative
// additionally makes the result independent of operand ordering: it sums
// exact float->double products with compensated (Neumaier) accumulation, so
// any reordering of the (weight, input) pairs yields the same float after the
// final rounding. The permutation-equivariance mode of dense layers uses it.

template <typename T>
inline T dot(const T* a, const T* b, std::size_t n) {
  T acc[8] = {T(0), T(0), T(0), T(0), T(0), T(0), T(0), T(0)};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc[0] += a[i] * b[i];
    acc[1] += a[i + 1] * b[i + 1];
    acc[2] += a[i + 2] * b[i + 2];
    acc[3] += a[i + 3] * b[i + 3];
    acc[4] += a[i + 4] * b[i + 4];
    acc[5] += a[i + 5] * b[i + 5];
    acc[6] += a[i + 6] * b[i + 6];
    acc[7] += a[i + 7] * b[i + 7];
  }
  for (; i < n; ++i) acc[i & 7] += a[i] * b[i];
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

#ifdef SCLB_HAVE_AVX2
template <>
inline float dot<float>(const float* a, const float* b, std::size_t n) {
  __m256 acc0 = _mm256_setzero_ps(), acc1 = _mm256_setzero_ps();
  __m256 acc2 = _mm256_setzero_ps(), acc3 = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
    acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i + 8), _mm256_loadu_ps(b + i + 8), acc1);
    acc2 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i + 16), _mm256_loadu_ps(b + i + 16), acc2);
    acc3 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i + 24), _mm256_loadu_ps(b + i + 24), acc3);
  }
  for (; i + 8 <= n; i += 8)
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
  __m256 acc = _mm256_add_ps(_mm256_add_ps(acc0, acc1), _mm256_add_ps(acc2, acc3));
  alignas(32) float t[8];
  _mm256_store_ps(t, acc);
  float s = ((t[0] + t[1]) + (t[2] + t[3])) + ((t[4] + t[5]) + (t[6] + t[7]));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}
#endif

/// y += s * x
template <typename T>
inline void axpy(T* y, T s, const T* x, std::size_t n) {
  std::size_t i = 0;
#ifdef SCLB_HAVE_AVX2
  if constexpr (std::is_same_v<T, float>) {
    __m256 sv = _mm256_set1_ps(s);
    for (; i + 8 <= n; i += 8)
      _mm256_storeu_ps(y + i, _mm256_fmadd_ps(sv, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  }
#endif
  for (; i < n; ++i) y[i] += s * x[i];
}

namespace detail {

/// Neumaier update: s += v, rounding error captured exactly in c.
inline void two_sum_acc(double& s, double& c, double v) {
  double t = s + v;
  if (std::abs(s) >= std::abs(v))
    c += (s - t) + v;
  else
    c += (v - t) + s;
  s = t;
}

}  // namespace detail

/// Order-invariant inner product: the returned value depends only on the
/// multiset of (a[i], b[i]) pairs, not on their order. Each float product is
/// exact in double; compensated accumulation keeps ~106 significand bits, far
/// below the final float rounding boundary.
inline float dot_commutative(const float* a, const float* b, std::size_t n) {
  double s0 = 0, c0 = 0, s1 = 0, c1 = 0, s2 = 0, c2 = 0, s3 = 0, c3 = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    detail::two_sum_acc(s0, c0, static_cast<double>(a[i]) * static_cast<double>(b[i]));
    detail::two_sum_acc(s1, c1, static_cast<double>(a[i + 1]) * static_cast<double>(b[i + 1]));
    detail::two_sum_acc(s2, c2, static_cast<double>(a[i + 2]) * static_cast<double>(b[i + 2]));
    detail::two_sum_acc(s3, c3, static_cast<double>(a[i + 3]) * static_cast<double>(b[i + 3]));
  }
  for (; i < n; ++i)
    detail::two_sum_acc(s0, c0, static_cast<double>(a[i]) * static_cast<double>(b[i]));
  // Merge lanes exactly: two_sum the high parts, push errors into one stream.
  double s = 0, c = 0;
  detail::two_sum_acc(s, c, s0);
  detail::two_sum_acc(s, c, s1);
  detail::two_sum_acc(s, c, s2);
  detail::two_sum_acc(s, c, s3);
  c += ((c0 + c1) + (c2 + c3));
  return static_cast<float>(s + c);
}

inline double dot_commutative(const double* a, const double* b, std::size_t n) {
  double s = 0, c = 0;
  for (std::size_t i = 0; i < n; ++i) detail::two_sum_acc(s, c, a[i] * b[i]);
  return s + c;
}

}  // namespace sclb
