// SPDX-License-Identifier: Apache-2.0
//
// Built with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include <cmath>

#include "fixv2w/kernels.hpp"
#include "kernels_ref.hpp"

namespace fixv2w::embed::kernels {
namespace {

inline float hsum(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  __m128 sh = _mm_movehdup_ps(lo);
  lo = _mm_add_ps(lo, sh);
  sh = _mm_movehl_ps(sh, lo);
  return _mm_cvtss_f32(_mm_add_ss(lo, sh));
}

inline __m256 abs_ps(__m256 x) { return _mm256_andnot_ps(_mm256_set1_ps(-0.0f), x); }

// -1, 0 or +1 per lane.
inline __m256 sign_ps(__m256 x) {
  const __m256 zero = _mm256_setzero_ps();
  const __m256 pos = _mm256_and_ps(_mm256_cmp_ps(x, zero, _CMP_GT_OQ), _mm256_set1_ps(1.0f));
  const __m256 neg = _mm256_and_ps(_mm256_cmp_ps(x, zero, _CMP_LT_OQ), _mm256_set1_ps(1.0f));
  return _mm256_sub_ps(pos, neg);
}

float translation_norm(const float* h, const float* r, const float* t, std::size_t n, int p) {
  __m256 acc = _mm256_setzero_ps();
  std::size_t i = 0;
  if (p == 1) {
    for (; i + 8 <= n; i += 8) {
      const __m256 d = _mm256_sub_ps(_mm256_add_ps(_mm256_loadu_ps(h + i), _mm256_loadu_ps(r + i)),
                                     _mm256_loadu_ps(t + i));
      acc = _mm256_add_ps(acc, abs_ps(d));
    }
    float s = hsum(acc);
    for (; i < n; ++i) s += std::abs(h[i] + r[i] - t[i]);
    return s;
  }
  for (; i + 8 <= n; i += 8) {
    const __m256 d =
        _mm256_sub_ps(_mm256_add_ps(_mm256_loadu_ps(h + i), _mm256_loadu_ps(r + i)), _mm256_loadu_ps(t + i));
    acc = _mm256_fmadd_ps(d, d, acc);
  }
  float s = hsum(acc);
  for (; i < n; ++i) {
    const float d = h[i] + r[i] - t[i];
    s += d * d;
  }
  return std::sqrt(s);
}

void translation_residual(const float* h, const float* r, const float* t, float* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(out + i, _mm256_sub_ps(_mm256_add_ps(_mm256_loadu_ps(h + i), _mm256_loadu_ps(r + i)),
                                            _mm256_loadu_ps(t + i)));
  }
  for (; i < n; ++i) out[i] = h[i] + r[i] - t[i];
}

void norm_direction(const float* d, float* out, std::size_t n, int p, float norm) {
  std::size_t i = 0;
  if (p == 1) {
    for (; i + 8 <= n; i += 8) _mm256_storeu_ps(out + i, sign_ps(_mm256_loadu_ps(d + i)));
    for (; i < n; ++i) out[i] = static_cast<float>((d[i] > 0) - (d[i] < 0));
    return;
  }
  const float inv = norm > 0 ? 1.0f / norm : 0.0f;
  const __m256 vinv = _mm256_set1_ps(inv);
  for (; i + 8 <= n; i += 8) _mm256_storeu_ps(out + i, _mm256_mul_ps(_mm256_loadu_ps(d + i), vinv));
  for (; i < n; ++i) out[i] = d[i] * inv;
}

float squared_distance(const float* a, const float* b, std::size_t n) {
  __m256 acc = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 d = _mm256_sub_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i));
    acc = _mm256_fmadd_ps(d, d, acc);
  }
  float s = hsum(acc);
  for (; i < n; ++i) {
    const float d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

float squared_norm(const float* x, std::size_t n) {
  __m256 acc = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 v = _mm256_loadu_ps(x + i);
    acc = _mm256_fmadd_ps(v, v, acc);
  }
  float s = hsum(acc);
  for (; i < n; ++i) s += x[i] * x[i];
  return s;
}

float sum_abs_pow(const float* x, std::size_t n, int q) {
  __m256 acc = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 a = abs_ps(_mm256_loadu_ps(x + i));
    const __m256 term = q == 1 ? a : q == 2 ? _mm256_mul_ps(a, a) : _mm256_mul_ps(_mm256_mul_ps(a, a), a);
    acc = _mm256_add_ps(acc, term);
  }
  float s = hsum(acc);
  for (; i < n; ++i) {
    const float a = std::abs(x[i]);
    s += q == 1 ? a : q == 2 ? a * a : a * a * a;
  }
  return s;
}

void add_abs_pow_grad(const float* x, float* g, std::size_t n, int q, float coef) {
  std::size_t i = 0;
  const __m256 c = _mm256_set1_ps(coef * static_cast<float>(q));
  for (; i + 8 <= n; i += 8) {
    const __m256 v = _mm256_loadu_ps(x + i);
    const __m256 d = q == 1 ? sign_ps(v) : q == 2 ? v : _mm256_mul_ps(v, abs_ps(v));
    _mm256_storeu_ps(g + i, _mm256_fmadd_ps(c, d, _mm256_loadu_ps(g + i)));
  }
  if (i < n) ref::add_abs_pow_grad<float>(x + i, g + i, n - i, q, coef);
}

void axpy(float a, const float* x, float* y, std::size_t n) {
  const __m256 va = _mm256_set1_ps(a);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(y + i, _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void scale(float* x, float s, std::size_t n) {
  const __m256 vs = _mm256_set1_ps(s);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) _mm256_storeu_ps(x + i, _mm256_mul_ps(_mm256_loadu_ps(x + i), vs));
  for (; i < n; ++i) x[i] *= s;
}

void adam_update(float* w, float* m, float* v, const float* g, std::size_t n, float lr, float b1, float b2, float eps,
                 float bc1, float bc2) {
  const __m256 vb1 = _mm256_set1_ps(b1), vb1c = _mm256_set1_ps(1 - b1);
  const __m256 vb2 = _mm256_set1_ps(b2), vb2c = _mm256_set1_ps(1 - b2);
  const __m256 vlr = _mm256_set1_ps(lr), veps = _mm256_set1_ps(eps);
  const __m256 ibc1 = _mm256_set1_ps(1.0f / bc1), ibc2 = _mm256_set1_ps(1.0f / bc2);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 vg = _mm256_loadu_ps(g + i);
    const __m256 vm = _mm256_fmadd_ps(vb1, _mm256_loadu_ps(m + i), _mm256_mul_ps(vb1c, vg));
    const __m256 vv = _mm256_fmadd_ps(vb2, _mm256_loadu_ps(v + i), _mm256_mul_ps(vb2c, _mm256_mul_ps(vg, vg)));
    _mm256_storeu_ps(m + i, vm);
    _mm256_storeu_ps(v + i, vv);
    const __m256 denom = _mm256_add_ps(_mm256_sqrt_ps(_mm256_mul_ps(vv, ibc2)), veps);
    const __m256 step = _mm256_div_ps(_mm256_mul_ps(vlr, _mm256_mul_ps(vm, ibc1)), denom);
    _mm256_storeu_ps(w + i, _mm256_sub_ps(_mm256_loadu_ps(w + i), step));
  }
  if (i < n) ref::adam_update<float>(w + i, m + i, v + i, g + i, n - i, lr, b1, b2, eps, bc1, bc2);
}

}  // namespace

const Table* avx2() {
  static const Table table{
      &translation_norm, &translation_residual, &norm_direction, &squared_distance, &squared_norm,
      &sum_abs_pow,      &add_abs_pow_grad,     &axpy,           &scale,            &adam_update,
  };
  return &table;
}

}  // namespace fixv2w::embed::kernels
