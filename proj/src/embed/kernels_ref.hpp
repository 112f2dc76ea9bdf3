// SPDX-License-Identifier: Apache-2.0
//
// Reference kernels, templated on the real type. The float instantiation is
// the scalar table; the double one backs gradient checking.
#pragma once

#include <cmath>
#include <cstddef>

namespace fixv2w::embed::ref {

template <class Real>
Real translation_norm(const Real* h, const Real* r, const Real* t, std::size_t n, int p) {
  Real acc = 0;
  if (p == 1) {
    for (std::size_t i = 0; i < n; ++i) acc += std::abs(h[i] + r[i] - t[i]);
    return acc;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Real d = h[i] + r[i] - t[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

template <class Real>
void translation_residual(const Real* h, const Real* r, const Real* t, Real* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = h[i] + r[i] - t[i];
}

template <class Real>
void norm_direction(const Real* d, Real* out, std::size_t n, int p, Real norm) {
  if (p == 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<Real>((d[i] > 0) - (d[i] < 0));
    return;
  }
  const Real inv = norm > 0 ? Real(1) / norm : Real(0);
  for (std::size_t i = 0; i < n; ++i) out[i] = d[i] * inv;
}

template <class Real>
Real squared_distance(const Real* a, const Real* b, std::size_t n) {
  Real acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Real d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

template <class Real>
Real squared_norm(const Real* x, std::size_t n) {
  Real acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
  return acc;
}

template <class Real>
Real sum_abs_pow(const Real* x, std::size_t n, int q) {
  Real acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Real a = std::abs(x[i]);
    acc += q == 1 ? a : q == 2 ? a * a : a * a * a;
  }
  return acc;
}

template <class Real>
void add_abs_pow_grad(const Real* x, Real* g, std::size_t n, int q, Real coef) {
  for (std::size_t i = 0; i < n; ++i) {
    const Real s = static_cast<Real>((x[i] > 0) - (x[i] < 0));
    g[i] += q == 1 ? coef * s : q == 2 ? coef * 2 * x[i] : coef * 3 * x[i] * std::abs(x[i]);
  }
}

template <class Real>
void axpy(Real a, const Real* x, Real* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

template <class Real>
void scale(Real* x, Real s, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= s;
}

template <class Real>
void adam_update(Real* w, Real* m, Real* v, const Real* g, std::size_t n, Real lr, Real b1, Real b2, Real eps,
                 Real bc1, Real bc2) {
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = b1 * m[i] + (1 - b1) * g[i];
    v[i] = b2 * v[i] + (1 - b2) * g[i] * g[i];
    w[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
  }
}

}  // namespace fixv2w::embed::ref
