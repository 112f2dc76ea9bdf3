// SPDX-License-Identifier: Apache-2.0
//
// Vector kernels behind the embedding engine. A scalar reference table is
// always present; an AVX2/FMA table is compiled on x86-64 and selected at
// runtime when the CPU supports it.
#pragma once

#include <cstddef>
#include <string_view>

namespace fixv2w::embed::kernels {

struct Table {
  // ||h + r - t||_p for p in {1, 2}.
  float (*translation_norm)(const float* h, const float* r, const float* t, std::size_t n, int p);
  // out = h + r - t
  void (*translation_residual)(const float* h, const float* r, const float* t, float* out, std::size_t n);
  // d/dd ||d||_p: d / norm for p = 2 (zero when norm is 0), sign(d) for p = 1.
  void (*norm_direction)(const float* d, float* out, std::size_t n, int p, float norm);
  float (*squared_distance)(const float* a, const float* b, std::size_t n);
  float (*squared_norm)(const float* x, std::size_t n);
  // sum |x_i|^q for q in {1, 2, 3}.
  float (*sum_abs_pow)(const float* x, std::size_t n, int q);
  // g += coef * d/dx sum |x_i|^q
  void (*add_abs_pow_grad)(const float* x, float* g, std::size_t n, int q, float coef);
  // y += a * x
  void (*axpy)(float a, const float* x, float* y, std::size_t n);
  void (*scale)(float* x, float s, std::size_t n);
  // One Adam step with bias corrections bc1 = 1 - b1^t, bc2 = 1 - b2^t.
  void (*adam_update)(float* w, float* m, float* v, const float* g, std::size_t n, float lr, float b1, float b2,
                      float eps, float bc1, float bc2);
};

enum class Isa { Scalar, Avx2 };
std::string_view to_string(Isa isa);

const Table& scalar();
// nullptr when the build has no AVX2 variant.
const Table* avx2();

bool isa_supported(Isa isa);
// Kernels used by the engine. Defaults to the best supported ISA; the
// FIXV2W_ISA environment variable ("scalar" or "avx2") overrides it.
const Table& active();
Isa active_isa();
// Throws ConfigError when the ISA is not supported here.
void force_isa(Isa isa);

}  // namespace fixv2w::embed::kernels
