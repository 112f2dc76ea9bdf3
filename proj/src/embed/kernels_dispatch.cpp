// SPDX-License-Identifier: Apache-2.0
#include <atomic>
#include <cstdlib>
#include <string>

#include "fixv2w/error.hpp"
#include "fixv2w/kernels.hpp"

namespace fixv2w::embed::kernels {

#if !FIXV2W_HAVE_AVX2
const Table* avx2() { return nullptr; }
#endif

namespace {

bool cpu_has_avx2() {
#if FIXV2W_HAVE_AVX2 && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa initial_isa() {
  if (const char* env = std::getenv("FIXV2W_ISA")) {
    const std::string v(env);
    if (v == "scalar") return Isa::Scalar;
    if (v == "avx2" && isa_supported(Isa::Avx2)) return Isa::Avx2;
  }
  return isa_supported(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

std::string_view to_string(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

bool isa_supported(Isa isa) {
  if (isa == Isa::Scalar) return true;
  static const bool avx2_ok = avx2() != nullptr && cpu_has_avx2();
  return avx2_ok;
}

const Table& active() { return current().load(std::memory_order_relaxed) == Isa::Avx2 ? *avx2() : scalar(); }

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void force_isa(Isa isa) {
  if (!isa_supported(isa)) throw ConfigError("ISA '" + std::string(to_string(isa)) + "' is not available");
  current().store(isa, std::memory_order_relaxed);
}

}  // namespace fixv2w::embed::kernels
