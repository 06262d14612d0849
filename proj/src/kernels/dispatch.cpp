#include <atomic>
#include <cstdlib>
#include <string>

#include "mad/error.hpp"
#include "mad/kernels.hpp"

namespace mad::kernels {
namespace {

Isa detect() {
  if (const char* forced = std::getenv("MAD_ISA"); forced != nullptr && std::string(forced) == "scalar")
    return Isa::kScalar;
  return isa_supported(Isa::kAvx2) ? Isa::kAvx2 : Isa::kScalar;
}

// -1: not overridden.
std::atomic<int> g_override{-1};

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
#if defined(MAD_HAVE_AVX2_KERNELS)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

Isa active_isa() {
  static const Isa detected = detect();
  const int forced = g_override.load(std::memory_order_relaxed);
  return forced < 0 ? detected : static_cast<Isa>(forced);
}

void override_isa(std::optional<Isa> isa) {
  if (isa && !isa_supported(*isa))
    throw Error("kernel variant " + std::string(isa_name(*isa)) + " not supported on this CPU");
  g_override.store(isa ? static_cast<int>(*isa) : -1, std::memory_order_relaxed);
}

PairScoreFn pair_score_fn(Isa isa) {
#if defined(MAD_HAVE_AVX2_KERNELS)
  if (isa == Isa::kAvx2) return &avx2::score_pair;
#endif
  (void)isa;
  return &scalar::score_pair;
}

void score_pair(const PairScoreInputs& in, std::span<double> out) { pair_score_fn(active_isa())(in, out); }

}  // namespace mad::kernels
