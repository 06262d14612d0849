#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

// Per-image discrepancy scoring for one classifier pair: the corpus-sized
// inner loop of candidate ranking. A scalar reference and an AVX2 variant
// produce bit-identical output; the variant is chosen at runtime.
namespace mad::kernels {

struct PairScoreInputs {
  std::span<const std::uint32_t> labels_first;
  std::span<const std::uint32_t> labels_second;
  std::span<const std::uint32_t> confidence_first;  // Confidence::micros
  std::span<const std::uint32_t> confidence_second;
  std::span<const double> distances;  // label_count x label_count, row-major
  std::size_t label_count = 0;
  std::uint32_t threshold_micros = 0;
};

// out[x] = distances[first[x] * label_count + second[x]] when
// min(confidence_first[x], confidence_second[x]) >= threshold, else 0.
// Requires out.size() == labels_first.size() and confidences <= Confidence::kScale.
using PairScoreFn = void (*)(const PairScoreInputs&, std::span<double> out);

enum class Isa { kScalar, kAvx2 };

std::string_view isa_name(Isa isa);
bool isa_supported(Isa isa);

// Variant used by score_pair; AVX2 when the CPU has it unless MAD_ISA=scalar.
Isa active_isa();

// Pins the dispatch to one variant (tests); std::nullopt restores detection.
void override_isa(std::optional<Isa> isa);

PairScoreFn pair_score_fn(Isa isa);

void score_pair(const PairScoreInputs& in, std::span<double> out);

namespace scalar {
void score_pair(const PairScoreInputs& in, std::span<double> out);
}

#if defined(MAD_HAVE_AVX2_KERNELS)
namespace avx2 {
void score_pair(const PairScoreInputs& in, std::span<double> out);
}
#endif

}  // namespace mad::kernels
