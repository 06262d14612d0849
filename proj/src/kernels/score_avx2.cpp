#include <immintrin.h>

#include <cstdint>
#include <limits>

#include "mad/kernels.hpp"

namespace mad::kernels::avx2 {

void score_pair(const PairScoreInputs& in, std::span<double> out) {
  const std::size_t n = out.size();
  const std::size_t c = in.label_count;
  // Gather offsets are 32-bit signed.
  if (c * c > static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max())) {
    scalar::score_pair(in, out);
    return;
  }

  const __m128i stride = _mm_set1_epi32(static_cast<int>(c));
  // Confidences are at most 1e6, so a signed compare against T - 1 is exact,
  // including T = 0.
  const __m128i floor = _mm_set1_epi32(static_cast<int>(in.threshold_micros) - 1);
  const double* table = in.distances.data();

  std::size_t x = 0;
  for (; x + 4 <= n; x += 4) {
    const __m128i l1 = _mm_loadu_si128(reinterpret_cast<const __m128i*>(in.labels_first.data() + x));
    const __m128i l2 = _mm_loadu_si128(reinterpret_cast<const __m128i*>(in.labels_second.data() + x));
    const __m128i p1 = _mm_loadu_si128(reinterpret_cast<const __m128i*>(in.confidence_first.data() + x));
    const __m128i p2 = _mm_loadu_si128(reinterpret_cast<const __m128i*>(in.confidence_second.data() + x));

    const __m128i eligible = _mm_cmpgt_epi32(_mm_min_epu32(p1, p2), floor);
    const __m128i offset = _mm_add_epi32(_mm_mullo_epi32(l1, stride), l2);
    const __m256d mask = _mm256_castsi256_pd(_mm256_cvtepi32_epi64(eligible));
    const __m256d d = _mm256_mask_i32gather_pd(_mm256_setzero_pd(), table, offset, mask, 8);
    _mm256_storeu_pd(out.data() + x, d);
  }

  for (; x < n; ++x) {
    const std::uint32_t lowest =
        in.confidence_first[x] < in.confidence_second[x] ? in.confidence_first[x] : in.confidence_second[x];
    out[x] = lowest >= in.threshold_micros ? table[std::size_t{in.labels_first[x]} * c + in.labels_second[x]] : 0.0;
  }
}

}  // namespace mad::kernels::avx2
