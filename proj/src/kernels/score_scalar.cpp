#include <algorithm>

#include "mad/kernels.hpp"

namespace mad::kernels::scalar {

void score_pair(const PairScoreInputs& in, std::span<double> out) {
  const std::size_t n = out.size();
  const std::size_t c = in.label_count;
  for (std::size_t x = 0; x < n; ++x) {
    const std::uint32_t lowest = std::min(in.confidence_first[x], in.confidence_second[x]);
    out[x] =
        lowest >= in.threshold_micros ? in.distances[std::size_t{in.labels_first[x]} * c + in.labels_second[x]] : 0.0;
  }
}

}  // namespace mad::kernels::scalar
