#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <string>

namespace mad {

// Index into a taxonomy's declared label vocabulary.
struct LabelId {
  std::uint32_t value = 0;

  friend constexpr auto operator<=>(LabelId, LabelId) = default;
};

// Position of a model in the competition order.
using ModelIndex = std::uint32_t;

// Unordered classifier pair, stored with first < second.
struct ModelPair {
  ModelIndex first = 0;
  ModelIndex second = 0;

  friend constexpr auto operator<=>(const ModelPair&, const ModelPair&) = default;
};

// Prediction confidence in fixed point (millionths). Decimal inputs such as
// "0.8" map to exact integers, so threshold comparisons do not depend on
// binary floating-point rounding.
struct Confidence {
  static constexpr std::uint32_t kScale = 1'000'000;

  std::uint32_t micros = 0;

  static Confidence from_double(double p);
  double value() const { return static_cast<double>(micros) / kScale; }
  std::string to_string() const;

  friend constexpr auto operator<=>(Confidence, Confidence) = default;
};

}  // namespace mad

template <>
struct std::hash<mad::LabelId> {
  std::size_t operator()(mad::LabelId id) const noexcept { return std::hash<std::uint32_t>{}(id.value); }
};
