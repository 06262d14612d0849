#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mad/labeling.hpp"
#include "mad/types.hpp"

namespace mad {

// Dense square matrix, row-major.
class Matrix {
 public:
  Matrix() = default;
  explicit Matrix(std::size_t n, double fill = 0.0) : n_(n), values_(n * n, fill) {}
  static Matrix identity(std::size_t n);

  std::size_t size() const { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return values_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }
  std::span<const double> values() const { return values_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> values_;
};

// Outcome counts for one pair's verdicts.
struct PairTally {
  std::size_t case_i = 0;
  std::size_t case_ii_first = 0;
  std::size_t case_ii_second = 0;
  std::size_t case_iii = 0;
  std::size_t discarded = 0;

  void add(Outcome outcome);
  std::size_t effective() const { return case_i + case_ii_first + case_ii_second + case_iii; }
  std::size_t correct_first() const { return case_i + case_ii_first; }
  std::size_t correct_second() const { return case_i + case_ii_second; }

  friend bool operator==(const PairTally&, const PairTally&) = default;
};

// Tallies verdicts in order, stopping after `limit` non-discarded ones.
PairTally tally_verdicts(std::span<const LabelVerdict> verdicts,
                         std::size_t limit = std::numeric_limits<std::size_t>::max());

// Additive (Laplace) smoothing: (correct + c) / (count + 2c).
struct Smoothing {
  double pseudo_count = 1.0;
};

struct PairAccuracy {
  double first = 0.0;   // a_ij
  double second = 0.0;  // a_ji
};

// Throws when the tally holds no usable verdicts.
PairAccuracy pairwise_accuracy(const PairTally& tally, const Smoothing& smoothing = {});

struct PerronOptions {
  double tolerance = 1e-10;
  std::size_t max_iterations = 10'000;
};

struct PerronResult {
  std::vector<double> ranking;  // positive, sums to one
  double eigenvalue = 0.0;
  double residual = 0.0;  // max |Br - lambda r| / lambda
  std::size_t iterations = 0;
};

// Normalized principal eigenvector of a positive matrix by power iteration
// from the uniform vector. Throws if the residual does not reach the
// tolerance within max_iterations.
PerronResult perron_rank(const Matrix& dominance, const PerronOptions& options = {});

// max |Br - lambda r| / lambda, with lambda = 1'Br / 1'r.
double perron_residual(const Matrix& dominance, std::span<const double> r);

// Cesaro mean (1/t) sum_{a=1..t} B^a 1 / (1' B^a 1). Once the normalized
// iterate stops changing in floating point, the remaining terms are all equal
// and are added in one step, so very large t is cheap.
std::vector<double> perron_running_average(const Matrix& dominance, std::uint64_t steps);

// Fractional ranks (1-based, ties share their average rank), ascending values.
std::vector<double> average_ranks(std::span<const double> values);

// Spearman rank-order correlation of two score vectors. NaN if either vector
// is constant.
double srcc(std::span<const double> a, std::span<const double> b);

struct OrdinalRanking {
  std::vector<std::size_t> rank;  // 1 = best (largest score)
  bool ties = false;              // some scores were equal; model order decided
};

OrdinalRanking ordinal_ranks(std::span<const double> scores);

struct RankingConfig {
  Smoothing smoothing;
  PerronOptions perron;
};

// Accuracy matrix A, dominance matrix B and the Perron ranking r.
struct CompetitionState {
  std::vector<std::string> models;
  std::map<ModelPair, PairTally> tallies;
  Matrix accuracy;   // diagonal unused (zero)
  Matrix dominance;  // diagonal one
  PerronResult perron;
  bool partial = false;
};

// Builds the matrices from per-pair tallies and ranks the models. Every pair
// must have a tally with at least one usable verdict unless `partial`, in
// which case missing or empty pairs count as even (b = 1).
CompetitionState assemble_state(std::vector<std::string> models, std::map<ModelPair, PairTally> tallies,
                                const RankingConfig& config = {}, bool partial = false);

// Grows a state by one model: pads B with an identity row and column, fills
// the new pairs (i, m) from `new_tallies` and re-ranks.
CompetitionState extend_state(const CompetitionState& state, std::string new_model,
                              const std::map<ModelPair, PairTally>& new_tallies, const RankingConfig& config = {});

struct StabilityPoint {
  std::size_t k = 0;
  double srcc = 0.0;
};

// Ranking computed from the first `depth` usable verdicts of every pair.
std::vector<double> ranking_at_depth(const std::vector<std::string>& models,
                                     const std::map<ModelPair, std::vector<LabelVerdict>>& verdicts, std::size_t depth,
                                     const RankingConfig& config = {});

// SRCC of the top-k' ranking against the top-k_reference ranking for
// k' = 1 .. k_reference - 1.
std::vector<StabilityPoint> topk_stability(const std::vector<std::string>& models,
                                           const std::map<ModelPair, std::vector<LabelVerdict>>& verdicts,
                                           std::size_t k_reference, const RankingConfig& config = {});

}  // namespace mad
