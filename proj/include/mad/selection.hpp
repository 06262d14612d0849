#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mad/predictions.hpp"
#include "mad/taxonomy.hpp"
#include "mad/types.hpp"

namespace mad {

struct SelectionConfig {
  std::size_t k = 30;
  double confidence_threshold = 0.8;
  // Most images any one predicted label may contribute, per model.
  unsigned label_cap = 3;
  // Worker threads for ranking pairs; 0 picks hardware concurrency.
  unsigned threads = 0;

  void validate() const;
};

// One corpus image eligible for a pair: both confidences reach the threshold
// and the two predictions differ.
struct Candidate {
  std::string image;
  double distance = 0.0;
  LabelId label_first;
  LabelId label_second;
  Confidence confidence_first;
  Confidence confidence_second;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

// Every eligible image for (first, second), ordered by distance descending,
// then image id ascending.
std::vector<Candidate> rank_pair_candidates(const PredictionTable& table, const LabelDistanceTable& distances,
                                            ModelPair pair, double confidence_threshold);

// Ranks all m(m-1)/2 pairs, first < second, in lexicographic pair order.
std::vector<std::pair<ModelPair, std::vector<Candidate>>> rank_all_pairs(const PredictionTable& table,
                                                                         const LabelDistanceTable& distances,
                                                                         std::span<const ModelPair> pairs,
                                                                         const SelectionConfig& config);

std::vector<ModelPair> all_pairs(std::size_t model_count);
// Pairs (i, new_model) for every i < new_model.
std::vector<ModelPair> pairs_with(ModelIndex new_model);

// Selected top-k subset for one pair plus the queue of replacement candidates.
//
// Candidates are consumed strictly in order. A candidate is admitted only if
// neither model's predicted label would exceed the label cap among currently
// selected images; rejected candidates are never revisited. Discarding a
// selected image releases its label counts and the next admissible candidate
// past the cursor takes its place.
class PairSubset {
 public:
  PairSubset(ModelPair pair, std::vector<Candidate> candidates, std::size_t k, unsigned label_cap = 3);

  // Rebuilds a subset from a persisted selection: `selected` are admitted
  // as-is, `queue` holds the remaining candidates past the cursor.
  static PairSubset restore(ModelPair pair, std::vector<Candidate> selected, std::vector<Candidate> queue,
                            std::size_t k, unsigned label_cap = 3);

  ModelPair pair() const { return pair_; }
  std::size_t k() const { return k_; }
  unsigned label_cap() const { return label_cap_; }
  std::size_t cursor() const { return cursor_; }
  std::span<const Candidate> candidates() const { return candidates_; }
  const Candidate& candidate(std::size_t position) const { return candidates_.at(position); }

  // Positions of currently selected candidates, in admission order (which is
  // also candidate order).
  std::span<const std::size_t> selected() const { return selected_; }
  std::span<const std::size_t> discarded() const { return discarded_; }
  std::span<const Candidate> queue() const { return std::span<const Candidate>(candidates_).subspan(cursor_); }

  // Fewer than k candidates could be admitted.
  bool short_of_k() const { return selected_.size() < k_; }
  bool is_selected(std::string_view image) const;

  unsigned count_first(LabelId label) const;
  unsigned count_second(LabelId label) const;

  // Removes a selected image and releases its label counts.
  void discard(std::string_view image);

  // Admits the next candidate that respects the label cap. Returns its
  // position, or std::nullopt once the queue is exhausted.
  std::optional<std::size_t> next_replacement();

 private:
  PairSubset(ModelPair pair, std::vector<Candidate> candidates, std::size_t k, unsigned label_cap, int /*no_fill*/);
  bool admissible(const Candidate& c) const;
  void admit(std::size_t position);

  ModelPair pair_;
  std::vector<Candidate> candidates_;
  std::size_t k_;
  unsigned label_cap_;
  std::size_t cursor_ = 0;
  std::vector<std::size_t> selected_;
  std::vector<std::size_t> discarded_;
  std::unordered_map<LabelId, unsigned> first_counts_;
  std::unordered_map<LabelId, unsigned> second_counts_;
};

// Greedy top-k walk over ranked candidates.
PairSubset select_top_k(ModelPair pair, std::vector<Candidate> candidates, std::size_t k, unsigned label_cap = 3);

// Union of all pair subsets; each image appears once with the pairs that
// selected it.
struct TestSet {
  std::map<std::string, std::vector<ModelPair>> entries;

  std::size_t size() const { return entries.size(); }
};

TestSet build_test_set(std::span<const PairSubset> subsets);

}  // namespace mad
