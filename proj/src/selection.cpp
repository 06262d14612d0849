#include "mad/selection.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "mad/error.hpp"
#include "mad/kernels.hpp"

namespace mad {

void SelectionConfig::validate() const {
  if (k < 1) throw Error("selection: k must be at least 1");
  if (!(confidence_threshold >= 0.0 && confidence_threshold <= 1.0))
    throw Error("selection: confidence threshold must lie in [0, 1]");
  if (label_cap < 1) throw Error("selection: label cap must be at least 1");
}

std::vector<ModelPair> all_pairs(std::size_t model_count) {
  std::vector<ModelPair> pairs;
  for (ModelIndex i = 0; i < model_count; ++i) {
    for (ModelIndex j = i + 1; j < model_count; ++j) pairs.push_back({i, j});
  }
  return pairs;
}

std::vector<ModelPair> pairs_with(ModelIndex new_model) {
  std::vector<ModelPair> pairs;
  for (ModelIndex i = 0; i < new_model; ++i) pairs.push_back({i, new_model});
  return pairs;
}

std::vector<Candidate> rank_pair_candidates(const PredictionTable& table, const LabelDistanceTable& distances,
                                            ModelPair pair, double confidence_threshold) {
  if (pair.first == pair.second) throw Error("selection: a pair needs two distinct models");
  if (pair.first >= table.model_count() || pair.second >= table.model_count())
    throw Error("selection: model index out of range");

  const std::size_t n = table.image_count();
  kernels::PairScoreInputs in{
      .labels_first = table.label_column(pair.first),
      .labels_second = table.label_column(pair.second),
      .confidence_first = table.confidence_column(pair.first),
      .confidence_second = table.confidence_column(pair.second),
      .distances = distances.values(),
      .label_count = distances.label_count(),
      .threshold_micros = Confidence::from_double(confidence_threshold).micros,
  };
  std::vector<double> score(n);
  kernels::score_pair(in, score);

  std::vector<ImageIndex> order;
  for (ImageIndex x = 0; x < n; ++x) {
    if (score[x] > 0.0) order.push_back(x);
  }
  std::sort(order.begin(), order.end(), [&](ImageIndex a, ImageIndex b) {
    if (score[a] != score[b]) return score[a] > score[b];
    return a < b;
  });

  std::vector<Candidate> out;
  out.reserve(order.size());
  for (ImageIndex x : order) {
    const Prediction p1 = table.at(pair.first, x);
    const Prediction p2 = table.at(pair.second, x);
    out.push_back({table.images()[x], score[x], p1.label, p2.label, p1.confidence, p2.confidence});
  }
  return out;
}

std::vector<std::pair<ModelPair, std::vector<Candidate>>> rank_all_pairs(const PredictionTable& table,
                                                                         const LabelDistanceTable& distances,
                                                                         std::span<const ModelPair> pairs,
                                                                         const SelectionConfig& config) {
  config.validate();
  std::vector<std::pair<ModelPair, std::vector<Candidate>>> out(pairs.size());
  unsigned workers = config.threads != 0 ? config.threads : std::thread::hardware_concurrency();
  workers = std::clamp<unsigned>(workers, 1, static_cast<unsigned>(std::max<std::size_t>(pairs.size(), 1)));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto work = [&] {
    for (std::size_t i = next++; i < pairs.size(); i = next++) {
      try {
        out[i] = {pairs[i], rank_pair_candidates(table, distances, pairs[i], config.confidence_threshold)};
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

PairSubset::PairSubset(ModelPair pair, std::vector<Candidate> candidates, std::size_t k, unsigned label_cap, int)
    : pair_(pair), candidates_(std::move(candidates)), k_(k), label_cap_(label_cap) {
  if (k_ < 1) throw Error("selection: k must be at least 1");
  if (label_cap_ < 1) throw Error("selection: label cap must be at least 1");
}

PairSubset::PairSubset(ModelPair pair, std::vector<Candidate> candidates, std::size_t k, unsigned label_cap)
    : PairSubset(pair, std::move(candidates), k, label_cap, 0) {
  while (selected_.size() < k_ && next_replacement()) {
  }
}

PairSubset PairSubset::restore(ModelPair pair, std::vector<Candidate> selected, std::vector<Candidate> queue,
                               std::size_t k, unsigned label_cap) {
  const std::size_t admitted = selected.size();
  std::vector<Candidate> all = std::move(selected);
  all.insert(all.end(), std::make_move_iterator(queue.begin()), std::make_move_iterator(queue.end()));
  PairSubset subset(pair, std::move(all), k, label_cap, 0);
  for (std::size_t pos = 0; pos < admitted; ++pos) {
    if (!subset.admissible(subset.candidates_[pos]))
      throw Error("selection: persisted subset violates the label cap at " + subset.candidates_[pos].image);
    subset.admit(pos);
  }
  subset.cursor_ = admitted;
  return subset;
}

bool PairSubset::admissible(const Candidate& c) const {
  return count_first(c.label_first) < label_cap_ && count_second(c.label_second) < label_cap_;
}

void PairSubset::admit(std::size_t position) {
  const Candidate& c = candidates_[position];
  ++first_counts_[c.label_first];
  ++second_counts_[c.label_second];
  selected_.push_back(position);
}

unsigned PairSubset::count_first(LabelId label) const {
  auto it = first_counts_.find(label);
  return it == first_counts_.end() ? 0 : it->second;
}

unsigned PairSubset::count_second(LabelId label) const {
  auto it = second_counts_.find(label);
  return it == second_counts_.end() ? 0 : it->second;
}

bool PairSubset::is_selected(std::string_view image) const {
  return std::any_of(selected_.begin(), selected_.end(),
                     [&](std::size_t pos) { return candidates_[pos].image == image; });
}

void PairSubset::discard(std::string_view image) {
  auto it = std::find_if(selected_.begin(), selected_.end(),
                         [&](std::size_t pos) { return candidates_[pos].image == image; });
  if (it == selected_.end()) throw Error("selection: image " + std::string(image) + " is not selected");
  const Candidate& c = candidates_[*it];
  --first_counts_[c.label_first];
  --second_counts_[c.label_second];
  discarded_.push_back(*it);
  selected_.erase(it);
}

std::optional<std::size_t> PairSubset::next_replacement() {
  while (cursor_ < candidates_.size()) {
    const std::size_t position = cursor_++;
    if (admissible(candidates_[position])) {
      admit(position);
      return position;
    }
  }
  return std::nullopt;
}

PairSubset select_top_k(ModelPair pair, std::vector<Candidate> candidates, std::size_t k, unsigned label_cap) {
  return PairSubset(pair, std::move(candidates), k, label_cap);
}

TestSet build_test_set(std::span<const PairSubset> subsets) {
  TestSet set;
  for (const auto& subset : subsets) {
    for (std::size_t pos : subset.selected()) {
      set.entries[subset.candidate(pos).image].push_back(subset.pair());
    }
  }
  return set;
}

}  // namespace mad
