#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include "mad/labeling.hpp"
#include "mad/predictions.hpp"
#include "mad/ranking.hpp"
#include "mad/selection.hpp"
#include "mad/taxonomy.hpp"

namespace mad {

struct CompetitionConfig {
  SelectionConfig selection;
  VotingRule voting;
  RankingConfig ranking;
};

// Everything one competition produced: per-pair subsets and verdicts, the
// settled answers, and the resulting matrices and ranking.
struct CompetitionRun {
  std::vector<PairSubset> subsets;     // lexicographic pair order
  std::vector<PairLabeling> labeling;  // parallel to subsets
  AnswerCache answers;
  CompetitionState state;
  // Distinct images sent to the answer source by the most recent pass.
  std::size_t queried_images = 0;

  std::map<ModelPair, std::vector<LabelVerdict>> verdicts() const;
  TestSet test_set() const;
};

// Ranks and selects top-k subsets for the given pairs.
std::vector<PairSubset> select_pairs(const PredictionTable& table, const TaxonomyGraph& graph,
                                     std::span<const ModelPair> pairs, const SelectionConfig& config);

std::map<ModelPair, PairTally> tally_pairs(std::span<const PairLabeling> labeling);

// Selection over all pairs, labeling, then ranking.
CompetitionRun run_competition(const PredictionTable& table, const TaxonomyGraph& graph, AnswerSource& source,
                               const CompetitionConfig& config);

// Adds the last model of `extended` to a finished competition over the
// preceding models. Only the new pairs (i, m) are selected and labeled; the
// existing subsets and verdicts are kept as they are.
CompetitionRun add_model(CompetitionRun previous, const PredictionTable& extended, const TaxonomyGraph& graph,
                         AnswerSource& source, const CompetitionConfig& config);

}  // namespace mad
