#include "mad/competition.hpp"

#include "mad/error.hpp"

namespace mad {

std::map<ModelPair, std::vector<LabelVerdict>> CompetitionRun::verdicts() const {
  std::map<ModelPair, std::vector<LabelVerdict>> out;
  for (const auto& l : labeling) out[l.pair] = l.verdicts;
  return out;
}

TestSet CompetitionRun::test_set() const { return build_test_set(subsets); }

std::vector<PairSubset> select_pairs(const PredictionTable& table, const TaxonomyGraph& graph,
                                     std::span<const ModelPair> pairs, const SelectionConfig& config) {
  config.validate();
  const std::vector<LabelId> used = table.labels_used();
  const LabelDistanceTable distances(graph, used);
  auto ranked = rank_all_pairs(table, distances, pairs, config);

  std::vector<PairSubset> subsets;
  subsets.reserve(ranked.size());
  for (auto& [pair, candidates] : ranked) {
    subsets.push_back(select_top_k(pair, std::move(candidates), config.k, config.label_cap));
  }
  return subsets;
}

std::map<ModelPair, PairTally> tally_pairs(std::span<const PairLabeling> labeling) {
  std::map<ModelPair, PairTally> tallies;
  for (const auto& l : labeling) tallies[l.pair] = tally_verdicts(l.verdicts);
  return tallies;
}

CompetitionRun run_competition(const PredictionTable& table, const TaxonomyGraph& graph, AnswerSource& source,
                               const CompetitionConfig& config) {
  if (table.model_count() < 2) throw Error("competition: need at least two models");

  CompetitionRun run;
  const auto pairs = all_pairs(table.model_count());
  run.subsets = select_pairs(table, graph, pairs, config.selection);
  LabelingRun labeled = run_labeling(run.subsets, source, run.answers, config.voting);
  run.labeling = std::move(labeled.pairs);
  run.queried_images = labeled.queried_images;
  run.state = assemble_state(table.models(), tally_pairs(run.labeling), config.ranking);
  return run;
}

CompetitionRun add_model(CompetitionRun previous, const PredictionTable& extended, const TaxonomyGraph& graph,
                         AnswerSource& source, const CompetitionConfig& config) {
  const std::size_t m = previous.state.models.size();
  if (extended.model_count() != m + 1)
    throw Error("competition: expected exactly one new model in the extended prediction table");
  for (std::size_t i = 0; i < m; ++i) {
    if (extended.models()[i] != previous.state.models[i])
      throw Error("competition: model order of the extended table differs at " + extended.models()[i]);
  }

  const auto pairs = pairs_with(static_cast<ModelIndex>(m));
  std::vector<PairSubset> fresh = select_pairs(extended, graph, pairs, config.selection);
  LabelingRun labeled = run_labeling(fresh, source, previous.answers, config.voting);

  CompetitionRun out;
  out.answers = std::move(previous.answers);
  out.state = extend_state(previous.state, extended.models().back(), tally_pairs(labeled.pairs), config.ranking);
  out.queried_images = labeled.queried_images;

  // Keep the lexicographic pair order: (i, j < m) before (i, m) for each i.
  std::map<ModelPair, std::pair<PairSubset*, PairLabeling*>> order;
  for (std::size_t p = 0; p < previous.subsets.size(); ++p)
    order.emplace(previous.subsets[p].pair(), std::pair{&previous.subsets[p], &previous.labeling[p]});
  for (std::size_t p = 0; p < fresh.size(); ++p)
    order.emplace(fresh[p].pair(), std::pair{&fresh[p], &labeled.pairs[p]});
  for (auto& [pair, entry] : order) {
    out.subsets.push_back(std::move(*entry.first));
    out.labeling.push_back(std::move(*entry.second));
  }
  return out;
}

}  // namespace mad
