#include "mad/pipeline.hpp"

#include <fstream>
#include <sstream>

#include "mad/error.hpp"

namespace mad::pipeline {

namespace {

RankingConfig ranking_config(const store::Settings& s, const RankOverrides& o) {
  RankingConfig c = s.config.ranking;
  if (o.pseudo_count) c.smoothing.pseudo_count = *o.pseudo_count;
  if (o.tolerance) c.perron.tolerance = *o.tolerance;
  return c;
}

std::map<ModelPair, std::vector<LabelVerdict>> load_verdicts(const store::Layout& layout,
                                                             const store::Settings& settings,
                                                             std::span<const PairSubset> subsets) {
  std::ifstream in(layout.verdicts());
  if (!in) throw Error("cannot open " + layout.verdicts().string() + " (run the label stage first)");
  return store::read_verdicts(in, settings.models, subsets, layout.verdicts().string());
}

void save_verdicts(const store::Layout& layout, const std::vector<std::string>& models,
                   const std::map<ModelPair, std::vector<LabelVerdict>>& verdicts) {
  std::ostringstream text;
  store::write_verdicts(text, models, verdicts);
  store::write_file(layout.verdicts(), text.str());
}

void save_report(const store::Layout& layout, const CompetitionState& state, const store::Settings& settings) {
  store::write_file(layout.ranking(), store::ranking_report(state, settings).dump(2) + "\n");
}

std::map<ModelPair, PairTally> tally_map(const std::map<ModelPair, std::vector<LabelVerdict>>& verdicts) {
  std::map<ModelPair, PairTally> tallies;
  for (const auto& [pair, list] : verdicts) tallies[pair] = tally_verdicts(list);
  return tallies;
}

}  // namespace

void select(const store::Settings& input, const fs::path& out) {
  store::Settings settings = input;
  settings.config.selection.validate();
  if (settings.predictions.size() < 2) throw Error("need at least two prediction files");
  settings.taxonomy = fs::absolute(settings.taxonomy);
  for (auto& p : settings.predictions) p = fs::absolute(p);

  const TaxonomyGraph graph = TaxonomyGraph::load(settings.taxonomy);
  const PredictionTable table = load_predictions(graph, settings.predictions);
  settings.models = table.models();

  const store::Layout layout(out);
  const auto pairs = all_pairs(table.model_count());
  const auto subsets = select_pairs(table, graph, pairs, settings.config.selection);
  fs::create_directories(layout.manifest_dir());
  for (const auto& subset : subsets) store::save_subset(layout, settings.models, graph, subset);
  store::save_settings(layout, settings);
}

void label(const fs::path& out, const fs::path& oracle_path) {
  const store::Layout layout(out);
  const store::Settings settings = store::load_settings(layout);
  const TaxonomyGraph graph = TaxonomyGraph::load(settings.taxonomy);
  const OracleLabels oracle = OracleLabels::load(oracle_path, graph);
  auto subsets = store::load_subsets(layout, settings.models, graph, settings.config.selection);

  OracleSource source(oracle, settings.config.voting.quorum);
  AnswerCache cache;
  const LabelingRun run = run_labeling(subsets, source, cache, settings.config.voting);
  std::map<ModelPair, std::vector<LabelVerdict>> verdicts;
  for (const auto& p : run.pairs) verdicts[p.pair] = p.verdicts;
  save_verdicts(layout, settings.models, verdicts);
}

CompetitionState rank(const fs::path& out, const RankOverrides& overrides) {
  const store::Layout layout(out);
  const store::Settings settings = store::load_settings(layout);
  const TaxonomyGraph graph = TaxonomyGraph::load(settings.taxonomy);
  const auto subsets = store::load_subsets(layout, settings.models, graph, settings.config.selection);
  const auto verdicts = load_verdicts(layout, settings, subsets);

  store::Settings effective = settings;
  effective.config.ranking = ranking_config(settings, overrides);
  const CompetitionState state = assemble_state(settings.models, tally_map(verdicts), effective.config.ranking);
  save_report(layout, state, effective);
  return state;
}

std::vector<StabilityPoint> stability(const fs::path& out, const RankOverrides& overrides) {
  const store::Layout layout(out);
  const store::Settings settings = store::load_settings(layout);
  const TaxonomyGraph graph = TaxonomyGraph::load(settings.taxonomy);
  const auto subsets = store::load_subsets(layout, settings.models, graph, settings.config.selection);
  const auto verdicts = load_verdicts(layout, settings, subsets);

  const auto points =
      topk_stability(settings.models, verdicts, settings.config.selection.k, ranking_config(settings, overrides));
  std::ostringstream text;
  store::write_stability(text, points);
  store::write_file(layout.stability(), text.str());
  return points;
}

std::size_t add_model(const fs::path& out, const fs::path& new_predictions, const fs::path& oracle_path,
                      const RankOverrides& overrides) {
  const store::Layout layout(out);
  store::Settings settings = store::load_settings(layout);
  const RankingConfig ranking = ranking_config(settings, overrides);
  const TaxonomyGraph graph = TaxonomyGraph::load(settings.taxonomy);
  const OracleLabels oracle = OracleLabels::load(oracle_path, graph);

  const PredictionTable table = load_predictions(graph, settings.predictions);
  if (table.models() != settings.models) throw Error("prediction files no longer match the saved model list");
  const PredictionTable extended = table.with_model(load_prediction_file(new_predictions, graph));
  const auto old_subsets = store::load_subsets(layout, settings.models, graph, settings.config.selection);
  auto verdicts = load_verdicts(layout, settings, old_subsets);

  // Settled answers in the order the original labeling recorded them.
  AnswerCache cache;
  for (const auto& [pair, list] : verdicts) {
    for (const auto& v : list) cache.record(v);
  }
  const CompetitionState previous = assemble_state(settings.models, tally_map(verdicts), ranking);

  const auto pairs = pairs_with(static_cast<ModelIndex>(settings.models.size()));
  auto fresh = select_pairs(extended, graph, pairs, settings.config.selection);
  for (const auto& subset : fresh) store::save_subset(layout, extended.models(), graph, subset);

  OracleSource source(oracle, settings.config.voting.quorum);
  const LabelingRun run = run_labeling(fresh, source, cache, settings.config.voting);
  for (const auto& p : run.pairs) verdicts[p.pair] = p.verdicts;
  const CompetitionState state = extend_state(previous, extended.models().back(), tally_pairs(run.pairs), ranking);

  settings.models = extended.models();
  settings.predictions.push_back(fs::absolute(new_predictions));
  save_verdicts(layout, settings.models, verdicts);
  store::save_settings(layout, settings);
  store::Settings effective = settings;
  effective.config.ranking = ranking;
  save_report(layout, state, effective);
  return run.queried_images;
}

CompetitionState run(const store::Settings& settings, const fs::path& out, const fs::path& oracle) {
  select(settings, out);
  label(out, oracle);
  return rank(out);
}

Session open_session(const fs::path& out, service::ServiceConfig config) {
  const store::Layout layout(out);
  Session s;
  s.settings = store::load_settings(layout);
  s.graph = std::make_unique<TaxonomyGraph>(TaxonomyGraph::load(s.settings.taxonomy));
  auto subsets = store::load_subsets(layout, s.settings.models, *s.graph, s.settings.config.selection);
  config.voting = s.settings.config.voting;
  config.ranking = s.settings.config.ranking;
  s.service = std::make_unique<service::AnnotationService>(s.settings.models, std::move(subsets), *s.graph,
                                                           layout.votes(), std::move(config));
  return s;
}

void save_session_verdicts(const Session& session, const fs::path& out) {
  save_verdicts(store::Layout(out), session.settings.models, session.service->verdicts());
}

}  // namespace mad::pipeline
