#include "mad/store.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "mad/error.hpp"
#include "text.hpp"

namespace mad::store {

using nlohmann::json;

fs::path Layout::manifest(ModelPair pair) const {
  return manifest_dir() / ("pair-" + std::to_string(pair.first) + "-" + std::to_string(pair.second) + ".csv");
}

fs::path Layout::queue(ModelPair pair) const {
  return manifest_dir() / ("pair-" + std::to_string(pair.first) + "-" + std::to_string(pair.second) + ".queue.csv");
}

json settings_to_json(const Settings& s) {
  json predictions = json::array();
  for (const auto& p : s.predictions) predictions.push_back(p.string());
  const auto& c = s.config;
  return {
      {"taxonomy", s.taxonomy.string()},
      {"predictions", predictions},
      {"models", s.models},
      {"k", c.selection.k},
      {"confidence_threshold", c.selection.confidence_threshold},
      {"label_cap", c.selection.label_cap},
      {"quorum", c.voting.quorum},
      {"difficulty_limit", c.voting.difficulty_limit},
      {"smoothing", {{"method", "additive"}, {"pseudo_count", c.ranking.smoothing.pseudo_count}}},
      {"tolerance", c.ranking.perron.tolerance},
      {"max_iterations", c.ranking.perron.max_iterations},
  };
}

Settings settings_from_json(const json& j) {
  try {
    Settings s;
    s.taxonomy = j.at("taxonomy").get<std::string>();
    for (const auto& p : j.at("predictions")) s.predictions.emplace_back(p.get<std::string>());
    s.models = j.at("models").get<std::vector<std::string>>();
    auto& c = s.config;
    c.selection.k = j.at("k").get<std::size_t>();
    c.selection.confidence_threshold = j.at("confidence_threshold").get<double>();
    c.selection.label_cap = j.at("label_cap").get<unsigned>();
    c.voting.quorum = j.at("quorum").get<unsigned>();
    c.voting.difficulty_limit = j.at("difficulty_limit").get<unsigned>();
    c.ranking.smoothing.pseudo_count = j.at("smoothing").at("pseudo_count").get<double>();
    c.ranking.perron.tolerance = j.at("tolerance").get<double>();
    c.ranking.perron.max_iterations = j.at("max_iterations").get<std::size_t>();
    if (s.models.size() != s.predictions.size()) throw Error("settings: model and prediction file counts differ");
    return s;
  } catch (const json::exception& e) {
    throw Error(std::string("settings: ") + e.what());
  }
}

void save_settings(const Layout& layout, const Settings& settings) {
  write_file(layout.settings(), settings_to_json(settings).dump(2) + "\n");
}

Settings load_settings(const Layout& layout) {
  const std::string text = read_file(layout.settings());
  try {
    return settings_from_json(json::parse(text));
  } catch (const json::parse_error& e) {
    throw Error("settings: " + layout.settings().string() + ": " + e.what());
  }
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_manifest(std::ostream& out, const std::vector<std::string>& models, const TaxonomyGraph& graph,
                    ModelPair pair, std::span<const Candidate> rows) {
  const std::string& mi = models.at(pair.first);
  const std::string& mj = models.at(pair.second);
  for (const auto& c : rows) {
    out << mi << ',' << mj << ',' << c.image << ',' << detail::format_sig10(c.distance) << ','
        << graph.label_key(c.label_first) << ',' << graph.label_key(c.label_second) << ','
        << c.confidence_first.to_string() << ',' << c.confidence_second.to_string() << '\n';
  }
}

std::vector<Candidate> read_manifest(std::istream& in, const std::vector<std::string>& models,
                                     const TaxonomyGraph& graph, ModelPair pair, const std::string& origin) {
  std::vector<Candidate> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    if (line.empty()) continue;
    const auto where = [&] { return origin + ":" + std::to_string(line_no); };
    const auto f = detail::split(line, ',');
    if (f.size() != 8) throw Error("manifest: expected 8 fields at " + where());
    if (f[0] != models.at(pair.first) || f[1] != models.at(pair.second))
      throw Error("manifest: row belongs to another pair at " + where());
    const auto distance = detail::parse_double(f[3]);
    const auto p1 = detail::parse_double(f[6]);
    const auto p2 = detail::parse_double(f[7]);
    if (!distance || !p1 || !p2) throw Error("manifest: malformed number at " + where());
    const auto l1 = graph.find_label(f[4]);
    const auto l2 = graph.find_label(f[5]);
    if (!l1 || !l2) throw Error("manifest: unknown label at " + where());
    rows.push_back(
        {std::string(f[2]), *distance, *l1, *l2, Confidence::from_double(*p1), Confidence::from_double(*p2)});
  }
  return rows;
}

void save_subset(const Layout& layout, const std::vector<std::string>& models, const TaxonomyGraph& graph,
                 const PairSubset& subset) {
  std::vector<Candidate> selected;
  for (std::size_t pos : subset.selected()) selected.push_back(subset.candidate(pos));
  std::ostringstream head;
  write_manifest(head, models, graph, subset.pair(), selected);
  std::ostringstream tail;
  write_manifest(tail, models, graph, subset.pair(), subset.queue());
  write_file(layout.manifest(subset.pair()), head.str());
  write_file(layout.queue(subset.pair()), tail.str());
}

PairSubset load_subset(const Layout& layout, const std::vector<std::string>& models, const TaxonomyGraph& graph,
                       ModelPair pair, const SelectionConfig& config) {
  const auto load = [&](const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("manifest: cannot open " + path.string());
    return read_manifest(in, models, graph, pair, path.string());
  };
  return PairSubset::restore(pair, load(layout.manifest(pair)), load(layout.queue(pair)), config.k, config.label_cap);
}

std::vector<PairSubset> load_subsets(const Layout& layout, const std::vector<std::string>& models,
                                     const TaxonomyGraph& graph, const SelectionConfig& config) {
  std::vector<PairSubset> subsets;
  for (ModelPair pair : all_pairs(models.size())) subsets.push_back(load_subset(layout, models, graph, pair, config));
  return subsets;
}

void write_verdicts(std::ostream& out, const std::vector<std::string>& models,
                    const std::map<ModelPair, std::vector<LabelVerdict>>& verdicts) {
  const auto answer = [](const LabelVerdict& v, bool a) -> std::string_view {
    if (v.outcome == Outcome::kDiscarded) return "-";
    return a ? "yes" : "no";
  };
  for (const auto& [pair, list] : verdicts) {
    for (const auto& v : list) {
      out << models.at(pair.first) << ',' << models.at(pair.second) << ',' << v.image << ',' << outcome_token(v.outcome)
          << ',' << answer(v, v.answer_a) << ',' << answer(v, v.answer_b) << '\n';
    }
  }
}

std::map<ModelPair, std::vector<LabelVerdict>> read_verdicts(std::istream& in, const std::vector<std::string>& models,
                                                             std::span<const PairSubset> subsets,
                                                             const std::string& origin) {
  std::unordered_map<std::string, ModelIndex> model_index;
  for (ModelIndex i = 0; i < models.size(); ++i) model_index.emplace(models[i], i);
  std::map<ModelPair, const PairSubset*> by_pair;
  for (const auto& s : subsets) by_pair[s.pair()] = &s;
  std::map<ModelPair, std::unordered_map<std::string, const Candidate*>> lookup;

  std::map<ModelPair, std::vector<LabelVerdict>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    if (line.empty()) continue;
    const auto where = [&] { return origin + ":" + std::to_string(line_no); };
    const auto f = detail::split(line, ',');
    if (f.size() != 6) throw Error("verdicts: expected 6 fields at " + where());
    const auto i = model_index.find(std::string(f[0]));
    const auto j = model_index.find(std::string(f[1]));
    if (i == model_index.end() || j == model_index.end() || i->second >= j->second)
      throw Error("verdicts: unknown model pair at " + where());
    const ModelPair pair{i->second, j->second};

    auto subset = by_pair.find(pair);
    if (subset == by_pair.end()) throw Error("verdicts: no selection manifest for pair at " + where());
    auto& index = lookup[pair];
    if (index.empty()) {
      for (const auto& c : subset->second->candidates()) index.emplace(c.image, &c);
    }
    auto candidate = index.find(std::string(f[2]));
    if (candidate == index.end())
      throw Error("verdicts: image " + std::string(f[2]) + " is not a candidate of its pair at " + where());

    LabelVerdict v;
    v.image = std::string(f[2]);
    v.pair = pair;
    v.question_a = candidate->second->label_first;
    v.question_b = candidate->second->label_second;
    v.outcome = parse_outcome(f[3]);
    if (v.outcome != Outcome::kDiscarded) {
      const auto yes_no = [&](std::string_view s) {
        if (s == "yes") return true;
        if (s == "no") return false;
        throw Error("verdicts: expected yes|no at " + where());
      };
      v.answer_a = yes_no(f[4]);
      v.answer_b = yes_no(f[5]);
      if (outcome_from_answers(v.answer_a, v.answer_b) != v.outcome)
        throw Error("verdicts: case does not match answers at " + where());
    }
    out[pair].push_back(std::move(v));
  }
  return out;
}

double round_sig10(double value) { return std::stod(detail::format_sig10(value)); }

json ranking_report(const CompetitionState& state, const Settings& settings) {
  const std::size_t m = state.models.size();
  const auto matrix = [&](const Matrix& mat, bool diagonal) {
    json rows = json::array();
    for (std::size_t i = 0; i < m; ++i) {
      json row = json::array();
      for (std::size_t j = 0; j < m; ++j) {
        if (i == j && !diagonal) {
          row.push_back(nullptr);
        } else {
          row.push_back(round_sig10(mat(i, j)));
        }
      }
      rows.push_back(row);
    }
    return rows;
  };

  json ranking = json::array();
  for (double r : state.perron.ranking) ranking.push_back(round_sig10(r));
  const OrdinalRanking ordinal = ordinal_ranks(state.perron.ranking);

  json tallies = json::array();
  for (const auto& [pair, t] : state.tallies) {
    tallies.push_back({{"pair_i", state.models.at(pair.first)},
                       {"pair_j", state.models.at(pair.second)},
                       {"case_I", t.case_i},
                       {"case_II_i", t.case_ii_first},
                       {"case_II_j", t.case_ii_second},
                       {"case_III", t.case_iii},
                       {"discarded", t.discarded}});
  }

  json config = settings_to_json(settings);
  config.erase("models");
  return {
      {"models", state.models},
      {"partial", state.partial},
      {"accuracy", matrix(state.accuracy, false)},
      {"dominance", matrix(state.dominance, true)},
      {"ranking", ranking},
      {"ordinal_ranks", ordinal.rank},
      {"ordinal_ties", ordinal.ties},
      {"eigenvalue", round_sig10(state.perron.eigenvalue)},
      {"residual", round_sig10(state.perron.residual)},
      {"iterations", state.perron.iterations},
      {"tallies", tallies},
      {"config", config},
  };
}

void write_stability(std::ostream& out, std::span<const StabilityPoint> points) {
  out << "k,srcc\n";
  for (const auto& p : points) out << p.k << ',' << detail::format_sig10(p.srcc) << '\n';
}

}  // namespace mad::store
