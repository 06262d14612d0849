#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mad/competition.hpp"
#include "mad/ranking.hpp"
#include "mad/selection.hpp"

// File formats and the output-directory layout shared by the CLI stages and
// the annotation service.
namespace mad::store {

namespace fs = std::filesystem;

class Layout {
 public:
  explicit Layout(fs::path root) : root_(std::move(root)) {}

  const fs::path& root() const { return root_; }
  fs::path settings() const { return root_ / "competition.json"; }
  fs::path manifest_dir() const { return root_ / "manifests"; }
  fs::path manifest(ModelPair pair) const;
  fs::path queue(ModelPair pair) const;
  fs::path verdicts() const { return root_ / "verdicts.csv"; }
  fs::path ranking() const { return root_ / "ranking.json"; }
  fs::path stability() const { return root_ / "stability.csv"; }
  fs::path votes() const { return root_ / "votes.log"; }

 private:
  fs::path root_;
};

// Inputs and parameters of a competition, persisted by `select` so later
// stages (and later model additions) run without the original flags.
struct Settings {
  fs::path taxonomy;
  std::vector<fs::path> predictions;
  std::vector<std::string> models;
  CompetitionConfig config;
};

nlohmann::json settings_to_json(const Settings& settings);
Settings settings_from_json(const nlohmann::json& j);
void save_settings(const Layout& layout, const Settings& settings);
Settings load_settings(const Layout& layout);

// Replaces `path` with `content` via a temporary file and rename.
void write_file(const fs::path& path, const std::string& content);
std::string read_file(const fs::path& path);

// Selection manifest rows: i,j,image_id,distance,label_i,label_j,conf_i,conf_j
void write_manifest(std::ostream& out, const std::vector<std::string>& models, const TaxonomyGraph& graph,
                    ModelPair pair, std::span<const Candidate> rows);
std::vector<Candidate> read_manifest(std::istream& in, const std::vector<std::string>& models,
                                     const TaxonomyGraph& graph, ModelPair pair,
                                     const std::string& origin = "<stream>");

// Writes the selected rows and the replacement queue of a freshly selected
// subset.
void save_subset(const Layout& layout, const std::vector<std::string>& models, const TaxonomyGraph& graph,
                 const PairSubset& subset);
PairSubset load_subset(const Layout& layout, const std::vector<std::string>& models, const TaxonomyGraph& graph,
                       ModelPair pair, const SelectionConfig& config);
std::vector<PairSubset> load_subsets(const Layout& layout, const std::vector<std::string>& models,
                                     const TaxonomyGraph& graph, const SelectionConfig& config);

// Verdict rows: pair_i,pair_j,image_id,case,answer_a,answer_b
void write_verdicts(std::ostream& out, const std::vector<std::string>& models,
                    const std::map<ModelPair, std::vector<LabelVerdict>>& verdicts);
// Question labels are not stored in the verdict file; `subsets` supplies them.
std::map<ModelPair, std::vector<LabelVerdict>> read_verdicts(std::istream& in, const std::vector<std::string>& models,
                                                             std::span<const PairSubset> subsets,
                                                             const std::string& origin = "<stream>");

// Rounds to 10 significant digits (the precision of every report).
double round_sig10(double value);

nlohmann::json ranking_report(const CompetitionState& state, const Settings& settings);

// k,srcc rows.
void write_stability(std::ostream& out, std::span<const StabilityPoint> points);

}  // namespace mad::store
