#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "mad/competition.hpp"
#include "mad/service.hpp"
#include "mad/store.hpp"

// The CLI stages. Each stage reads only files written by earlier stages in
// the output directory, so any stage can be rerun on its own.
namespace mad::pipeline {

namespace fs = std::filesystem;

// Ranking parameters a stage may override without touching the saved
// settings.
struct RankOverrides {
  std::optional<double> pseudo_count;
  std::optional<double> tolerance;
};

// Writes competition.json and one manifest plus queue per pair.
void select(const store::Settings& settings, const fs::path& out);

// Oracle-mode labeling of every manifest; writes verdicts.csv.
void label(const fs::path& out, const fs::path& oracle);

// Ranks from verdicts.csv; writes ranking.json.
CompetitionState rank(const fs::path& out, const RankOverrides& overrides = {});

// Writes stability.csv (k' = 1 .. k-1 against the full-depth ranking).
std::vector<StabilityPoint> stability(const fs::path& out, const RankOverrides& overrides = {});

// Adds one model to a labeled competition: selects and labels only the new
// pairs, reusing every settled answer, then rewrites verdicts and ranking.
// Returns the number of images sent to the oracle.
std::size_t add_model(const fs::path& out, const fs::path& new_predictions, const fs::path& oracle,
                      const RankOverrides& overrides = {});

// select + label + rank.
CompetitionState run(const store::Settings& settings, const fs::path& out, const fs::path& oracle);

// A live annotation session over the manifests in `out`, logging to votes.log.
struct Session {
  std::unique_ptr<TaxonomyGraph> graph;
  std::unique_ptr<service::AnnotationService> service;
  store::Settings settings;
};

Session open_session(const fs::path& out, service::ServiceConfig config);

// Writes the session's current verdicts to verdicts.csv.
void save_session_verdicts(const Session& session, const fs::path& out);

}  // namespace mad::pipeline
