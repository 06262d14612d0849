#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mad/error.hpp"
#include "mad/labeling.hpp"
#include "mad/ranking.hpp"
#include "mad/selection.hpp"
#include "mad/taxonomy.hpp"

namespace mad::service {

// One accepted vote as stored in the log:
//   timestamp annotator image_id answer_a answer_b difficulty label_a label_b
// Answers are 0/1; label_a/label_b name the two questions of the query the
// vote answered (ordered by label id).
struct VoteRecord {
  std::int64_t timestamp_ms = 0;
  std::string annotator;
  std::string image;
  bool answer_a = false;
  bool answer_b = false;
  bool difficulty = false;
  LabelId label_a;
  LabelId label_b;

  friend bool operator==(const VoteRecord&, const VoteRecord&) = default;
};

std::string format_record(const VoteRecord& record, const TaxonomyGraph& graph);
VoteRecord parse_record(std::string_view line, const TaxonomyGraph& graph);

// A unit of annotation work: one image and two yes/no questions. Pairs whose
// predicted labels coincide on the same image share one query.
struct QueryKey {
  std::string image;
  LabelId label_a;  // label_a < label_b
  LabelId label_b;

  friend auto operator<=>(const QueryKey&, const QueryKey&) = default;
};

struct PairProgress {
  ModelPair pair;
  std::size_t pending = 0;    // selected, no verdict yet
  std::size_t finalized = 0;  // usable verdicts
  std::size_t discarded = 0;
  bool exhausted = false;  // fewer than k images can still be reached
};

// Durable labeling state. Constructed from the selected subsets and advanced
// only by apply(); the same records in the same order always produce the same
// state.
class SessionState {
 public:
  struct Query {
    QueryKey key;
    std::vector<AnnotationVote> votes;
    bool finalized = false;
    AggregatedAnswers result;
    // (subset index, candidate position) waiting on this query.
    std::vector<std::pair<std::size_t, std::size_t>> waiting;
  };

  SessionState(std::vector<std::string> models, std::vector<PairSubset> subsets, VotingRule rule = {});

  // Verdicts finalized by this record. Throws on a vote for an unknown or
  // already finalized query and on a repeated (annotator, query).
  std::vector<LabelVerdict> apply(const VoteRecord& record);

  const std::vector<std::string>& models() const { return models_; }
  const VotingRule& rule() const { return rule_; }
  std::span<const PairSubset> subsets() const { return subsets_; }
  std::span<const Query> queries() const { return queries_; }
  std::optional<std::size_t> find_query(const QueryKey& key) const;
  // Unfinalized queries for `image` (normally zero or one).
  std::vector<std::size_t> open_queries(std::string_view image) const;
  bool has_voted(std::size_t query, std::string_view annotator) const;
  std::size_t vote_count() const { return vote_count_; }

  // Verdicts per pair ordered by candidate rank.
  std::map<ModelPair, std::vector<LabelVerdict>> verdicts() const;
  std::vector<PairProgress> progress() const;
  bool complete() const;

  // Canonical text rendering of the whole state, for equality checks.
  std::string digest() const;

 private:
  void attach(std::size_t subset, std::size_t position);
  void resolve(std::size_t subset, std::size_t position, LabelVerdict verdict);

  std::vector<std::string> models_;
  std::vector<PairSubset> subsets_;
  VotingRule rule_;
  std::vector<Query> queries_;
  std::map<QueryKey, std::size_t> query_index_;
  AnswerCache answers_;
  // Per subset: candidate position -> verdict.
  std::vector<std::map<std::size_t, LabelVerdict>> resolved_;
  std::size_t vote_count_ = 0;
};

enum class Durability {
  kFsync,  // fdatasync before acknowledging a vote
  kFlush,  // hand the bytes to the OS only (survives process crashes)
};

// Append-only vote log, one record per line.
class VoteLog {
 public:
  VoteLog(std::filesystem::path path, Durability durability);
  ~VoteLog();
  VoteLog(const VoteLog&) = delete;
  VoteLog& operator=(const VoteLog&) = delete;

  // Complete records currently in the file. A trailing line without a
  // newline (a write cut short by a crash) is dropped from the file.
  std::vector<std::string> recover();
  // Returns once the line is durable per the configured policy.
  void append(const std::string& line);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  Durability durability_;
  int fd_ = -1;
};

struct ServiceConfig {
  VotingRule voting;
  RankingConfig ranking;
  std::chrono::milliseconds lease{std::chrono::minutes(10)};
  Durability durability = Durability::kFsync;
  // Empty: any annotator id is accepted on first use.
  std::vector<std::string> annotators;
  std::function<std::int64_t()> clock;  // ms since epoch; system clock if unset
};

struct Assignment {
  std::string image;
  LabelId question_a;
  LabelId question_b;
};

struct VoteRequest {
  std::string annotator;
  std::string image;
  bool answer_a = false;
  bool answer_b = false;
  bool difficulty = false;
  // Optional; needed only to disambiguate when the annotator holds no lease.
  std::optional<std::pair<LabelId, LabelId>> questions;
};

struct VoteAck {
  std::vector<LabelVerdict> finalized;
};

// Error kinds surfaced to HTTP clients.
class ServiceError : public Error {
 public:
  enum class Kind { kUnknownAnnotator, kNoLease, kDuplicate, kBadRequest };
  ServiceError(Kind kind, const std::string& message) : Error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Hands out leased queries, records votes durably and finalizes verdicts at
// quorum. All calls are serialized by one mutex.
class AnnotationService {
 public:
  // Replays `log` onto a fresh state built from `subsets`.
  AnnotationService(std::vector<std::string> models, std::vector<PairSubset> subsets, const TaxonomyGraph& graph,
                    std::filesystem::path log_path, ServiceConfig config);

  std::optional<Assignment> next_query(const std::string& annotator);
  VoteAck submit_vote(const VoteRequest& vote);

  std::vector<PairProgress> progress() const;
  CompetitionState ranking_snapshot() const;
  std::map<ModelPair, std::vector<LabelVerdict>> verdicts() const;
  bool complete() const;
  std::string digest() const;
  std::size_t vote_count() const;

  const TaxonomyGraph& graph() const { return graph_; }
  const std::vector<std::string>& models() const { return models_; }

 private:
  struct Lease {
    std::size_t query;
    std::int64_t expires_ms;
  };

  std::int64_t now() const;
  void expire_leases(std::int64_t now);
  std::size_t active_leases(std::size_t query, std::string_view except) const;

  const TaxonomyGraph& graph_;
  std::vector<std::string> models_;
  ServiceConfig config_;
  mutable std::mutex mutex_;
  SessionState state_;
  VoteLog log_;
  std::set<std::string> annotators_;
  std::unordered_map<std::string, Lease> leases_;
};

}  // namespace mad::service
