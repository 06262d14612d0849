#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "mad/selection.hpp"
#include "mad/taxonomy.hpp"
#include "mad/types.hpp"

namespace mad {

// Outcome of labeling one image for one classifier pair.
enum class Outcome {
  kCaseI,         // both predictions correct
  kCaseIIFirst,   // only the pair's first model is correct
  kCaseIISecond,  // only the pair's second model is correct
  kCaseIII,       // both predictions wrong
  kDiscarded,     // annotators could not judge the image
};

std::string_view outcome_token(Outcome outcome);
Outcome parse_outcome(std::string_view token);
Outcome outcome_from_answers(bool answer_first, bool answer_second);

// "Does x contain a <question_a>?" / "Does x contain a <question_b>?"
struct LabelQuery {
  std::string image;
  ModelPair pair;
  LabelId question_a;  // first model's prediction
  LabelId question_b;  // second model's prediction
};

struct AnnotationVote {
  std::string annotator;
  std::string image;
  bool answer_a = false;
  bool answer_b = false;
  bool difficulty = false;  // answers are ignored when set

  friend bool operator==(const AnnotationVote&, const AnnotationVote&) = default;
};

struct VotingRule {
  unsigned quorum = 5;
  // Discard when strictly more than this many annotators flag difficulty.
  unsigned difficulty_limit = 3;
};

struct LabelVerdict {
  std::string image;
  ModelPair pair;
  LabelId question_a;
  LabelId question_b;
  Outcome outcome = Outcome::kDiscarded;
  bool answer_a = false;  // majority answers; meaningless when discarded
  bool answer_b = false;
  std::vector<AnnotationVote> votes;

  friend bool operator==(const LabelVerdict&, const LabelVerdict&) = default;
};

// Majority answers to the two questions, or a discard.
struct AggregatedAnswers {
  bool discarded = false;
  bool answer_a = false;
  bool answer_b = false;
};

// Ground truth for simulated annotation: each image is natural or not, and a
// natural image may contain several acceptable labels.
class OracleLabels {
 public:
  struct Truth {
    bool natural = true;
    std::vector<LabelId> labels;  // sorted
  };

  static OracleLabels parse(std::istream& in, const TaxonomyGraph& graph, std::string_view origin = "<stream>");
  static OracleLabels load(const std::filesystem::path& path, const TaxonomyGraph& graph);

  void set(std::string image, Truth truth);
  const Truth* find(std::string_view image) const;
  std::size_t size() const { return truth_.size(); }

 private:
  std::unordered_map<std::string, Truth> truth_;
};

// Simulated annotator: answers each question by membership in the truth set.
AnnotationVote oracle_answer(const OracleLabels& oracle, const LabelQuery& query, std::string annotator = "oracle");

// Throws on a wrong vote count or a repeated annotator.
AggregatedAnswers aggregate_answers(std::span<const AnnotationVote> votes, const VotingRule& rule = {});
LabelVerdict aggregate_votes(const LabelQuery& query, std::vector<AnnotationVote> votes, const VotingRule& rule = {});

// Supplies a full quorum of votes for one query.
class AnswerSource {
 public:
  virtual ~AnswerSource() = default;
  virtual std::vector<AnnotationVote> collect(const LabelQuery& query) = 0;
};

// Every annotator answers exactly as the oracle does.
class OracleSource final : public AnswerSource {
 public:
  explicit OracleSource(const OracleLabels& oracle, unsigned quorum = 5) : oracle_(oracle), quorum_(quorum) {}
  std::vector<AnnotationVote> collect(const LabelQuery& query) override;

 private:
  const OracleLabels& oracle_;
  unsigned quorum_;
};

// Per-image answers gathered so far. Each (image, label) question and each
// image's discard decision is settled once and reused by every pair.
class AnswerCache {
 public:
  struct Entry {
    bool discarded = false;
    std::map<LabelId, bool> answers;
  };

  // Records a verdict's answers. The first answer to a question wins, and an
  // image is only marked discarded if none of its questions were answered.
  void record(const LabelVerdict& verdict);
  // The verdict for `query` if it can be derived without asking anyone.
  std::optional<LabelVerdict> derive(const LabelQuery& query) const;
  const Entry* find(std::string_view image) const;
  std::size_t image_count() const { return entries_.size(); }

 private:
  std::unordered_map<std::string, Entry> entries_;
};

struct PairLabeling {
  ModelPair pair;
  // Every verdict in admission order, discarded ones included.
  std::vector<LabelVerdict> verdicts;
  // Fewer than k images survived labeling.
  bool exhausted = false;
};

struct LabelingRun {
  std::vector<PairLabeling> pairs;  // parallel to the input subsets
  // Distinct images for which the source was queried.
  std::size_t queried_images = 0;
};

// Labels every selected image; each discard pulls the pair's next
// replacement, chained until k verdicts survive or the queue runs out.
LabelingRun run_labeling(std::span<PairSubset> subsets, AnswerSource& source, AnswerCache& cache,
                         const VotingRule& rule = {});

LabelQuery make_query(const PairSubset& subset, std::size_t position);

}  // namespace mad
