#include "mad/labeling.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <set>

#include "mad/error.hpp"
#include "text.hpp"

namespace mad {

std::string_view outcome_token(Outcome outcome) {
  switch (outcome) {
    case Outcome::kCaseI:
      return "I";
    case Outcome::kCaseIIFirst:
      return "II_i";
    case Outcome::kCaseIISecond:
      return "II_j";
    case Outcome::kCaseIII:
      return "III";
    case Outcome::kDiscarded:
      return "discarded";
  }
  return "?";
}

Outcome parse_outcome(std::string_view token) {
  for (Outcome o :
       {Outcome::kCaseI, Outcome::kCaseIIFirst, Outcome::kCaseIISecond, Outcome::kCaseIII, Outcome::kDiscarded}) {
    if (outcome_token(o) == token) return o;
  }
  throw Error("unknown verdict case '" + std::string(token) + "'");
}

Outcome outcome_from_answers(bool answer_first, bool answer_second) {
  if (answer_first) return answer_second ? Outcome::kCaseI : Outcome::kCaseIIFirst;
  return answer_second ? Outcome::kCaseIISecond : Outcome::kCaseIII;
}

OracleLabels OracleLabels::parse(std::istream& in, const TaxonomyGraph& graph, std::string_view origin) {
  OracleLabels oracle;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    const auto view = detail::trim(line);
    if (view.empty() || view.front() == '#') continue;
    const auto where = [&] { return std::string(origin) + ":" + std::to_string(line_no); };

    const auto fields = detail::split_ws(view);
    if (fields.size() < 2 || fields.size() > 3) throw Error("oracle: malformed line at " + where());
    Truth truth;
    if (fields[1] == "natural") {
      truth.natural = true;
    } else if (fields[1] == "nonnatural") {
      truth.natural = false;
    } else {
      throw Error("oracle: expected natural|nonnatural at " + where());
    }
    if (fields.size() == 3) {
      for (auto key : detail::split(fields[2], ',')) {
        const auto label = graph.find_label(key);
        if (!label) throw Error("oracle: unknown label '" + std::string(key) + "' at " + where());
        truth.labels.push_back(*label);
      }
    }
    if (truth.natural && truth.labels.empty()) throw Error("oracle: natural image without labels at " + where());
    if (oracle.find(fields[0])) throw Error("oracle: duplicate image " + std::string(fields[0]) + " at " + where());
    oracle.set(std::string(fields[0]), std::move(truth));
  }
  return oracle;
}

OracleLabels OracleLabels::load(const std::filesystem::path& path, const TaxonomyGraph& graph) {
  std::ifstream in(path);
  if (!in) throw Error("oracle: cannot open " + path.string());
  return parse(in, graph, path.string());
}

void OracleLabels::set(std::string image, Truth truth) {
  std::sort(truth.labels.begin(), truth.labels.end());
  truth.labels.erase(std::unique(truth.labels.begin(), truth.labels.end()), truth.labels.end());
  truth_[std::move(image)] = std::move(truth);
}

const OracleLabels::Truth* OracleLabels::find(std::string_view image) const {
  auto it = truth_.find(std::string(image));
  return it == truth_.end() ? nullptr : &it->second;
}

AnnotationVote oracle_answer(const OracleLabels& oracle, const LabelQuery& query, std::string annotator) {
  const auto* truth = oracle.find(query.image);
  if (truth == nullptr) throw Error("oracle: no ground truth for image " + query.image);
  AnnotationVote vote{std::move(annotator), query.image, false, false, !truth->natural};
  if (truth->natural) {
    vote.answer_a = std::binary_search(truth->labels.begin(), truth->labels.end(), query.question_a);
    vote.answer_b = std::binary_search(truth->labels.begin(), truth->labels.end(), query.question_b);
  }
  return vote;
}

AggregatedAnswers aggregate_answers(std::span<const AnnotationVote> votes, const VotingRule& rule) {
  if (votes.size() != rule.quorum) {
    throw Error("labeling: expected " + std::to_string(rule.quorum) + " votes, got " + std::to_string(votes.size()));
  }
  std::set<std::string_view> annotators;
  unsigned difficult = 0;
  unsigned yes_a = 0;
  unsigned yes_b = 0;
  for (const auto& v : votes) {
    if (!annotators.insert(v.annotator).second) throw Error("labeling: duplicate vote from annotator " + v.annotator);
    if (v.difficulty) {
      ++difficult;
      continue;
    }
    yes_a += v.answer_a ? 1 : 0;
    yes_b += v.answer_b ? 1 : 0;
  }
  if (difficult > rule.difficulty_limit) return {.discarded = true};
  const unsigned judged = rule.quorum - difficult;
  // Strict majority of the judged votes; a tie resolves to "no".
  return {.discarded = false, .answer_a = 2 * yes_a > judged, .answer_b = 2 * yes_b > judged};
}

LabelVerdict aggregate_votes(const LabelQuery& query, std::vector<AnnotationVote> votes, const VotingRule& rule) {
  for (const auto& v : votes) {
    if (v.image != query.image) throw Error("labeling: vote for image " + v.image + " given for " + query.image);
  }
  const AggregatedAnswers agg = aggregate_answers(votes, rule);
  LabelVerdict verdict{query.image,         query.pair,   query.question_a, query.question_b,
                       Outcome::kDiscarded, agg.answer_a, agg.answer_b,     std::move(votes)};
  if (!agg.discarded) verdict.outcome = outcome_from_answers(agg.answer_a, agg.answer_b);
  return verdict;
}

std::vector<AnnotationVote> OracleSource::collect(const LabelQuery& query) {
  std::vector<AnnotationVote> votes;
  votes.reserve(quorum_);
  for (unsigned a = 1; a <= quorum_; ++a) votes.push_back(oracle_answer(oracle_, query, "oracle-" + std::to_string(a)));
  return votes;
}

void AnswerCache::record(const LabelVerdict& verdict) {
  Entry& e = entries_[verdict.image];
  if (verdict.outcome == Outcome::kDiscarded) {
    if (e.answers.empty()) e.discarded = true;
    return;
  }
  e.answers.try_emplace(verdict.question_a, verdict.answer_a);
  e.answers.try_emplace(verdict.question_b, verdict.answer_b);
}

std::optional<LabelVerdict> AnswerCache::derive(const LabelQuery& query) const {
  const Entry* e = find(query.image);
  if (e == nullptr) return std::nullopt;
  if (e->discarded) {
    return LabelVerdict{query.image, query.pair, query.question_a, query.question_b, Outcome::kDiscarded, false,
                        false,       {}};
  }
  auto a = e->answers.find(query.question_a);
  auto b = e->answers.find(query.question_b);
  if (a == e->answers.end() || b == e->answers.end()) return std::nullopt;
  return LabelVerdict{query.image,
                      query.pair,
                      query.question_a,
                      query.question_b,
                      outcome_from_answers(a->second, b->second),
                      a->second,
                      b->second,
                      {}};
}

const AnswerCache::Entry* AnswerCache::find(std::string_view image) const {
  auto it = entries_.find(std::string(image));
  return it == entries_.end() ? nullptr : &it->second;
}

LabelQuery make_query(const PairSubset& subset, std::size_t position) {
  const Candidate& c = subset.candidate(position);
  return {c.image, subset.pair(), c.label_first, c.label_second};
}

LabelingRun run_labeling(std::span<PairSubset> subsets, AnswerSource& source, AnswerCache& cache,
                         const VotingRule& rule) {
  LabelingRun run;
  std::set<std::string> queried;
  for (PairSubset& subset : subsets) {
    PairLabeling labeling{subset.pair(), {}, false};
    std::deque<std::size_t> work(subset.selected().begin(), subset.selected().end());
    while (!work.empty()) {
      const std::size_t position = work.front();
      work.pop_front();
      const LabelQuery query = make_query(subset, position);

      std::optional<LabelVerdict> verdict = cache.derive(query);
      if (!verdict) {
        queried.insert(query.image);
        verdict = aggregate_votes(query, source.collect(query), rule);
        // Questions already settled for this image keep their first answer.
        if (const auto* known = cache.find(query.image); known && verdict->outcome != Outcome::kDiscarded) {
          if (auto it = known->answers.find(query.question_a); it != known->answers.end())
            verdict->answer_a = it->second;
          if (auto it = known->answers.find(query.question_b); it != known->answers.end())
            verdict->answer_b = it->second;
          verdict->outcome = outcome_from_answers(verdict->answer_a, verdict->answer_b);
        }
      }
      cache.record(*verdict);
      if (verdict->outcome == Outcome::kDiscarded) {
        subset.discard(query.image);
        if (auto replacement = subset.next_replacement()) work.push_back(*replacement);
      }
      labeling.verdicts.push_back(std::move(*verdict));
    }
    labeling.exhausted = subset.selected().size() < subset.k();
    run.pairs.push_back(std::move(labeling));
  }
  run.queried_images = queried.size();
  return run;
}

}  // namespace mad
