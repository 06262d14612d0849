#include <gtest/gtest.h>

#include <sstream>

#include "fixtures.hpp"
#include "mad/error.hpp"
#include "mad/labeling.hpp"

namespace {

using mad::AnnotationVote;
using mad::Candidate;
using mad::Confidence;
using mad::LabelId;
using mad::Outcome;

const char* kFoods = R"(N root r entity
N food f food
N tool t tool
N bird b bird
N guacamole g guacamole
N mortar m mortar
N drake d drake
N coot c coot
E root food
E root tool
E root bird
E food guacamole
E tool mortar
E bird drake
E bird coot
L guacamole
L mortar
L drake
L coot
)";

mad::OracleLabels oracle_of(const mad::TaxonomyGraph& g, const std::string& text) {
  std::istringstream in(text);
  return mad::OracleLabels::parse(in, g, "truth");
}

std::vector<AnnotationVote> votes(std::initializer_list<std::tuple<bool, bool, bool>> spec) {
  std::vector<AnnotationVote> out;
  int i = 0;
  for (auto [a, b, d] : spec) out.push_back({"ann" + std::to_string(i++), "img", a, b, d});
  return out;
}

TEST(Labeling, OracleAnswers) {
  const auto g = fixtures::parse_graph(kFoods);
  const auto truth = oracle_of(g, "bowl natural guacamole,mortar\nduck natural drake\nart nonnatural\n");
  const auto gm = mad::oracle_answer(truth, {"bowl", {0, 1}, g.label("guacamole"), g.label("mortar")});
  EXPECT_TRUE(gm.answer_a);
  EXPECT_TRUE(gm.answer_b);
  EXPECT_FALSE(gm.difficulty);
  const auto dc = mad::oracle_answer(truth, {"duck", {0, 1}, g.label("drake"), g.label("coot")});
  EXPECT_TRUE(dc.answer_a);
  EXPECT_FALSE(dc.answer_b);
  EXPECT_TRUE(mad::oracle_answer(truth, {"art", {0, 1}, g.label("drake"), g.label("coot")}).difficulty);
  EXPECT_THROW(mad::oracle_answer(truth, {"nope", {0, 1}, g.label("drake"), g.label("coot")}), mad::Error);
}

TEST(Labeling, OracleFileErrors) {
  const auto g = fixtures::parse_graph(kFoods);
  EXPECT_THROW(oracle_of(g, "x natural\n"), mad::Error);
  EXPECT_THROW(oracle_of(g, "x maybe drake\n"), mad::Error);
  EXPECT_THROW(oracle_of(g, "x natural swan\n"), mad::Error);
  EXPECT_THROW(oracle_of(g, "x natural drake\nx natural coot\n"), mad::Error);
}

TEST(Labeling, Aggregation) {
  const mad::LabelQuery q{"img", {0, 1}, LabelId{0}, LabelId{1}};
  const auto four_hard = votes({{0, 0, 1}, {0, 0, 1}, {1, 1, 1}, {0, 0, 1}, {1, 0, 0}});
  EXPECT_EQ(mad::aggregate_votes(q, four_hard).outcome, Outcome::kDiscarded);
  const auto three_hard = votes({{0, 0, 1}, {0, 0, 1}, {1, 1, 0}, {0, 0, 1}, {1, 0, 0}});
  EXPECT_EQ(mad::aggregate_votes(q, three_hard).outcome, Outcome::kCaseIIFirst);
  EXPECT_EQ(mad::aggregate_votes(q, votes({{1, 0, 0}, {1, 0, 0}, {1, 0, 0}, {0, 0, 0}, {0, 0, 0}})).outcome,
            Outcome::kCaseIIFirst);
  EXPECT_EQ(mad::aggregate_votes(q, votes({{0, 0, 0}, {0, 0, 0}, {0, 0, 0}, {0, 0, 0}, {0, 0, 0}})).outcome,
            Outcome::kCaseIII);
  EXPECT_EQ(mad::aggregate_votes(q, votes({{1, 1, 0}, {1, 1, 0}, {1, 1, 0}, {1, 1, 0}, {1, 1, 0}})).outcome,
            Outcome::kCaseI);
  EXPECT_EQ(mad::aggregate_votes(q, votes({{0, 1, 0}, {0, 1, 0}, {0, 1, 0}, {0, 1, 0}, {0, 1, 0}})).outcome,
            Outcome::kCaseIISecond);
  // Two judged votes split 1-1: a tie is "no".
  EXPECT_EQ(mad::aggregate_votes(q, votes({{1, 1, 0}, {0, 1, 0}, {0, 0, 1}, {0, 0, 1}, {0, 0, 1}})).outcome,
            Outcome::kCaseIISecond);

  EXPECT_THROW(mad::aggregate_votes(q, votes({{1, 1, 0}})), mad::Error);
  auto dup = votes({{1, 1, 0}, {1, 1, 0}, {1, 1, 0}, {1, 1, 0}, {1, 1, 0}});
  dup[4].annotator = dup[0].annotator;
  EXPECT_THROW(mad::aggregate_votes(q, dup), mad::Error);
}

TEST(Labeling, OutcomeTokens) {
  for (Outcome o :
       {Outcome::kCaseI, Outcome::kCaseIIFirst, Outcome::kCaseIISecond, Outcome::kCaseIII, Outcome::kDiscarded})
    EXPECT_EQ(mad::parse_outcome(mad::outcome_token(o)), o);
  EXPECT_THROW(mad::parse_outcome("IV"), mad::Error);
}

Candidate cand(const std::string& image, double d, LabelId a, LabelId b) {
  return {image, d, a, b, Confidence{900'000}, Confidence{900'000}};
}

TEST(Labeling, RunWithoutDiscardsGivesKVerdicts) {
  const auto g = fixtures::parse_graph(kFoods);
  const auto truth = oracle_of(g, "x1 natural drake\nx2 natural coot\nx3 natural drake\nx4 natural coot\n");
  const auto d = g.label("drake"), c = g.label("coot");
  std::vector<mad::PairSubset> subsets;
  subsets.emplace_back(mad::ModelPair{0, 1},
                       std::vector{cand("x1", 4, d, c), cand("x2", 3, d, c), cand("x3", 2, c, d), cand("x4", 1, c, d)},
                       3);
  mad::OracleSource source(truth);
  mad::AnswerCache cache;
  const auto run = mad::run_labeling(subsets, source, cache);
  ASSERT_EQ(run.pairs[0].verdicts.size(), 3u);
  EXPECT_FALSE(run.pairs[0].exhausted);
  EXPECT_EQ(run.pairs[0].verdicts[0].outcome, Outcome::kCaseIIFirst);
  EXPECT_EQ(run.pairs[0].verdicts[1].outcome, Outcome::kCaseIISecond);
  EXPECT_EQ(run.pairs[0].verdicts[2].outcome, Outcome::kCaseIISecond);
  EXPECT_EQ(run.queried_images, 3u);
}

TEST(Labeling, DiscardSubstitutesNextCandidate) {
  const auto g = fixtures::parse_graph(kFoods);
  const auto truth = oracle_of(g, "x1 nonnatural\nx2 natural coot\nx3 natural drake\nx4 natural coot\n");
  const auto d = g.label("drake"), c = g.label("coot");
  std::vector<mad::PairSubset> subsets;
  subsets.emplace_back(mad::ModelPair{0, 1},
                       std::vector{cand("x1", 4, d, c), cand("x2", 3, d, c), cand("x3", 2, c, d), cand("x4", 1, c, d)},
                       3);
  mad::OracleSource source(truth);
  mad::AnswerCache cache;
  const auto run = mad::run_labeling(subsets, source, cache);
  const auto& v = run.pairs[0].verdicts;
  ASSERT_EQ(v.size(), 4u);
  EXPECT_EQ(v[0].outcome, Outcome::kDiscarded);
  EXPECT_EQ(v[3].image, "x4");
  EXPECT_FALSE(run.pairs[0].exhausted);

  // Without a fourth candidate the pair is flagged exhausted.
  std::vector<mad::PairSubset> short_subsets;
  short_subsets.emplace_back(mad::ModelPair{0, 1},
                             std::vector{cand("x1", 4, d, c), cand("x2", 3, d, c), cand("x3", 2, c, d)}, 3);
  mad::AnswerCache cache2;
  EXPECT_TRUE(mad::run_labeling(short_subsets, source, cache2).pairs[0].exhausted);
}

// Counts how often each image is sent out.
class CountingSource : public mad::AnswerSource {
 public:
  explicit CountingSource(const mad::OracleLabels& o) : inner_(o) {}
  std::vector<AnnotationVote> collect(const mad::LabelQuery& q) override {
    ++calls[q.image];
    return inner_.collect(q);
  }
  std::map<std::string, int> calls;

 private:
  mad::OracleSource inner_;
};

TEST(Labeling, SharedImageAnswersAreReused) {
  const auto g = fixtures::parse_graph(kFoods);
  const auto truth = oracle_of(g, "bowl natural guacamole,mortar\n");
  const auto gu = g.label("guacamole"), mo = g.label("mortar"), dr = g.label("drake");
  std::vector<mad::PairSubset> subsets;
  subsets.emplace_back(mad::ModelPair{0, 1}, std::vector{cand("bowl", 2, gu, mo)}, 1);
  subsets.emplace_back(mad::ModelPair{0, 2}, std::vector{cand("bowl", 2, gu, dr)}, 1);
  subsets.emplace_back(mad::ModelPair{1, 2}, std::vector{cand("bowl", 2, mo, gu)}, 1);
  CountingSource source(truth);
  mad::AnswerCache cache;
  const auto run = mad::run_labeling(subsets, source, cache);
  EXPECT_EQ(run.pairs[0].verdicts[0].outcome, Outcome::kCaseI);
  EXPECT_EQ(run.pairs[1].verdicts[0].outcome, Outcome::kCaseIIFirst);
  EXPECT_EQ(run.pairs[2].verdicts[0].outcome, Outcome::kCaseI);
  // (guacamole, mortar) then (guacamole, drake); the third pair is derived.
  EXPECT_EQ(source.calls["bowl"], 2);
  EXPECT_EQ(run.queried_images, 1u);
  EXPECT_TRUE(run.pairs[2].verdicts[0].votes.empty());
}

TEST(Labeling, CacheFirstAnswerWins) {
  mad::AnswerCache cache;
  cache.record({"x", {0, 1}, LabelId{0}, LabelId{1}, Outcome::kCaseIIFirst, true, false, {}});
  cache.record({"x", {0, 2}, LabelId{1}, LabelId{2}, Outcome::kCaseI, true, true, {}});
  const auto v = cache.derive({"x", {1, 2}, LabelId{1}, LabelId{2}});
  ASSERT_TRUE(v);
  EXPECT_EQ(v->outcome, Outcome::kCaseIISecond);
  // A later discard does not erase settled answers.
  cache.record({"x", {0, 3}, LabelId{0}, LabelId{3}, Outcome::kDiscarded, false, false, {}});
  EXPECT_FALSE(cache.find("x")->discarded);
  cache.record({"y", {0, 3}, LabelId{0}, LabelId{3}, Outcome::kDiscarded, false, false, {}});
  EXPECT_EQ(cache.derive({"y", {1, 2}, LabelId{1}, LabelId{2}})->outcome, Outcome::kDiscarded);
}

}  // namespace
