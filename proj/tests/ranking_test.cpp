#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mad/error.hpp"
#include "mad/ranking.hpp"
#include "oracles.hpp"

namespace {

using mad::LabelVerdict;
using mad::Matrix;
using mad::Outcome;
using mad::PairTally;

Matrix matrix_of(const std::vector<std::vector<double>>& rows) {
  Matrix m(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows.size(); ++j) m(i, j) = rows[i][j];
  return m;
}

PairTally tally(std::size_t i, std::size_t ii_first, std::size_t ii_second, std::size_t iii) {
  PairTally t;
  t.case_i = i;
  t.case_ii_first = ii_first;
  t.case_ii_second = ii_second;
  t.case_iii = iii;
  return t;
}

TEST(Ranking, AddOneSmoothing) {
  auto a = mad::pairwise_accuracy(tally(0, 0, 30, 0));
  EXPECT_EQ(a.first, 1.0 / 32.0);
  EXPECT_EQ(a.second, 31.0 / 32.0);
  a = mad::pairwise_accuracy(tally(30, 0, 0, 0));
  EXPECT_EQ(a.first, 31.0 / 32.0);
  EXPECT_EQ(a.second, 31.0 / 32.0);
  EXPECT_GT(a.first + a.second, 1.0);
  a = mad::pairwise_accuracy(tally(0, 15, 0, 15));
  EXPECT_EQ(a.first, 0.5);
  EXPECT_EQ(a.second, 1.0 / 32.0);
  EXPECT_THROW(mad::pairwise_accuracy(tally(0, 0, 0, 0)), mad::Error);
  a = mad::pairwise_accuracy(tally(0, 2, 0, 0), {.pseudo_count = 0.5});
  EXPECT_EQ(a.first, 2.5 / 3.0);
}

TEST(Ranking, TallyStopsAtLimit) {
  std::vector<LabelVerdict> v;
  for (Outcome o : {Outcome::kCaseI, Outcome::kDiscarded, Outcome::kCaseIII, Outcome::kCaseIIFirst})
    v.push_back({"x", {0, 1}, {}, {}, o, false, false, {}});
  const auto t = mad::tally_verdicts(v, 2);
  EXPECT_EQ(t.case_i, 1u);
  EXPECT_EQ(t.discarded, 1u);
  EXPECT_EQ(t.case_iii, 1u);
  EXPECT_EQ(t.case_ii_first, 0u);
  EXPECT_EQ(mad::tally_verdicts(v).effective(), 3u);
}

TEST(Ranking, PerronFixtures) {
  const auto flat = mad::perron_rank(Matrix(3, 1.0));
  for (double r : flat.ranking) EXPECT_NEAR(r, 1.0 / 3.0, 1e-10);
  const auto two = mad::perron_rank(matrix_of({{1, 2}, {0.5, 1}}));
  EXPECT_NEAR(two.ranking[0], 2.0 / 3.0, 1e-8);
  EXPECT_NEAR(two.ranking[1], 1.0 / 3.0, 1e-8);
  EXPECT_NEAR(two.eigenvalue, 2.0, 1e-8);
}

TEST(Ranking, PerronMatchesEigenSolver) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.05, 20.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::vector<double>> b(6, std::vector<double>(6));
    for (auto& row : b)
      for (auto& x : row) x = u(rng);
    const auto got = mad::perron_rank(matrix_of(b));
    const auto [lambda, want] = oracle::principal_eigen(b);
    for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(got.ranking[i], want[i], 1e-8);
    EXPECT_NEAR(got.eigenvalue / lambda, 1.0, 1e-8);
    EXPECT_LE(got.residual, 1e-10);
    EXPECT_LE(mad::perron_residual(matrix_of(b), got.ranking), 1e-10);
  }
}

TEST(Ranking, RunningAverageAgreesWithPowerIterate) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.1, 10.0);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix b(5);
    for (std::size_t i = 0; i < 5; ++i) {
      b(i, i) = 1.0;
      for (std::size_t j = i + 1; j < 5; ++j) {
        b(i, j) = u(rng);
        b(j, i) = 1.0 / b(i, j);
      }
    }
    const auto r = mad::perron_rank(b).ranking;
    const auto avg = mad::perron_running_average(b, 1'000'000'000'000ULL);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(avg[i], r[i], 1e-8);
  }
}

TEST(Ranking, PerronGivesUpWhenIterationsRunOut) {
  const Matrix b = matrix_of({{1, 7, 0.2}, {3, 1, 5}, {0.5, 0.1, 1}});
  EXPECT_THROW(mad::perron_rank(b, {.tolerance = 1e-12, .max_iterations = 2}), mad::Error);
  EXPECT_LE(mad::perron_rank(b).residual, 1e-10);
}

TEST(Ranking, Srcc) {
  EXPECT_DOUBLE_EQ(mad::srcc(std::vector{1.0, 2.0, 3.0, 4.0}, std::vector{1.0, 2.0, 3.0, 4.0}), 1.0);
  EXPECT_DOUBLE_EQ(mad::srcc(std::vector{1.0, 2.0, 3.0, 4.0}, std::vector{4.0, 3.0, 2.0, 1.0}), -1.0);
  EXPECT_NEAR(mad::srcc(std::vector{1.0, 2.0, 3.0, 4.0}, std::vector{1.0, 2.0, 4.0, 3.0}), 0.8, 1e-15);
  EXPECT_TRUE(std::isnan(mad::srcc(std::vector{1.0, 1.0}, std::vector{1.0, 2.0})));
  EXPECT_THROW(mad::srcc(std::vector{1.0, 2.0}, std::vector{1.0}), mad::Error);

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(7), b(7);
    for (auto& x : a) x = u(rng);
    for (auto& x : b) x = u(rng);
    EXPECT_NEAR(mad::srcc(a, b), oracle::spearman_no_ties(a, b), 1e-12);
  }
  const auto ranks = mad::average_ranks(std::vector{10.0, 20.0, 10.0});
  EXPECT_EQ(ranks, (std::vector{1.5, 3.0, 1.5}));
}

TEST(Ranking, OrdinalRanks) {
  const auto o = mad::ordinal_ranks(std::vector{0.2, 0.5, 0.2, 0.1});
  EXPECT_EQ(o.rank, (std::vector<std::size_t>{2, 1, 3, 4}));
  EXPECT_TRUE(o.ties);
  EXPECT_FALSE(mad::ordinal_ranks(std::vector{0.3, 0.7}).ties);
}

TEST(Ranking, StateIsReciprocal) {
  std::mt19937_64 rng(6);
  std::map<mad::ModelPair, PairTally> tallies;
  for (mad::ModelIndex i = 0; i < 4; ++i)
    for (mad::ModelIndex j = i + 1; j < 4; ++j)
      tallies[{i, j}] = tally(rng() % 10, rng() % 10, rng() % 10, rng() % 10 + 1);
  const auto s = mad::assemble_state({"a", "b", "c", "d"}, tallies);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(s.dominance(i, i), 1.0);
    for (std::size_t j = 0; j < 4; ++j) {
      if (i == j) continue;
      EXPECT_NEAR(s.dominance(i, j) * s.dominance(j, i), 1.0, 1e-12);
      EXPECT_GT(s.accuracy(i, j), 0.0);
      EXPECT_LT(s.accuracy(i, j), 1.0);
      EXPECT_EQ(s.dominance(i, j), s.accuracy(i, j) / s.accuracy(j, i));
    }
  }
  EXPECT_THROW(mad::assemble_state({"a"}, {}), mad::Error);
  EXPECT_THROW(mad::assemble_state({"a", "b"}, {}), mad::Error);
  const auto partial = mad::assemble_state({"a", "b"}, {}, {}, true);
  EXPECT_TRUE(partial.partial);
  EXPECT_NEAR(partial.perron.ranking[0], 0.5, 1e-12);
}

TEST(Ranking, IdenticalModelsAreEven) {
  const auto s = mad::assemble_state(
      {"a", "b", "c"}, {{{0, 1}, tally(10, 0, 0, 5)}, {{0, 2}, tally(3, 4, 1, 2)}, {{1, 2}, tally(3, 4, 1, 2)}});
  EXPECT_EQ(s.dominance(0, 1), 1.0);
  EXPECT_NEAR(s.perron.ranking[0], s.perron.ranking[1], 1e-12);
}

TEST(Ranking, ExtendStateMatchesFullAssembly) {
  std::map<mad::ModelPair, PairTally> all{{{0, 1}, tally(3, 9, 2, 1)}, {{0, 2}, tally(1, 5, 6, 3)},
                                          {{1, 2}, tally(4, 4, 4, 4)}, {{0, 3}, tally(2, 1, 9, 0)},
                                          {{1, 3}, tally(0, 7, 3, 5)}, {{2, 3}, tally(6, 2, 2, 2)}};
  std::map<mad::ModelPair, PairTally> old, fresh;
  for (const auto& [p, t] : all) (p.second == 3 ? fresh : old)[p] = t;
  const auto before = mad::assemble_state({"a", "b", "c"}, old);
  const auto grown = mad::extend_state(before, "d", fresh);
  const auto full = mad::assemble_state({"a", "b", "c", "d"}, all);
  EXPECT_EQ(grown.dominance, full.dominance);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(grown.perron.ranking[i], full.perron.ranking[i], 1e-12);
  EXPECT_THROW(mad::extend_state(before, "d", old), mad::Error);
}

std::map<mad::ModelPair, std::vector<LabelVerdict>> separated_verdicts(std::size_t k) {
  // Model i is right on a verdict iff the verdict index mod 4 >= i: model 0
  // always right, model 3 right a quarter of the time.
  std::map<mad::ModelPair, std::vector<LabelVerdict>> v;
  for (mad::ModelIndex i = 0; i < 4; ++i) {
    for (mad::ModelIndex j = i + 1; j < 4; ++j) {
      for (std::size_t n = 0; n < k; ++n) {
        const bool ri = n % 4 >= i, rj = n % 4 >= j;
        v[{i, j}].push_back({"x" + std::to_string(n), {i, j}, {}, {}, mad::outcome_from_answers(ri, rj), ri, rj, {}});
      }
    }
  }
  return v;
}

TEST(Ranking, StabilityOnSeparatedModels) {
  const auto v = separated_verdicts(30);
  const auto points = mad::topk_stability({"a", "b", "c", "d"}, v, 30);
  ASSERT_EQ(points.size(), 29u);
  for (const auto& p : points) {
    if (p.k >= 5) EXPECT_EQ(p.srcc, 1.0) << p.k;
  }
  const auto full = mad::ranking_at_depth({"a", "b", "c", "d"}, v, 30);
  EXPECT_EQ(mad::srcc(full, full), 1.0);
  EXPECT_THROW(mad::ranking_at_depth({"a", "b", "c", "d"}, v, 31), mad::Error);
}

}  // namespace
