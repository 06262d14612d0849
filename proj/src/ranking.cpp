#include "mad/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mad/error.hpp"

namespace mad {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void PairTally::add(Outcome outcome) {
  switch (outcome) {
    case Outcome::kCaseI:
      ++case_i;
      break;
    case Outcome::kCaseIIFirst:
      ++case_ii_first;
      break;
    case Outcome::kCaseIISecond:
      ++case_ii_second;
      break;
    case Outcome::kCaseIII:
      ++case_iii;
      break;
    case Outcome::kDiscarded:
      ++discarded;
      break;
  }
}

PairTally tally_verdicts(std::span<const LabelVerdict> verdicts, std::size_t limit) {
  PairTally tally;
  for (const auto& v : verdicts) {
    if (v.outcome != Outcome::kDiscarded && tally.effective() == limit) break;
    tally.add(v.outcome);
  }
  return tally;
}

PairAccuracy pairwise_accuracy(const PairTally& tally, const Smoothing& smoothing) {
  const std::size_t count = tally.effective();
  if (count == 0) throw Error("ranking: pair has no usable verdicts");
  if (!(smoothing.pseudo_count > 0.0)) throw Error("ranking: smoothing pseudo-count must be positive");
  const double c = smoothing.pseudo_count;
  const double denominator = static_cast<double>(count) + 2.0 * c;
  return {(static_cast<double>(tally.correct_first()) + c) / denominator,
          (static_cast<double>(tally.correct_second()) + c) / denominator};
}

namespace {

void multiply(const Matrix& m, std::span<const double> x, std::span<double> y) {
  const std::size_t n = m.size();
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += m(i, j) * x[j];
    y[i] = acc;
  }
}

double sum(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0); }

void check_positive(const Matrix& m) {
  if (m.size() == 0) throw Error("ranking: empty dominance matrix");
  for (double v : m.values()) {
    if (!(v > 0.0) || !std::isfinite(v)) throw Error("ranking: dominance matrix must be entirely positive");
  }
}

}  // namespace

double perron_residual(const Matrix& dominance, std::span<const double> r) {
  std::vector<double> y(dominance.size());
  multiply(dominance, r, y);
  const double lambda = sum(y) / sum(r);
  double worst = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) worst = std::max(worst, std::abs(y[i] - lambda * r[i]));
  return worst / lambda;
}

PerronResult perron_rank(const Matrix& dominance, const PerronOptions& options) {
  check_positive(dominance);
  if (!(options.tolerance > 0.0)) throw Error("ranking: tolerance must be positive");

  const std::size_t n = dominance.size();
  std::vector<double> r(n, 1.0 / static_cast<double>(n));
  std::vector<double> y(n);
  for (std::size_t iteration = 1; iteration <= options.max_iterations; ++iteration) {
    multiply(dominance, r, y);
    // sum(r) == 1, so 1'y is the Rayleigh-type eigenvalue estimate.
    const double lambda = sum(y);
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(y[i] - lambda * r[i]));
    const double residual = worst / lambda;
    if (residual <= options.tolerance) return {r, lambda, residual, iteration};
    for (std::size_t i = 0; i < n; ++i) r[i] = y[i] / lambda;
  }
  throw Error("ranking: power iteration did not converge within " + std::to_string(options.max_iterations) +
              " iterations");
}

std::vector<double> perron_running_average(const Matrix& dominance, std::uint64_t steps) {
  check_positive(dominance);
  if (steps == 0) throw Error("ranking: running average needs at least one step");
  const std::size_t n = dominance.size();
  constexpr double kStationary = 4 * std::numeric_limits<double>::epsilon();

  std::vector<double> v(n, 1.0);
  std::vector<double> next(n);
  std::vector<double> total(n, 0.0);
  for (std::uint64_t alpha = 1; alpha <= steps; ++alpha) {
    multiply(dominance, v, next);
    const double norm = sum(next);
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      next[i] /= norm;
      change = std::max(change, std::abs(next[i] - v[i]));
      total[i] += next[i];
    }
    v.swap(next);
    if (alpha > 1 && change <= kStationary) {
      const auto remaining = static_cast<double>(steps - alpha);
      for (std::size_t i = 0; i < n; ++i) total[i] += remaining * v[i];
      break;
    }
  }
  for (double& t : total) t /= static_cast<double>(steps);
  return total;
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t start = 0; start < n;) {
    std::size_t end = start + 1;
    while (end < n && values[order[end]] == values[order[start]]) ++end;
    const double shared = (static_cast<double>(start + 1) + static_cast<double>(end)) / 2.0;
    for (std::size_t p = start; p < end; ++p) ranks[order[p]] = shared;
    start = end;
  }
  return ranks;
}

double srcc(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("srcc: rankings differ in length");
  if (a.size() < 2) throw Error("srcc: need at least two items");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double mean = (n + 1.0) / 2.0;
  double cov = 0.0;
  double var_a = 0.0;
  double var_b = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    cov += (ra[i] - mean) * (rb[i] - mean);
    var_a += (ra[i] - mean) * (ra[i] - mean);
    var_b += (rb[i] - mean) * (rb[i] - mean);
  }
  if (var_a == 0.0 || var_b == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return cov / std::sqrt(var_a * var_b);
}

OrdinalRanking ordinal_ranks(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  OrdinalRanking out;
  out.rank.resize(scores.size());
  for (std::size_t p = 0; p < order.size(); ++p) {
    out.rank[order[p]] = p + 1;
    if (p > 0 && scores[order[p]] == scores[order[p - 1]]) out.ties = true;
  }
  return out;
}

CompetitionState assemble_state(std::vector<std::string> models, std::map<ModelPair, PairTally> tallies,
                                const RankingConfig& config, bool partial) {
  const std::size_t m = models.size();
  if (m < 2) throw Error("ranking: need at least two models");

  CompetitionState state;
  state.models = std::move(models);
  state.partial = partial;
  state.accuracy = Matrix(m);
  state.dominance = Matrix::identity(m);
  for (ModelIndex i = 0; i < m; ++i) {
    for (ModelIndex j = i + 1; j < m; ++j) {
      const ModelPair pair{i, j};
      auto it = tallies.find(pair);
      if (it == tallies.end() || it->second.effective() == 0) {
        if (!partial) {
          throw Error("ranking: no usable verdicts for pair " + state.models[i] + " / " + state.models[j]);
        }
        state.accuracy(i, j) = state.accuracy(j, i) = 0.5;
        state.dominance(i, j) = state.dominance(j, i) = 1.0;
        continue;
      }
      const PairAccuracy a = pairwise_accuracy(it->second, config.smoothing);
      state.accuracy(i, j) = a.first;
      state.accuracy(j, i) = a.second;
      state.dominance(i, j) = a.first / a.second;
      state.dominance(j, i) = a.second / a.first;
    }
  }
  state.tallies = std::move(tallies);
  state.perron = perron_rank(state.dominance, config.perron);
  return state;
}

CompetitionState extend_state(const CompetitionState& state, std::string new_model,
                              const std::map<ModelPair, PairTally>& new_tallies, const RankingConfig& config) {
  const std::size_t m = state.models.size();
  const auto added = static_cast<ModelIndex>(m);

  CompetitionState out;
  out.models = state.models;
  out.models.push_back(std::move(new_model));
  out.tallies = state.tallies;
  out.partial = state.partial;
  out.accuracy = Matrix(m + 1);
  out.dominance = Matrix(m + 1);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      out.accuracy(i, j) = state.accuracy(i, j);
      out.dominance(i, j) = state.dominance(i, j);
    }
  }
  out.dominance(m, m) = 1.0;

  for (ModelIndex i = 0; i < added; ++i) {
    const ModelPair pair{i, added};
    auto it = new_tallies.find(pair);
    if (it == new_tallies.end())
      throw Error("ranking: no verdicts for new pair " + out.models[i] + " / " + out.models[m]);
    const PairAccuracy a = pairwise_accuracy(it->second, config.smoothing);
    out.accuracy(i, m) = a.first;
    out.accuracy(m, i) = a.second;
    out.dominance(i, m) = a.first / a.second;
    out.dominance(m, i) = a.second / a.first;
    out.tallies[pair] = it->second;
  }
  out.perron = perron_rank(out.dominance, config.perron);
  return out;
}

std::vector<double> ranking_at_depth(const std::vector<std::string>& models,
                                     const std::map<ModelPair, std::vector<LabelVerdict>>& verdicts, std::size_t depth,
                                     const RankingConfig& config) {
  std::map<ModelPair, PairTally> tallies;
  for (const auto& [pair, list] : verdicts) {
    PairTally t = tally_verdicts(list, depth);
    if (t.effective() < depth) {
      throw Error("ranking: pair " + models.at(pair.first) + " / " + models.at(pair.second) + " has only " +
                  std::to_string(t.effective()) + " verdicts, fewer than " + std::to_string(depth));
    }
    tallies.emplace(pair, t);
  }
  return assemble_state(models, std::move(tallies), config).perron.ranking;
}

std::vector<StabilityPoint> topk_stability(const std::vector<std::string>& models,
                                           const std::map<ModelPair, std::vector<LabelVerdict>>& verdicts,
                                           std::size_t k_reference, const RankingConfig& config) {
  if (k_reference < 2) throw Error("ranking: stability sweep needs k_reference >= 2");
  const std::vector<double> reference = ranking_at_depth(models, verdicts, k_reference, config);
  std::vector<StabilityPoint> out;
  for (std::size_t k = 1; k < k_reference; ++k) {
    out.push_back({k, srcc(ranking_at_depth(models, verdicts, k, config), reference)});
  }
  return out;
}

}  // namespace mad
