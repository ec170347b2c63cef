#include "refverify/analysis.hpp"

#include <cmath>
#include <stdexcept>

#include "refverify/backends.hpp"
#include "refverify/rng.hpp"

namespace refverify {

namespace {

void check_probability(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0))
    throw std::invalid_argument(std::string(name) + " must lie in [0,1]");
}

McEstimate finish(uint64_t hits, uint64_t trials) {
  McEstimate est;
  est.trials = trials;
  est.accuracy = static_cast<double>(hits) / static_cast<double>(trials);
  est.std_error = std::sqrt(est.accuracy * (1.0 - est.accuracy) / static_cast<double>(trials));
  return est;
}

}  // namespace

TwoCandidateParams::TwoCandidateParams(double p, double q1, double q2) : p(p), q1(q1), q2(q2) {
  check_probability(p, "p");
  check_probability(q1, "q1");
  check_probability(q2, "q2");
}

double a_sel(const TwoCandidateParams& params) { return params.p; }

double a_ver(const TwoCandidateParams& params) {
  const double p = params.p, q1 = params.q1, q2 = params.q2;
  return q1 * (1 - q2) + q1 * q2 * p + (1 - q1) * (1 - q2) * p;
}

double p_threshold(double q1, double q2) {
  check_probability(q1, "q1");
  check_probability(q2, "q2");
  const double a = q1 * (1 - q2);
  const double b = q2 * (1 - q1);
  if (a + b <= 0.0) throw std::domain_error("threshold undefined for these q1, q2");
  return 1.0 - b / (a + b);
}

double symmetric_gain(double q) {
  if (!(q > 0.0 && q < 1.0))
    throw std::domain_error("symmetric gain is defined on the open interval (0,1)");
  return p_threshold(q, 1.0 - q) - q;
}

double majority_vote_acc(double q) {
  check_probability(q, "q");
  return 3 * q * q - 2 * q * q * q;
}

McEstimate mc_two_candidate(const TwoCandidateParams& params, uint64_t trials, uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  Xoshiro256 rng(seed);
  uint64_t hits = 0;
  for (uint64_t t = 0; t < trials; ++t) {
    const bool target_true = rng.bernoulli(params.q1);
    const bool distractor_true = rng.bernoulli(params.q2);
    bool hit;
    if (target_true != distractor_true)
      hit = target_true;  // the unique True box is returned outright
    else
      hit = rng.bernoulli(params.p);  // both or neither: selection decides
    if (hit) ++hits;
  }
  return finish(hits, trials);
}

McEstimate mc_multi_candidate(const TwoCandidateParams& params, int n_proposals, uint64_t trials,
                              uint64_t seed) {
  if (n_proposals < 2) throw std::invalid_argument("multi-candidate model needs n >= 2");
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  const SyntheticOracleParams oracle{params.q1, params.q2, params.p, seed};
  Xoshiro256 rng(seed);
  std::vector<int> candidates;
  std::vector<int> all(static_cast<size_t>(n_proposals));
  for (int i = 0; i < n_proposals; ++i) all[static_cast<size_t>(i)] = i;
  constexpr int kTarget = 0;

  uint64_t hits = 0;
  for (uint64_t t = 0; t < trials; ++t) {
    candidates.clear();
    if (rng.bernoulli(params.q1)) candidates.push_back(kTarget);
    for (int d = 1; d < n_proposals; ++d)
      if (rng.bernoulli(params.q2)) candidates.push_back(d);

    int chosen;
    if (candidates.size() == 1)
      chosen = candidates.front();
    else if (candidates.size() > 1)
      chosen = synthetic_select(oracle, candidates, kTarget, rng);
    else
      chosen = synthetic_select(oracle, all, kTarget, rng);
    if (chosen == kTarget) ++hits;
  }
  return finish(hits, trials);
}

GridMax gain_grid_argmax(double step) {
  if (!(step > 0.0 && step <= 0.1)) throw std::invalid_argument("step must lie in (0, 0.1]");
  GridMax best{0.0, -1.0};
  const auto points = static_cast<uint64_t>(std::llround(1.0 / step)) - 1;
  for (uint64_t i = 1; i <= points; ++i) {
    const double q = static_cast<double>(i) * step;
    if (q >= 1.0) break;
    const double g = symmetric_gain(q);
    if (g > best.max) best = {q, g};
  }
  return best;
}

}  // namespace refverify
