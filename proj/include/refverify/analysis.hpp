#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace refverify {

// Two proposals, one correct: q1/q2 are the True rates for the correct box
// and the distractor, p the chance a selection prompt picks the correct box.
struct TwoCandidateParams {
  double p = 0.5;
  double q1 = 0.5;
  double q2 = 0.5;

  TwoCandidateParams() = default;
  TwoCandidateParams(double p, double q1, double q2);  // throws outside [0,1]
};

// Selection accuracy: the selector's own success rate.
double a_sel(const TwoCandidateParams& params);

// Verification accuracy: unique-True wins outright; double-True and
// double-False fall back to selection.
//   q1(1-q2) + q1*q2*p + (1-q1)(1-q2)*p
double a_ver(const TwoCandidateParams& params);

// Minimum selection rate p at which plain selection ties verification:
//   1 - q2(1-q1) / (q1(1-q2) + q2(1-q1))
// Throws when the denominator vanishes (q1, q2 both at {0,1} extremes).
double p_threshold(double q1, double q2);

// Threshold-minus-q gap in the symmetric case q1=q, q2=1-q:
//   q^2 / (q^2 + (1-q)^2) - q
// Defined on the open interval (0,1).
double symmetric_gain(double q);

// Accuracy of best-of-three voting over i.i.d. Bernoulli(q) selections:
//   3q^2 - 2q^3
double majority_vote_acc(double q);

struct McEstimate {
  double accuracy = 0;
  double std_error = 0;
  uint64_t trials = 0;
};

// Simulates the two-candidate process: verdicts drawn Bernoulli(q1) and
// Bernoulli(q2); exactly-one-True wins iff it is the target; otherwise the
// trial falls back to a Bernoulli(p) selection. Deterministic per seed.
McEstimate mc_two_candidate(const TwoCandidateParams& params, uint64_t trials, uint64_t seed);

// One target plus n-1 independent distractors; unique-True returns that box,
// multi-True selects over the pruned set, all-False selects over all boxes
// (selection events use the oracle's p for the target when it is present).
McEstimate mc_multi_candidate(const TwoCandidateParams& params, int n_proposals, uint64_t trials,
                              uint64_t seed);

struct GridMax {
  double argmax = 0;
  double max = 0;
};

// Grid search of symmetric_gain over the open interval with the given step.
GridMax gain_grid_argmax(double step = 1e-4);

}  // namespace refverify
