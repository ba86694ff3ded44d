#pragma once

// Probabilistic interpretable comparison (PIC) scores: the posterior
// probability that one or more comparison scores come from the genuine
// distribution.

#include <cmath>
#include <compare>
#include <span>
#include <utility>

#include "picscore/dataset.hpp"
#include "picscore/density.hpp"
#include "picscore/errors.hpp"

namespace picscore {

/// Logistic function, evaluated without overflow for either sign.
inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct PicScore {
  double value = 0.5;
  std::size_t n_comparisons = 0;
  /// Sum of log(g(s_i) / f(s_i)) over the fused scores.
  double log_lr_sum = 0.0;
  /// log_lr_sum plus the log prior odds; `value` is sigmoid(log_odds).
  double log_odds = 0.0;

  /// Orders by exact posterior. `value` rounds to 1.0 once log_odds exceeds
  /// ~37; log_odds keeps the order beyond that point.
  std::partial_ordering operator<=>(const PicScore& other) const { return log_odds <=> other.log_odds; }
  bool operator==(const PicScore& other) const { return log_odds == other.log_odds; }
};

/// Builds a PicScore from an accumulated log-likelihood ratio.
inline PicScore pic_from_log_lr(double log_lr_sum, std::size_t n, double log_prior_odds = 0.0) {
  PicScore p;
  p.n_comparisons = n;
  p.log_lr_sum = log_lr_sum;
  p.log_odds = log_lr_sum + log_prior_odds;
  p.value = sigmoid(p.log_odds);
  return p;
}

inline PicScore pic_single(const DensityModel& model, double s, EvalMode mode = EvalMode::lookup) {
  if (!std::isfinite(s)) throw ValidationError("score must be finite");
  return pic_from_log_lr(model.log_likelihood_ratio(s, mode), 1, model.log_prior_odds());
}

/// Joint PIC over independent comparisons. The likelihood products are
/// accumulated as a sum of log ratios so large sets cannot underflow.
inline PicScore pic_multi(const DensityModel& model, std::span<const double> scores,
                          EvalMode mode = EvalMode::lookup) {
  if (scores.empty()) throw ValidationError("pic_multi needs at least one score");
  double sum = 0.0;
  for (double s : scores) {
    if (!std::isfinite(s)) throw ValidationError("score must be finite");
    sum += model.log_likelihood_ratio(s, mode);
  }
  return pic_from_log_lr(sum, scores.size(), model.log_prior_odds());
}

struct Decision {
  Label decision;
  double confidence;
};

/// Genuine iff value >= threshold. Confidence is the probability the decision
/// is correct: the PIC value for genuine, its complement for imposter.
inline Decision decision_confidence(const PicScore& pic, double threshold) {
  if (pic.value >= threshold) return {Label::genuine, pic.value};
  return {Label::imposter, 1.0 - pic.value};
}

/// PIC-scale decision threshold for a target false match rate: 1 - FMR.
inline double pic_threshold_for_fmr(double target_fmr) {
  if (!(target_fmr > 0.0 && target_fmr < 1.0)) throw ValidationError("target FMR must lie in (0,1)");
  return 1.0 - target_fmr;
}

}  // namespace picscore
