#pragma once

// Synthetic genuine/imposter score sets drawn from two normal distributions,
// together with their closed-form Bayes posteriors.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "picscore/dataset.hpp"
#include "picscore/errors.hpp"
#include "picscore/pic.hpp"

namespace picscore {

struct SynthConfig {
  double genuine_mean = 0.7;
  double genuine_std = 0.1;
  double imposter_mean = 0.2;
  double imposter_std = 0.1;
  std::size_t n_genuine = 50000;
  std::size_t n_imposter = 50000;
  std::uint64_t seed = 0;
  /// Identities cycled over the comparisons.
  std::size_t n_subjects = 100;
  /// Consecutive comparisons sharing one probe and claimed identity.
  std::size_t refs_per_probe = 1;
};

inline void validate(const SynthConfig& c) {
  if (!(c.genuine_std > 0.0) || !(c.imposter_std > 0.0)) throw ValidationError("standard deviations must be positive");
  if (!(c.genuine_mean > c.imposter_mean)) throw ValidationError("genuine mean must exceed imposter mean");
  if (!std::isfinite(c.genuine_mean) || !std::isfinite(c.imposter_mean)) throw ValidationError("means must be finite");
  if (c.n_genuine == 0 || c.n_imposter == 0) throw ValidationError("both class sizes must be positive");
  if (c.n_subjects < 2) throw ValidationError("need at least two subjects");
  if (c.refs_per_probe == 0) throw ValidationError("refs_per_probe must be positive");
}

namespace detail {

inline std::string subject_name(std::size_t k) {
  std::string digits = std::to_string(k);
  return "S" + std::string(digits.size() < 4 ? 4 - digits.size() : 0, '0') + digits;
}

}  // namespace detail

/// Genuine draws come first, then imposter draws. Each run of refs_per_probe
/// comparisons shares a probe id and claimed identity; subjects are assigned
/// round-robin over groups, and an imposter group's claimed identity is
/// always a different subject.
inline LabeledScoreSet generate(const SynthConfig& config) {
  validate(config);
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> genuine(config.genuine_mean, config.genuine_std);
  std::normal_distribution<double> imposter(config.imposter_mean, config.imposter_std);
  const std::size_t k = config.n_subjects;
  const std::size_t r = config.refs_per_probe;

  std::vector<ComparisonRecord> records;
  records.reserve(config.n_genuine + config.n_imposter);
  std::size_t probe = 0;
  for (std::size_t i = 0; i < config.n_genuine; ++i) {
    const std::size_t group = i / r;
    const auto subject = detail::subject_name(group % k);
    ComparisonRecord rec;
    rec.score = genuine(rng);
    rec.label = Label::genuine;
    rec.probe_id = "p" + std::to_string(probe + group);
    rec.reference_id = subject + "_r" + std::to_string(i % r);
    rec.subject_a = subject;
    rec.subject_b = subject;
    records.push_back(std::move(rec));
  }
  probe += (config.n_genuine + r - 1) / r;
  for (std::size_t i = 0; i < config.n_imposter; ++i) {
    const std::size_t group = i / r;
    const std::size_t a = group % k;
    const std::size_t b = (a + 1 + (group / k) % (k - 1)) % k;
    ComparisonRecord rec;
    rec.score = imposter(rng);
    rec.label = Label::imposter;
    rec.probe_id = "p" + std::to_string(probe + group);
    rec.reference_id = detail::subject_name(b) + "_r" + std::to_string(i % r);
    rec.subject_a = detail::subject_name(a);
    rec.subject_b = detail::subject_name(b);
    records.push_back(std::move(rec));
  }
  return LabeledScoreSet(std::move(records));
}

inline double normal_log_pdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

/// log of the true genuine/imposter density ratio at s.
inline double analytic_log_lr(const SynthConfig& c, double s) {
  return normal_log_pdf(s, c.genuine_mean, c.genuine_std) - normal_log_pdf(s, c.imposter_mean, c.imposter_std);
}

inline double analytic_posterior(const SynthConfig& c, double s, double prior_genuine = 0.5) {
  check_prior(prior_genuine);
  return sigmoid(analytic_log_lr(c, s) + std::log(prior_genuine) - std::log1p(-prior_genuine));
}

inline double analytic_fused_posterior(const SynthConfig& c, std::span<const double> scores,
                                       double prior_genuine = 0.5) {
  if (scores.empty()) throw ValidationError("fused posterior needs at least one score");
  check_prior(prior_genuine);
  double sum = 0.0;
  for (double s : scores) sum += analytic_log_lr(c, s);
  return sigmoid(sum + std::log(prior_genuine) - std::log1p(-prior_genuine));
}

}  // namespace picscore
