#pragma once

// Score-level baseline confidence estimators:
//   DTC  - distance of the score to the decision threshold
//   LRC  - log-likelihood ratio of the genuine and imposter densities
//   ERBC - system error rate (FMR / FNMR) at the threshold nearest the score
//
// Every estimator reports decision confidence: the probability that the
// decision taken at `threshold` is correct. DTC and LRC are min-max
// normalised so that the threshold maps to 0.5 and the training extreme on
// the decided side maps to 1.0.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "picscore/dataset.hpp"
#include "picscore/density.hpp"
#include "picscore/errors.hpp"
#include "picscore/metrics.hpp"

namespace picscore {

enum class EstimatorKind { pic, dtc, lrc, erbc };

inline const char* to_string(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::pic: return "pic";
    case EstimatorKind::dtc: return "dtc";
    case EstimatorKind::lrc: return "lrc";
    case EstimatorKind::erbc: return "erbc";
  }
  return "?";
}

inline std::optional<EstimatorKind> parse_estimator(std::string_view name) {
  if (name == "pic") return EstimatorKind::pic;
  if (name == "dtc") return EstimatorKind::dtc;
  if (name == "lrc") return EstimatorKind::lrc;
  if (name == "erbc") return EstimatorKind::erbc;
  return std::nullopt;
}

inline constexpr std::size_t kErbcGridSize = 2048;

/// Error-rate curves tabulated on training data.
struct ErrorRateTable {
  std::vector<double> thresholds;
  std::vector<double> fmr;
  std::vector<double> fnmr;

  /// Index of the tabulated threshold closest to s.
  std::size_t nearest(double s) const {
    const auto it = std::lower_bound(thresholds.begin(), thresholds.end(), s);
    if (it == thresholds.begin()) return 0;
    if (it == thresholds.end()) return thresholds.size() - 1;
    const auto hi = static_cast<std::size_t>(it - thresholds.begin());
    return (s - thresholds[hi - 1] <= thresholds[hi] - s) ? hi - 1 : hi;
  }
};

inline ErrorRateTable tabulate_error_rates(std::span<const double> genuine, std::span<const double> imposter,
                                           std::size_t grid_size = kErbcGridSize) {
  if (genuine.empty() || imposter.empty()) throw ValidationError("error-rate table needs both classes");
  if (grid_size < 2) throw ValidationError("error-rate grid needs at least two thresholds");
  std::vector<double> g(genuine.begin(), genuine.end()), f(imposter.begin(), imposter.end());
  std::sort(g.begin(), g.end());
  std::sort(f.begin(), f.end());
  const double lo = std::min(g.front(), f.front());
  const double hi = std::max(g.back(), f.back());
  ErrorRateTable table;
  table.thresholds.resize(grid_size);
  table.fmr.resize(grid_size);
  table.fnmr.resize(grid_size);
  for (std::size_t j = 0; j < grid_size; ++j) {
    const double t = j + 1 == grid_size ? hi : lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(grid_size - 1);
    table.thresholds[j] = t;
    const auto accepted = f.end() - std::lower_bound(f.begin(), f.end(), t);
    const auto rejected = std::lower_bound(g.begin(), g.end(), t) - g.begin();
    table.fmr[j] = static_cast<double>(accepted) / static_cast<double>(f.size());
    table.fnmr[j] = static_cast<double>(rejected) / static_cast<double>(g.size());
  }
  return table;
}

struct BaselineEstimator {
  EstimatorKind kind = EstimatorKind::dtc;
  double threshold = 0.0;
  bool fitted = false;
  // DTC: training score extremes.
  double score_min = 0.0;
  double score_max = 0.0;
  // LRC: training log-LR extremes and the log-LR at the threshold.
  double llr_min = 0.0;
  double llr_max = 0.0;
  double llr_threshold = 0.0;
  // ERBC.
  ErrorRateTable rates;
};

/// Fits a baseline from training scores only. LRC additionally needs the
/// trained density model.
inline BaselineEstimator fit_baseline(EstimatorKind kind, std::span<const double> train_genuine,
                                      std::span<const double> train_imposter, double threshold,
                                      const DensityModel* model = nullptr) {
  if (train_genuine.empty() || train_imposter.empty()) throw ValidationError("baseline needs both classes");
  BaselineEstimator est;
  est.kind = kind;
  est.threshold = threshold;
  switch (kind) {
    case EstimatorKind::dtc: {
      const auto [gmin, gmax] = std::minmax_element(train_genuine.begin(), train_genuine.end());
      const auto [fmin, fmax] = std::minmax_element(train_imposter.begin(), train_imposter.end());
      est.score_min = std::min(*gmin, *fmin);
      est.score_max = std::max(*gmax, *fmax);
      break;
    }
    case EstimatorKind::lrc: {
      if (model == nullptr) throw ValidationError("LRC needs a density model");
      est.llr_min = est.llr_max = model->log_likelihood_ratio(train_genuine.front());
      for (auto set : {train_genuine, train_imposter}) {
        for (double s : set) {
          const double l = model->log_likelihood_ratio(s);
          est.llr_min = std::min(est.llr_min, l);
          est.llr_max = std::max(est.llr_max, l);
        }
      }
      est.llr_threshold = model->log_likelihood_ratio(threshold);
      break;
    }
    case EstimatorKind::erbc:
      est.rates = tabulate_error_rates(train_genuine, train_imposter);
      break;
    case EstimatorKind::pic:
      throw ValidationError("PIC is not a baseline estimator");
  }
  est.fitted = true;
  return est;
}

namespace detail {

inline void require_fitted(const BaselineEstimator& est, EstimatorKind kind) {
  if (!est.fitted) throw ValidationError("estimator is not fitted");
  if (est.kind != kind) throw ValidationError(std::string("estimator is ") + to_string(est.kind));
}

/// Maps value v on [anchor, extreme] linearly onto [0.5, 1].
inline double half_to_one(double v, double anchor, double extreme) {
  const double span = extreme - anchor;
  if (!(span > 0.0)) return v >= extreme ? 1.0 : 0.5;
  return std::clamp(0.5 + 0.5 * (v - anchor) / span, 0.0, 1.0);
}

}  // namespace detail

inline double dtc_confidence(const BaselineEstimator& est, double s) {
  detail::require_fitted(est, EstimatorKind::dtc);
  const double t = est.threshold;
  if (s >= t) return detail::half_to_one(s, t, est.score_max);
  return detail::half_to_one(-s, -t, -est.score_min);
}

inline double lrc_confidence(const BaselineEstimator& est, const DensityModel& model, double s) {
  detail::require_fitted(est, EstimatorKind::lrc);
  const double l = model.log_likelihood_ratio(s);
  if (s >= est.threshold) return detail::half_to_one(l, est.llr_threshold, est.llr_max);
  return detail::half_to_one(-l, -est.llr_threshold, -est.llr_min);
}

inline double erbc_confidence(const BaselineEstimator& est, double s) {
  detail::require_fitted(est, EstimatorKind::erbc);
  const auto j = est.rates.nearest(s);
  const double err = s >= est.threshold ? est.rates.fmr[j] : est.rates.fnmr[j];
  return std::clamp(1.0 - err, 0.0, 1.0);
}

/// Dispatches on the estimator kind. `model` is only read for LRC.
inline double baseline_confidence(const BaselineEstimator& est, const DensityModel* model, double s) {
  switch (est.kind) {
    case EstimatorKind::dtc: return dtc_confidence(est, s);
    case EstimatorKind::lrc:
      if (model == nullptr) throw ValidationError("LRC needs a density model");
      return lrc_confidence(est, *model, s);
    case EstimatorKind::erbc: return erbc_confidence(est, s);
    case EstimatorKind::pic: break;
  }
  throw ValidationError("not a baseline estimator");
}

}  // namespace picscore
