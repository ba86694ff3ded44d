#pragma once

// Verification metrics (FMR, FNMR, threshold search) and calibration metrics
// (ECE, MCE, confidence calibration curves).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "picscore/csv.hpp"
#include "picscore/dataset.hpp"
#include "picscore/density.hpp"
#include "picscore/errors.hpp"
#include "picscore/pic.hpp"

namespace picscore {

inline constexpr std::size_t kDefaultEceBins = 10;
inline constexpr std::size_t kDefaultCurveBins = 30;

/// Decision rule shared by every verification metric: score >= t is a match.
inline double false_match_rate(std::span<const double> imposter, double threshold) {
  if (imposter.empty()) return 0.0;
  const auto n = std::count_if(imposter.begin(), imposter.end(), [&](double s) { return s >= threshold; });
  return static_cast<double>(n) / static_cast<double>(imposter.size());
}

inline double false_non_match_rate(std::span<const double> genuine, double threshold) {
  if (genuine.empty()) return 0.0;
  const auto n = std::count_if(genuine.begin(), genuine.end(), [&](double s) { return s < threshold; });
  return static_cast<double>(n) / static_cast<double>(genuine.size());
}

struct ThresholdResult {
  double threshold;
  /// False when the target is below 1/n: the threshold then sits just above
  /// the largest imposter score and the achieved FMR is 0.
  bool reachable;
};

/// Smallest observed imposter score t with FMR(t) <= target.
inline ThresholdResult threshold_at_fmr(std::span<const double> imposter, double target_fmr) {
  if (imposter.empty()) throw ValidationError("threshold search needs imposter scores");
  if (!(target_fmr > 0.0 && target_fmr < 1.0)) throw ValidationError("target FMR must lie in (0,1)");
  std::vector<double> sorted(imposter.begin(), imposter.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double nd = static_cast<double>(n);

  // Largest number of accepted imposters k with k / n <= target.
  auto k = static_cast<std::size_t>(std::floor(target_fmr * nd));
  while (k < n && static_cast<double>(k + 1) / nd <= target_fmr) ++k;
  while (k > 0 && static_cast<double>(k) / nd > target_fmr) --k;

  // Accept the top k; with ties at the cut, move up to the next distinct value.
  std::size_t i = n - k;
  while (i < n && i > 0 && sorted[i] == sorted[i - 1]) ++i;
  if (i >= n) return {std::nextafter(sorted.back(), std::numeric_limits<double>::infinity()), false};
  return {sorted[i], true};
}

struct VerificationResult {
  double threshold = 0.0;
  double fmr = 0.0;
  double fnmr = 0.0;
  std::size_t n_genuine = 0;
  std::size_t n_imposter = 0;
  bool reachable = true;
};

inline VerificationResult evaluate_at_threshold(std::span<const double> genuine, std::span<const double> imposter,
                                                double threshold) {
  VerificationResult r;
  r.threshold = threshold;
  r.fmr = false_match_rate(imposter, threshold);
  r.fnmr = false_non_match_rate(genuine, threshold);
  r.n_genuine = genuine.size();
  r.n_imposter = imposter.size();
  return r;
}

inline VerificationResult fnmr_at_fmr(std::span<const double> genuine, std::span<const double> imposter,
                                      double target_fmr) {
  if (genuine.empty()) throw ValidationError("FNMR needs genuine scores");
  const auto t = threshold_at_fmr(imposter, target_fmr);
  auto r = evaluate_at_threshold(genuine, imposter, t.threshold);
  r.reachable = t.reachable;
  return r;
}

struct CalibrationBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  double p_true = std::numeric_limits<double>::quiet_NaN();
  double p_pred_mean = std::numeric_limits<double>::quiet_NaN();
  double p_pred_std = std::numeric_limits<double>::quiet_NaN();
};

struct CalibrationReport {
  std::vector<CalibrationBin> bins;
  double ece = 0.0;
  double mce = 0.0;
  std::size_t n_bins = 0;
  std::size_t n_samples = 0;
};

/// Equal-width bin over [0,1]; 1.0 lands in the top bin.
inline std::size_t unit_bin(double x, std::size_t m) {
  auto b = static_cast<std::size_t>(x * static_cast<double>(m));
  return std::min(b, m - 1);
}

/// Per-bin accuracy against mean confidence, with ECE as the count-weighted
/// mean gap and MCE as the largest gap over non-empty bins.
inline CalibrationReport calibration_report(std::span<const double> confidences, const std::vector<bool>& correct,
                                            std::size_t m_bins = kDefaultEceBins) {
  if (confidences.size() != correct.size()) throw ValidationError("confidence and correctness lengths differ");
  if (confidences.empty()) throw ValidationError("calibration needs at least one sample");
  if (m_bins == 0) throw ValidationError("bin count must be positive");

  struct Acc {
    std::size_t count = 0;
    double n_correct = 0.0;
    double sum = 0.0;
    double sum_sq = 0.0;
  };
  std::vector<Acc> acc(m_bins);
  for (std::size_t i = 0; i < confidences.size(); ++i) {
    const double c = confidences[i];
    if (!(c >= 0.0 && c <= 1.0)) throw ValidationError("confidence " + std::to_string(c) + " outside [0,1]");
    auto& a = acc[unit_bin(c, m_bins)];
    ++a.count;
    a.n_correct += correct[i] ? 1.0 : 0.0;
    a.sum += c;
    a.sum_sq += c * c;
  }

  CalibrationReport report;
  report.n_bins = m_bins;
  report.n_samples = confidences.size();
  const double n = static_cast<double>(confidences.size());
  double ece_sum = 0.0;
  for (std::size_t m = 0; m < m_bins; ++m) {
    CalibrationBin bin;
    bin.lo = static_cast<double>(m) / static_cast<double>(m_bins);
    bin.hi = static_cast<double>(m + 1) / static_cast<double>(m_bins);
    const auto& a = acc[m];
    bin.count = a.count;
    if (a.count > 0) {
      const double cnt = static_cast<double>(a.count);
      bin.p_true = a.n_correct / cnt;
      bin.p_pred_mean = a.sum / cnt;
      bin.p_pred_std = std::sqrt(std::max(0.0, a.sum_sq / cnt - bin.p_pred_mean * bin.p_pred_mean));
      ece_sum += std::abs(a.n_correct - a.sum);
      report.mce = std::max(report.mce, std::abs(bin.p_true - bin.p_pred_mean));
    }
    report.bins.push_back(bin);
  }
  report.ece = ece_sum / n;
  // Both are computed from the same bins, but independent roundings can put
  // the weighted mean an ulp above the max.
  report.ece = std::min(report.ece, report.mce);
  return report;
}

inline double ece(std::span<const double> confidences, const std::vector<bool>& correct,
                  std::size_t m_bins = kDefaultEceBins) {
  return calibration_report(confidences, correct, m_bins).ece;
}

inline double mce(std::span<const double> confidences, const std::vector<bool>& correct,
                  std::size_t m_bins = kDefaultEceBins) {
  return calibration_report(confidences, correct, m_bins).mce;
}

struct CurvePoint {
  double bin_center = 0.0;
  double pred_mean = std::numeric_limits<double>::quiet_NaN();
  double pred_std = std::numeric_limits<double>::quiet_NaN();
  std::size_t count = 0;
};

/// Confidence calibration curve: samples binned by true confidence, with the
/// mean and (population) standard deviation of predicted confidence per bin.
/// Empty bins carry NaN statistics.
inline std::vector<CurvePoint> ccc(std::span<const double> true_conf, std::span<const double> pred_conf,
                                   std::size_t b_bins = kDefaultCurveBins) {
  if (true_conf.size() != pred_conf.size()) throw ValidationError("true and predicted lengths differ");
  if (b_bins == 0) throw ValidationError("bin count must be positive");
  std::vector<double> sum(b_bins, 0.0), sum_sq(b_bins, 0.0);
  std::vector<std::size_t> count(b_bins, 0);
  for (std::size_t i = 0; i < true_conf.size(); ++i) {
    const double t = std::clamp(true_conf[i], 0.0, 1.0);
    const auto b = unit_bin(t, b_bins);
    ++count[b];
    sum[b] += pred_conf[i];
    sum_sq[b] += pred_conf[i] * pred_conf[i];
  }
  std::vector<CurvePoint> curve(b_bins);
  for (std::size_t b = 0; b < b_bins; ++b) {
    auto& p = curve[b];
    p.bin_center = (static_cast<double>(b) + 0.5) / static_cast<double>(b_bins);
    p.count = count[b];
    if (count[b] > 0) {
      const double c = static_cast<double>(count[b]);
      p.pred_mean = sum[b] / c;
      p.pred_std = std::sqrt(std::max(0.0, sum_sq[b] / c - p.pred_mean * p.pred_mean));
    }
  }
  return curve;
}

/// Ground-truth decision confidence from a density model fitted on test
/// data: the test posterior folded by the decision.
inline double true_confidence(const DensityModel& model_test, double s, Label decision) {
  const double p = pic_single(model_test, s).value;
  return decision == Label::genuine ? p : 1.0 - p;
}

/// As above, deciding genuine iff the raw score reaches `raw_threshold`.
inline double true_confidence(const DensityModel& model_test, double s, double raw_threshold) {
  return true_confidence(model_test, s, s >= raw_threshold ? Label::genuine : Label::imposter);
}

inline void write_calibration_csv(std::ostream& out, const CalibrationReport& report) {
  csv::write_row(out, {"bin_lo", "bin_hi", "count", "p_true", "p_pred_mean", "p_pred_std"});
  for (const auto& b : report.bins) {
    csv::write_row(out, {csv::fixed6(b.lo), csv::fixed6(b.hi), std::to_string(b.count), csv::fixed6(b.p_true),
                         csv::fixed6(b.p_pred_mean), csv::fixed6(b.p_pred_std)});
  }
}

inline void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve) {
  csv::write_row(out, {"bin_center", "pred_mean", "pred_std", "count"});
  for (const auto& p : curve) {
    csv::write_row(out, {csv::fixed6(p.bin_center), csv::fixed6(p.pred_mean), csv::fixed6(p.pred_std),
                         std::to_string(p.count)});
  }
}

}  // namespace picscore
