#pragma once

// Independent reference computations used only by the tests. Nothing here
// calls into the library code paths it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

namespace picscore::testing {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Inverse standard normal CDF by bisection.
inline double normal_quantile(double p) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline double normal_pdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

/// Posterior computed directly from likelihood products, without log space.
inline double product_posterior(std::span<const double> g, std::span<const double> f, double prior_genuine = 0.5) {
  double lg = prior_genuine, lf = 1.0 - prior_genuine;
  for (double v : g) lg *= v;
  for (double v : f) lf *= v;
  return lg / (lg + lf);
}

/// Smallest observed score t with (#imposters >= t) / n <= target, found by
/// trying every candidate. Returns {t, found}.
inline std::pair<double, bool> brute_force_threshold(std::span<const double> imposter, double target) {
  std::vector<double> candidates(imposter.begin(), imposter.end());
  std::sort(candidates.begin(), candidates.end());
  for (double t : candidates) {
    std::size_t accepted = 0;
    for (double s : imposter) accepted += s >= t ? 1 : 0;
    if (static_cast<double>(accepted) / static_cast<double>(imposter.size()) <= target) return {t, true};
  }
  return {0.0, false};
}

/// Expected calibration error computed bin by bin, straight from the
/// definition: sum_m |B_m|/n * |acc(B_m) - conf(B_m)|.
inline std::pair<double, double> brute_force_ece_mce(std::span<const double> conf, const std::vector<bool>& correct,
                                                     std::size_t m) {
  double ece = 0.0, mce = 0.0;
  const double n = static_cast<double>(conf.size());
  for (std::size_t b = 0; b < m; ++b) {
    const double lo = static_cast<double>(b) / static_cast<double>(m);
    const double hi = static_cast<double>(b + 1) / static_cast<double>(m);
    double cnt = 0, acc = 0, sum = 0;
    for (std::size_t i = 0; i < conf.size(); ++i) {
      const bool in = b + 1 == m ? (conf[i] >= lo && conf[i] <= 1.0) : (conf[i] >= lo && conf[i] < hi);
      if (!in) continue;
      cnt += 1;
      acc += correct[i] ? 1 : 0;
      sum += conf[i];
    }
    if (cnt == 0) continue;
    const double gap = std::abs(acc / cnt - sum / cnt);
    ece += cnt / n * gap;
    mce = std::max(mce, gap);
  }
  return {ece, mce};
}

namespace detail {

// Merge sort counting swaps (discordant pairs) on `v`.
inline std::uint64_t count_inversions(std::vector<double>& v, std::vector<double>& buf, std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t inv = count_inversions(v, buf, lo, mid) + count_inversions(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      inv += mid - i;
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return inv;
}

inline std::uint64_t tied_pairs(const std::vector<double>& sorted) {
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const std::uint64_t t = j - i;
    total += t * (t - 1) / 2;
    i = j;
  }
  return total;
}

}  // namespace detail

/// Kendall's tau-b via Knight's O(n log n) algorithm.
inline double kendall_tau_b(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = x[idx[i]];
    ys[i] = y[idx[i]];
  }
  const std::uint64_t n0 = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  const std::uint64_t n1 = detail::tied_pairs(xs);
  std::uint64_t joint = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && xs[j] == xs[i] && ys[j] == ys[i]) ++j;
    const std::uint64_t t = j - i;
    joint += t * (t - 1) / 2;
    i = j;
  }
  std::vector<double> buf(n);
  const std::uint64_t swaps = detail::count_inversions(ys, buf, 0, n);
  const std::uint64_t n2 = detail::tied_pairs(ys);  // ys is now sorted
  const double numer = static_cast<double>(n0) - static_cast<double>(n1) - static_cast<double>(n2) +
                       static_cast<double>(joint) - 2.0 * static_cast<double>(swaps);
  const double denom = std::sqrt(static_cast<double>(n0 - n1) * static_cast<double>(n0 - n2));
  return numer / denom;
}

/// O(n^2) tau-b, for validating the fast version on small inputs.
inline double kendall_tau_b_naive(std::span<const double> x, std::span<const double> y) {
  double conc = 0, disc = 0, tx = 0, ty = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double dx = x[i] - x[j], dy = y[i] - y[j];
      if (dx == 0 && dy == 0) continue;
      if (dx == 0) {
        tx += 1;
      } else if (dy == 0) {
        ty += 1;
      } else if ((dx > 0) == (dy > 0)) {
        conc += 1;
      } else {
        disc += 1;
      }
    }
  }
  return (conc - disc) / std::sqrt((conc + disc + tx) * (conc + disc + ty));
}

}  // namespace picscore::testing
