#pragma once

// One-dimensional Gaussian kernel density estimation with tabulated lookup
// grids, and the two-class density model consumed by the PIC transform.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "picscore/dataset.hpp"
#include "picscore/errors.hpp"

namespace picscore {

/// Lower bound applied to every evaluated density.
inline constexpr double kDensityFloor = 1e-12;
inline constexpr std::size_t kDefaultGridResolution = 4096;
/// The lookup grid extends this many bandwidths beyond the data range.
inline constexpr double kGridPadding = 5.0;
inline constexpr int kModelVersion = 1;
inline constexpr const char* kModelFormat = "picscore-density-model";

enum class EvalMode { exact, lookup };

/// Scott's rule factor for a one-dimensional sample of size n: n^(-1/5).
inline double scott_bandwidth(std::size_t n) {
  if (n == 0) throw ValidationError("bandwidth needs at least one sample");
  return std::pow(static_cast<double>(n), -0.2);
}

/// Standard normal kernel.
inline double gaussian_kernel(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
inline double sample_std(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

/// Default data-driven bandwidth: the Scott factor scaled by the sample
/// standard deviation. Degenerate samples (single value, zero spread) use the
/// bare factor.
inline double default_bandwidth(std::span<const double> scores) {
  const double factor = scott_bandwidth(scores.size());
  const double sd = sample_std(scores);
  return sd > 0.0 ? factor * sd : factor;
}

class KdeDensity {
 public:
  KdeDensity() = default;

  /// Fits a KDE to `scores` and tabulates log-density over [lo, hi].
  KdeDensity(std::vector<double> scores, double bandwidth, double lo, double hi, std::size_t resolution)
      : scores_(std::move(scores)), bandwidth_(bandwidth), grid_min_(lo), grid_max_(hi), resolution_(resolution) {
    if (scores_.empty()) throw ValidationError("cannot fit a density to an empty score set");
    if (!(bandwidth_ > 0.0) || !std::isfinite(bandwidth_)) throw ValidationError("bandwidth must be positive");
    if (resolution_ < 2) throw ValidationError("grid resolution must be at least 2");
    if (!(hi > lo)) throw ValidationError("grid range is empty");
    std::sort(scores_.begin(), scores_.end());
    log_norm_ = std::log(static_cast<double>(scores_.size()) * bandwidth_ * std::sqrt(2.0 * std::numbers::pi));
    log_values_.resize(resolution_);
    values_.resize(resolution_);
    for (std::size_t i = 0; i < resolution_; ++i) {
      log_values_[i] = log_density_exact(grid_point(i));
      values_[i] = std::max(std::exp(log_values_[i]), kDensityFloor);
    }
  }

  /// Rebuilds a density from previously tabulated state (deserialisation).
  static KdeDensity from_parts(std::vector<double> sorted_scores, double bandwidth, double lo, double hi,
                               std::vector<double> values, std::vector<double> log_values) {
    KdeDensity d;
    d.scores_ = std::move(sorted_scores);
    d.bandwidth_ = bandwidth;
    d.grid_min_ = lo;
    d.grid_max_ = hi;
    d.resolution_ = values.size();
    d.values_ = std::move(values);
    d.log_values_ = std::move(log_values);
    d.log_norm_ = std::log(static_cast<double>(d.scores_.size()) * bandwidth * std::sqrt(2.0 * std::numbers::pi));
    return d;
  }

  const std::vector<double>& train_scores() const noexcept { return scores_; }
  double bandwidth() const noexcept { return bandwidth_; }
  double grid_min() const noexcept { return grid_min_; }
  double grid_max() const noexcept { return grid_max_; }
  std::size_t grid_resolution() const noexcept { return resolution_; }
  const std::vector<double>& grid_values() const noexcept { return values_; }
  const std::vector<double>& grid_log_values() const noexcept { return log_values_; }

  double grid_spacing() const noexcept { return (grid_max_ - grid_min_) / static_cast<double>(resolution_ - 1); }
  double grid_point(std::size_t i) const noexcept {
    return i + 1 == resolution_ ? grid_max_ : grid_min_ + static_cast<double>(i) * grid_spacing();
  }

  /// Natural log of the kernel sum, evaluated with the nearest training
  /// score factored out so it stays finite arbitrarily far into the tails.
  /// Terms more than e^-50 below the dominant one are skipped.
  double log_density_exact(double s) const {
    const auto it = std::lower_bound(scores_.begin(), scores_.end(), s);
    double nearest = std::numeric_limits<double>::infinity();
    if (it != scores_.end()) nearest = *it - s;
    if (it != scores_.begin()) nearest = std::min(nearest, s - *std::prev(it));
    const double inv2h2 = 0.5 / (bandwidth_ * bandwidth_);
    const double d2min = nearest * nearest;
    const double radius = std::sqrt(d2min + 50.0 / inv2h2);
    const auto lo = std::lower_bound(scores_.begin(), scores_.end(), s - radius);
    const auto hi = std::upper_bound(lo, scores_.end(), s + radius);
    double sum = 0.0;
    for (auto p = lo; p != hi; ++p) {
      const double d = s - *p;
      sum += std::exp(-(d * d - d2min) * inv2h2);
    }
    return std::log(sum) - d2min * inv2h2 - log_norm_;
  }

  /// Log-density from the table: linear interpolation inside the grid and
  /// linear extrapolation of the end segments outside it.
  double log_density_lookup(double s) const {
    const double pos = (s - grid_min_) / grid_spacing();
    const double last = static_cast<double>(resolution_ - 1);
    const double rounded = std::round(pos);
    if (rounded >= 0.0 && rounded <= last && std::abs(pos - rounded) < 1e-9) {
      return log_values_[static_cast<std::size_t>(rounded)];
    }
    if (pos <= 0.0) return log_values_[0] + pos * (log_values_[1] - log_values_[0]);
    if (pos >= last) {
      return log_values_[resolution_ - 1] + (pos - last) * (log_values_[resolution_ - 1] - log_values_[resolution_ - 2]);
    }
    const auto i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    return log_values_[i] + frac * (log_values_[i + 1] - log_values_[i]);
  }

  double log_density(double s, EvalMode mode = EvalMode::lookup) const {
    return mode == EvalMode::exact ? log_density_exact(s) : log_density_lookup(s);
  }

  /// Density floored at kDensityFloor. In lookup mode, queries outside the
  /// grid return the floor.
  double density(double s, EvalMode mode = EvalMode::lookup) const {
    if (mode == EvalMode::lookup && (s < grid_min_ || s > grid_max_)) return kDensityFloor;
    return std::max(std::exp(log_density(s, mode)), kDensityFloor);
  }

  /// Trapezoidal integral of the tabulated density over the grid.
  double grid_integral() const {
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < resolution_; ++i) sum += 0.5 * (values_[i] + values_[i + 1]);
    return sum * grid_spacing();
  }

 private:
  std::vector<double> scores_;
  double bandwidth_ = 0.0;
  double grid_min_ = 0.0;
  double grid_max_ = 0.0;
  std::size_t resolution_ = 0;
  std::vector<double> values_;
  std::vector<double> log_values_;
  double log_norm_ = 0.0;
};

inline double eval_density(const KdeDensity& kde, double s, EvalMode mode = EvalMode::lookup) {
  return kde.density(s, mode);
}

struct GridRange {
  double lo;
  double hi;
};

/// Fits a KDE. Without an explicit bandwidth the Scott default is used;
/// without an explicit range the grid spans the data padded by 5 bandwidths.
inline KdeDensity fit_kde(std::span<const double> scores, std::optional<double> bandwidth = std::nullopt,
                          std::size_t resolution = kDefaultGridResolution,
                          std::optional<GridRange> range = std::nullopt) {
  if (scores.empty()) throw ValidationError("cannot fit a density to an empty score set");
  const double h = bandwidth ? *bandwidth : default_bandwidth(scores);
  if (!(h > 0.0)) throw ValidationError("bandwidth must be positive");
  GridRange r;
  if (range) {
    r = *range;
  } else {
    const auto [mn, mx] = std::minmax_element(scores.begin(), scores.end());
    r = {*mn - kGridPadding * h, *mx + kGridPadding * h};
  }
  return KdeDensity(std::vector<double>(scores.begin(), scores.end()), h, r.lo, r.hi, resolution);
}

/// Strictly increasing approximation of a tabulated sequence.
///
/// Pool-adjacent-violators yields blocks with strictly increasing means; the
/// result interpolates linearly (in index space) between block centres and
/// extends the outermost segments. Entries that already increase strictly
/// form singleton blocks and are returned unchanged.
inline std::vector<double> strictly_increasing_fit(std::span<const double> values) {
  struct Block {
    double sum;
    std::size_t count;
    std::size_t start;
    double mean() const { return sum / static_cast<double>(count); }
  };
  std::vector<Block> blocks;
  for (std::size_t i = 0; i < values.size(); ++i) {
    blocks.push_back({values[i], 1, i});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].mean() >= blocks.back().mean()) {
      const Block top = blocks.back();
      blocks.pop_back();
      blocks.back().sum += top.sum;
      blocks.back().count += top.count;
    }
  }
  std::vector<double> out(values.size());
  if (blocks.size() == 1) {
    std::fill(out.begin(), out.end(), blocks.front().mean());
    return out;
  }
  std::vector<double> centre(blocks.size()), level(blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    centre[b] = static_cast<double>(blocks[b].start) + 0.5 * static_cast<double>(blocks[b].count - 1);
    level[b] = blocks[b].mean();
  }
  std::size_t seg = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double x = static_cast<double>(i);
    while (seg + 2 < blocks.size() && x > centre[seg + 1]) ++seg;
    if (x == centre[seg]) {
      out[i] = level[seg];
    } else if (x == centre[seg + 1]) {
      out[i] = level[seg + 1];
    } else {
      const double w = (x - centre[seg]) / (centre[seg + 1] - centre[seg]);
      out[i] = level[seg] + w * (level[seg + 1] - level[seg]);
    }
  }
  return out;
}

struct DensityModel {
  KdeDensity genuine;
  KdeDensity imposter;
  double prior_genuine = 0.5;
  int version = kModelVersion;
  /// When set, lookup-mode log-likelihood ratios come from a strictly
  /// increasing fit of the tabulated ratio, so the PIC transform preserves
  /// score order even where sparse tails make the raw KDE ratio wiggle.
  bool monotone = true;
  std::vector<double> log_lr_grid;

  double prior_imposter() const noexcept { return 1.0 - prior_genuine; }

  /// Recomputes log_lr_grid from the class tables.
  void tabulate_log_lr() {
    const auto& lg = genuine.grid_log_values();
    const auto& lf = imposter.grid_log_values();
    std::vector<double> raw(lg.size());
    for (std::size_t i = 0; i < lg.size(); ++i) raw[i] = lg[i] - lf[i];
    log_lr_grid = monotone ? strictly_increasing_fit(raw) : std::move(raw);
  }

  /// log g(s) - log f(s). Exact mode always evaluates the raw KDE ratio.
  double log_likelihood_ratio(double s, EvalMode mode = EvalMode::lookup) const {
    if (mode == EvalMode::exact || log_lr_grid.empty()) {
      return genuine.log_density(s, mode) - imposter.log_density(s, mode);
    }
    return interpolate_grid(s);
  }

  double log_prior_odds() const { return std::log(prior_genuine) - std::log(prior_imposter()); }

 private:
  double interpolate_grid(double s) const {
    const auto& t = log_lr_grid;
    const std::size_t n = t.size();
    const double pos = (s - genuine.grid_min()) / genuine.grid_spacing();
    const double last = static_cast<double>(n - 1);
    const double rounded = std::round(pos);
    if (rounded >= 0.0 && rounded <= last && std::abs(pos - rounded) < 1e-9) return t[static_cast<std::size_t>(rounded)];
    if (pos <= 0.0) return t[0] + pos * (t[1] - t[0]);
    if (pos >= last) return t[n - 1] + (pos - last) * (t[n - 1] - t[n - 2]);
    const auto i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    return t[i] + frac * (t[i + 1] - t[i]);
  }
};

inline void check_prior(double prior_genuine) {
  if (!(prior_genuine > 0.0 && prior_genuine < 1.0)) {
    throw ValidationError("prior_genuine must lie in (0,1)");
  }
}

/// Fits both class densities over a shared grid: the union of each class's
/// data range padded by its own 5 bandwidths.
inline DensityModel fit_model(std::span<const double> genuine, std::span<const double> imposter,
                              double prior_genuine = 0.5, std::size_t resolution = kDefaultGridResolution,
                              bool monotone = true) {
  if (genuine.empty()) throw ValidationError("training set has no genuine scores");
  if (imposter.empty()) throw ValidationError("training set has no imposter scores");
  check_prior(prior_genuine);
  const double hg = default_bandwidth(genuine);
  const double hf = default_bandwidth(imposter);
  const auto [gmin, gmax] = std::minmax_element(genuine.begin(), genuine.end());
  const auto [fmin, fmax] = std::minmax_element(imposter.begin(), imposter.end());
  const GridRange range{std::min(*gmin - kGridPadding * hg, *fmin - kGridPadding * hf),
                        std::max(*gmax + kGridPadding * hg, *fmax + kGridPadding * hf)};
  DensityModel model;
  model.genuine = fit_kde(genuine, hg, resolution, range);
  model.imposter = fit_kde(imposter, hf, resolution, range);
  model.prior_genuine = prior_genuine;
  model.monotone = monotone;
  model.tabulate_log_lr();
  return model;
}

inline DensityModel fit_model(const LabeledScoreSet& train, double prior_genuine = 0.5,
                              std::size_t resolution = kDefaultGridResolution, bool monotone = true) {
  return fit_model(train.genuine_scores(), train.imposter_scores(), prior_genuine, resolution, monotone);
}

namespace detail {

inline nlohmann::json density_to_json(const KdeDensity& d) {
  return {{"bandwidth", d.bandwidth()},         {"grid_min", d.grid_min()},
          {"grid_max", d.grid_max()},           {"grid_resolution", d.grid_resolution()},
          {"grid_values", d.grid_values()},     {"grid_log_values", d.grid_log_values()},
          {"train_scores", d.train_scores()}};
}

inline KdeDensity density_from_json(const nlohmann::json& j, const char* which) {
  const std::string where = std::string(which) + " density";
  auto scores = j.at("train_scores").get<std::vector<double>>();
  auto values = j.at("grid_values").get<std::vector<double>>();
  auto logs = j.at("grid_log_values").get<std::vector<double>>();
  const auto resolution = j.at("grid_resolution").get<std::size_t>();
  const double h = j.at("bandwidth").get<double>();
  const double lo = j.at("grid_min").get<double>();
  const double hi = j.at("grid_max").get<double>();
  if (scores.empty()) throw ModelFormatError(where + ": no training scores");
  if (!(h > 0.0)) throw ModelFormatError(where + ": bandwidth must be positive");
  if (!(hi > lo)) throw ModelFormatError(where + ": empty grid range");
  if (resolution < 2 || values.size() != resolution || logs.size() != resolution) {
    throw ModelFormatError(where + ": grid arrays do not match grid_resolution");
  }
  if (!std::is_sorted(scores.begin(), scores.end())) throw ModelFormatError(where + ": training scores not sorted");
  return KdeDensity::from_parts(std::move(scores), h, lo, hi, std::move(values), std::move(logs));
}

}  // namespace detail

inline nlohmann::json model_to_json(const DensityModel& model) {
  return {{"format", kModelFormat},
          {"version", model.version},
          {"prior_genuine", model.prior_genuine},
          {"monotone_log_lr", model.monotone},
          {"genuine", detail::density_to_json(model.genuine)},
          {"imposter", detail::density_to_json(model.imposter)}};
}

inline DensityModel model_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object()) throw ModelFormatError("model document is not a JSON object");
    if (j.value("format", std::string()) != kModelFormat) throw ModelFormatError("not a picscore density model");
    const auto& version = j.at("version");
    if (!version.is_number_integer() || version.get<int>() != kModelVersion) {
      throw ModelFormatError("unsupported model version '" + version.dump() + "' (expected " +
                             std::to_string(kModelVersion) + ")");
    }
    DensityModel model;
    model.version = kModelVersion;
    model.prior_genuine = j.at("prior_genuine").get<double>();
    if (!(model.prior_genuine > 0.0 && model.prior_genuine < 1.0)) {
      throw ModelFormatError("prior_genuine must lie in (0,1)");
    }
    model.genuine = detail::density_from_json(j.at("genuine"), "genuine");
    model.imposter = detail::density_from_json(j.at("imposter"), "imposter");
    if (model.genuine.grid_min() != model.imposter.grid_min() ||
        model.genuine.grid_max() != model.imposter.grid_max() ||
        model.genuine.grid_resolution() != model.imposter.grid_resolution()) {
      throw ModelFormatError("genuine and imposter grids differ");
    }
    model.monotone = j.at("monotone_log_lr").get<bool>();
    model.tabulate_log_lr();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ModelFormatError(std::string("malformed model: ") + e.what());
  }
}

inline void save_model(const DensityModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << model_to_json(model).dump(1) << '\n';
  if (!out) throw IoError("write to '" + path + "' failed");
}

inline DensityModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ModelFormatError("cannot parse model file '" + path + "': " + e.what());
  }
  return model_from_json(j);
}

}  // namespace picscore
