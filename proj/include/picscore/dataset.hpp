#pragma once

// Labeled comparison scores: CSV ingestion, genuine/imposter partitioning and
// the subject-exclusive train/test split.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "picscore/csv.hpp"
#include "picscore/errors.hpp"

namespace picscore {

enum class Label { genuine, imposter };

inline const char* to_string(Label label) { return label == Label::genuine ? "genuine" : "imposter"; }

/// Case-insensitive label token parse.
inline std::optional<Label> parse_label(std::string_view token) {
  std::string lower;
  for (char c : token) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "genuine") return Label::genuine;
  if (lower == "imposter") return Label::imposter;
  return std::nullopt;
}

struct ComparisonRecord {
  double score = 0.0;
  Label label = Label::imposter;
  std::optional<std::string> probe_id;
  std::optional<std::string> reference_id;
  std::optional<std::string> subject_a;
  std::optional<std::string> subject_b;

  bool operator==(const ComparisonRecord&) const = default;
};

/// Throws ValidationError when `record` breaks a ComparisonRecord invariant.
inline void validate(const ComparisonRecord& record, std::size_t row = 0) {
  if (!std::isfinite(record.score)) throw ParseError(row, "non-finite score");
  if (record.label == Label::genuine && record.subject_a && record.subject_b &&
      *record.subject_a != *record.subject_b) {
    throw ParseError(row, "genuine comparison between different subjects '" + *record.subject_a + "' and '" +
                              *record.subject_b + "'");
  }
}

/// Splits records by label, preserving order within each class.
inline std::pair<std::vector<double>, std::vector<double>> partition(const std::vector<ComparisonRecord>& records) {
  std::pair<std::vector<double>, std::vector<double>> out;
  for (const auto& r : records) (r.label == Label::genuine ? out.first : out.second).push_back(r.score);
  return out;
}

/// Records plus their per-class score arrays. The records are the source of
/// truth; the arrays are derived on construction.
class LabeledScoreSet {
 public:
  LabeledScoreSet() = default;

  explicit LabeledScoreSet(std::vector<ComparisonRecord> records) : records_(std::move(records)) {
    std::tie(genuine_, imposter_) = partition(records_);
  }

  const std::vector<ComparisonRecord>& records() const noexcept { return records_; }
  const std::vector<double>& genuine_scores() const noexcept { return genuine_; }
  const std::vector<double>& imposter_scores() const noexcept { return imposter_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }

 private:
  std::vector<ComparisonRecord> records_;
  std::vector<double> genuine_;
  std::vector<double> imposter_;
};

inline constexpr const char* kScoreColumns[] = {"score", "label", "probe_id", "reference_id", "subject_a", "subject_b"};

/// Converts a parsed table with the score schema into records. Only `score`
/// and `label` are required; the identifier columns may be absent or empty.
inline std::vector<ComparisonRecord> records_from_table(const csv::Table& table) {
  const auto score_col = table.require_column("score");
  const auto label_col = table.require_column("label");
  const auto probe_col = table.column("probe_id");
  const auto ref_col = table.column("reference_id");
  const auto sa_col = table.column("subject_a");
  const auto sb_col = table.column("subject_b");

  auto opt_field = [](const std::vector<std::string>& row, std::optional<std::size_t> col) {
    std::optional<std::string> v;
    if (col && !row[*col].empty()) v = row[*col];
    return v;
  };

  std::vector<ComparisonRecord> records;
  records.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::size_t row_no = i + 1;
    ComparisonRecord rec;
    rec.score = csv::parse_real(row[score_col], row_no);
    auto label = parse_label(row[label_col]);
    if (!label) throw ParseError(row_no, "unknown label '" + row[label_col] + "'");
    rec.label = *label;
    rec.probe_id = opt_field(row, probe_col);
    rec.reference_id = opt_field(row, ref_col);
    rec.subject_a = opt_field(row, sa_col);
    rec.subject_b = opt_field(row, sb_col);
    validate(rec, row_no);
    records.push_back(std::move(rec));
  }
  return records;
}

inline LabeledScoreSet load_scores(std::istream& in) {
  auto table = csv::parse(in);
  if (table.header.empty()) throw ParseError(0, "no records");
  auto records = records_from_table(table);
  if (records.empty()) throw ParseError(0, "no records");
  return LabeledScoreSet(std::move(records));
}

inline LabeledScoreSet load_scores(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return load_scores(in);
}

inline std::vector<std::string> record_fields(const ComparisonRecord& r) {
  return {csv::fixed6(r.score),        to_string(r.label),         r.probe_id.value_or(""),
          r.reference_id.value_or(""), r.subject_a.value_or(""), r.subject_b.value_or("")};
}

inline void write_scores(std::ostream& out, const std::vector<ComparisonRecord>& records) {
  csv::write_row(out, {std::begin(kScoreColumns), std::end(kScoreColumns)});
  for (const auto& r : records) csv::write_row(out, record_fields(r));
}

inline void save_scores(const std::string& path, const std::vector<ComparisonRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_scores(out, records);
  if (!out) throw IoError("write to '" + path + "' failed");
}

struct SplitResult {
  LabeledScoreSet train;
  LabeledScoreSet test;
  std::size_t dropped = 0;  // cross-partition comparisons
  std::set<std::string> train_subjects;
  std::set<std::string> test_subjects;
};

/// Subject-exclusive split.
///
/// Subjects are ordered by their within-subject (genuine) comparison count,
/// descending, with ties broken by imposter involvement and then by a seeded
/// shuffle. Each subject is placed on the side whose genuine load, normalised
/// by that side's target fraction, is currently lighter. A comparison whose
/// two subjects land on different sides is dropped.
inline SplitResult split_subject_exclusive(const std::vector<ComparisonRecord>& records, double train_fraction = 0.5,
                                           std::uint64_t seed = 0) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ValidationError("train fraction must lie in (0,1)");
  }

  struct Load {
    std::size_t genuine = 0;
    std::size_t imposter = 0;
  };
  std::map<std::string, Load> loads;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (!r.subject_a || !r.subject_b) {
      throw ValidationError("record " + std::to_string(i + 1) + " lacks subject_a/subject_b; split needs both");
    }
    if (*r.subject_a == *r.subject_b) {
      ++loads[*r.subject_a].genuine;
    } else {
      ++loads[*r.subject_a].imposter;
      ++loads[*r.subject_b].imposter;
    }
  }
  if (loads.size() < 2) throw ValidationError("cannot split: fewer than two subjects");

  std::vector<std::pair<std::string, Load>> subjects(loads.begin(), loads.end());
  std::mt19937_64 rng(seed);
  std::shuffle(subjects.begin(), subjects.end(), rng);
  std::stable_sort(subjects.begin(), subjects.end(), [](const auto& a, const auto& b) {
    if (a.second.genuine != b.second.genuine) return a.second.genuine > b.second.genuine;
    return a.second.imposter > b.second.imposter;
  });

  SplitResult result;
  double train_gen = 0, test_gen = 0, train_imp = 0, test_imp = 0;
  const double test_fraction = 1.0 - train_fraction;
  for (const auto& [name, load] : subjects) {
    const double tg = train_gen / train_fraction, sg = test_gen / test_fraction;
    const double ti = train_imp / train_fraction, si = test_imp / test_fraction;
    bool to_train = tg < sg || (tg == sg && ti <= si);
    if (to_train) {
      result.train_subjects.insert(name);
      train_gen += load.genuine;
      train_imp += load.imposter;
    } else {
      result.test_subjects.insert(name);
      test_gen += load.genuine;
      test_imp += load.imposter;
    }
  }

  std::vector<ComparisonRecord> train, test;
  for (const auto& r : records) {
    const bool a_train = result.train_subjects.count(*r.subject_a) > 0;
    const bool b_train = result.train_subjects.count(*r.subject_b) > 0;
    if (a_train != b_train) {
      ++result.dropped;
    } else {
      (a_train ? train : test).push_back(r);
    }
  }
  result.train = LabeledScoreSet(std::move(train));
  result.test = LabeledScoreSet(std::move(test));
  return result;
}

}  // namespace picscore
