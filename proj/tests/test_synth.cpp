#include <gtest/gtest.h>

#include <map>
#include <numeric>
#include <set>

#include "picscore/synth.hpp"
#include "support/fixtures.hpp"

namespace picscore {
namespace {

using testing::default_config;
using testing::default_model;
using testing::default_test;

TEST(Generate, DeterministicForSeed) {
  SynthConfig c;
  c.n_genuine = c.n_imposter = 500;
  c.seed = 17;
  EXPECT_EQ(generate(c).records(), generate(c).records());
  auto other = c;
  other.seed = 18;
  EXPECT_NE(generate(c).records(), generate(other).records());
}

TEST(Generate, CountsAndSampleMeans) {
  const auto& set = default_test();
  ASSERT_EQ(set.genuine_scores().size(), 50000u);
  ASSERT_EQ(set.imposter_scores().size(), 50000u);
  const auto mean = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  // Four standard errors of the mean.
  const double tol = 4.0 * 0.1 / std::sqrt(50000.0);
  EXPECT_NEAR(mean(set.genuine_scores()), 0.7, tol);
  EXPECT_NEAR(mean(set.imposter_scores()), 0.2, tol);
}

TEST(Generate, InvalidConfigs) {
  SynthConfig c;
  c.genuine_std = 0.0;
  EXPECT_THROW(generate(c), ValidationError);
  c = SynthConfig{};
  c.genuine_mean = 0.1;
  EXPECT_THROW(generate(c), ValidationError);
  c = SynthConfig{};
  c.n_imposter = 0;
  EXPECT_THROW(generate(c), ValidationError);
  c = SynthConfig{};
  c.n_subjects = 1;
  EXPECT_THROW(generate(c), ValidationError);
  c = SynthConfig{};
  c.refs_per_probe = 0;
  EXPECT_THROW(generate(c), ValidationError);
}

TEST(Generate, SubjectAndReferenceStructure) {
  SynthConfig c;
  c.n_genuine = 100;
  c.n_imposter = 150;
  c.n_subjects = 7;
  c.refs_per_probe = 5;
  const auto set = generate(c);
  std::map<std::pair<std::string, std::string>, std::size_t> groups;
  std::set<std::string> probes;
  for (const auto& r : set.records()) {
    ASSERT_TRUE(r.probe_id && r.reference_id && r.subject_a && r.subject_b);
    if (r.label == Label::genuine)
      EXPECT_EQ(*r.subject_a, *r.subject_b);
    else
      EXPECT_NE(*r.subject_a, *r.subject_b);
    ++groups[{*r.probe_id, *r.subject_b}];
    probes.insert(*r.probe_id);
  }
  EXPECT_EQ(groups.size(), 20u + 30u);
  EXPECT_EQ(probes.size(), groups.size());
  for (const auto& [key, n] : groups) EXPECT_EQ(n, 5u);
}

TEST(Analytic, Examples) {
  const auto c = default_config(0);
  EXPECT_NEAR(analytic_posterior(c, 0.45), 0.5, 1e-12);
  // log LR at 0.47 is (0.47 - 0.45) * 0.5 / 0.01 = 1.
  EXPECT_NEAR(analytic_posterior(c, 0.47), 0.7310586, 1e-7);
  EXPECT_GT(analytic_posterior(c, 0.45, 0.999999), 0.9999);
  EXPECT_THROW(analytic_posterior(c, 0.45, 1.0), ValidationError);

  const double two[] = {0.47, 0.47};
  EXPECT_NEAR(analytic_fused_posterior(c, two), sigmoid(2.0), 1e-12);
  const double cancel[] = {0.47, 0.43};
  EXPECT_NEAR(analytic_fused_posterior(c, cancel), 0.5, 1e-12);
  EXPECT_THROW(analytic_fused_posterior(c, std::span<const double>{}), ValidationError);
}

TEST(Analytic, EmpiricalFrequencyMatchesPosterior) {
  const auto c = default_config(2);
  const auto& set = default_test();
  // Within a narrow score bin the genuine share approaches the posterior.
  for (double centre : {0.40, 0.45, 0.50}) {
    std::size_t gen = 0, total = 0;
    for (const auto& r : set.records()) {
      if (std::abs(r.score - centre) > 0.01) continue;
      ++total;
      gen += r.label == Label::genuine;
    }
    ASSERT_GT(total, 200u);
    EXPECT_NEAR(static_cast<double>(gen) / static_cast<double>(total), analytic_posterior(c, centre), 0.08);
  }
}

TEST(Oracle, SingleScorePicMatchesAnalyticPosterior) {
  const auto c = default_config(2);
  std::vector<double> dev;
  for (const auto& r : default_test().records())
    dev.push_back(std::abs(pic_single(default_model(), r.score).value - analytic_posterior(c, r.score)));
  const double mad = std::accumulate(dev.begin(), dev.end(), 0.0) / static_cast<double>(dev.size());
  std::sort(dev.begin(), dev.end());
  EXPECT_LE(mad, 0.02);
  EXPECT_LE(dev[dev.size() * 99 / 100], 0.05);
}

TEST(Oracle, FusedPicMatchesAnalyticPosterior) {
  const auto c = default_config(2);
  const auto& set = default_test();
  for (std::size_t k : {2u, 5u}) {
    double mad = 0.0;
    std::size_t groups = 0;
    for (const auto* scores : {&set.genuine_scores(), &set.imposter_scores()}) {
      for (std::size_t i = 0; i + k <= scores->size(); i += k) {
        const std::span<const double> group(scores->data() + i, k);
        mad += std::abs(pic_multi(default_model(), group).value - analytic_fused_posterior(c, group));
        ++groups;
      }
    }
    EXPECT_LE(mad / static_cast<double>(groups), 0.02) << k;
  }
}

}  // namespace
}  // namespace picscore
