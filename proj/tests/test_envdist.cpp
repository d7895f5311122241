#include <gtest/gtest.h>

#include <cmath>

#include "netenv/envdist.hpp"

using namespace netenv;

namespace {

EnvironmentDistribution hosts_8_to_12() {
  EnvironmentDistribution d;
  d.host_counts = {8, 9, 10, 11, 12};
  return d;
}

Curriculum three_stages(double t0, double t1, std::size_t window = 100) {
  Curriculum c;
  c.window = window;
  c.stages = {{EnvironmentDistribution{}, t0}, {EnvironmentDistribution{}, t1}, {EnvironmentDistribution{}, 0.0}};
  return c;
}

}  // namespace

TEST(SampleEnv, PointMassIsFixed) {
  ScenarioConfig base;
  base.network.hosts = 10;
  const auto d = EnvironmentDistribution::point_mass(base);
  for (std::uint64_t s = 0; s < 50; ++s) EXPECT_EQ(sample_env(d, s), base);
}

TEST(SampleEnv, HostCountMeanWithinBound) {
  const auto d = hosts_8_to_12();
  double sum = 0.0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const auto n = sample_env(d, s).network.hosts;
    EXPECT_GE(n, 8u);
    EXPECT_LE(n, 12u);
    sum += static_cast<double>(n);
  }
  EXPECT_NEAR(sum / 1000.0, 10.0, 0.14);
}

TEST(SampleEnv, VariantMixAllFaithful) {
  auto d = hosts_8_to_12();
  d.variant_mix = {1.0, 0.0};
  for (std::uint64_t s = 0; s < 200; ++s) EXPECT_EQ(sample_env(d, s).variant, RedVariant::faithful);
}

TEST(SampleEnv, IntervalsAreRespectedAndDeterministic) {
  auto d = hosts_8_to_12();
  d.gray["p_http"] = {0.2, 0.4};
  d.ttp["p_aggr"] = {0.1, 0.3};
  d.reward["c_action"] = {-0.05, -0.01};
  d.variant_mix = {0.5, 0.5};
  std::size_t deceptive = 0;
  for (std::uint64_t s = 0; s < 500; ++s) {
    const auto c = sample_env(d, s);
    EXPECT_EQ(c, sample_env(d, s));
    EXPECT_GE(c.gray.p_http, 0.2);
    EXPECT_LE(c.gray.p_http, 0.4);
    EXPECT_GE(c.red.p_aggr, 0.1);
    EXPECT_LE(c.red.p_aggr, 0.3);
    EXPECT_GE(c.reward.c_action, -0.05);
    EXPECT_LE(c.reward.c_action, -0.01);
    deceptive += c.variant == RedVariant::deceptive;
  }
  // Binomial(500, 0.5): 4 sigma is about 45.
  EXPECT_NEAR(static_cast<double>(deceptive), 250.0, 45.0);
}

TEST(SampleEnv, DiscreteProgramIsNormalized) {
  auto d = hosts_8_to_12();
  d.variant_mix = {0.3, 0.7};
  double total = 0.0;
  const auto traces = genprog::enumerate_traces(d.discrete_program(), 8);
  EXPECT_EQ(traces.size(), 10u);
  for (const auto& t : traces) total += t.weight;
  EXPECT_NEAR(total, 1.0, 1e-9);
}

TEST(SampleEnv, InvalidDistributions) {
  auto d = hosts_8_to_12();
  d.host_counts.push_back(1);
  EXPECT_THROW(sample_env(d, 0), ConfigError);
  d = hosts_8_to_12();
  d.host_counts.push_back(9);
  EXPECT_THROW(d.validate(), ConfigError);
  d = hosts_8_to_12();
  d.gray["p_http"] = {0.5, 1.5};
  EXPECT_THROW(d.validate(), ConfigError);
  d = hosts_8_to_12();
  d.ttp["p_find"] = {0.7, 0.2};
  EXPECT_THROW(d.validate(), ConfigError);
  d = hosts_8_to_12();
  d.variant_mix = {0.6, 0.6};
  EXPECT_THROW(d.validate(), ConfigError);
  d = hosts_8_to_12();
  d.reward["r_isolate_red"] = {0.5, 1.2};
  EXPECT_THROW(d.validate(), ConfigError);
  d = hosts_8_to_12();
  d.gray["p_bogus"] = {0.1, 0.2};
  EXPECT_THROW(d.validate(), ConfigError);
}

TEST(Advance, PromotesWhenTrailingMeanMeetsThreshold) {
  const auto c = three_stages(0.5, 100.0);
  EXPECT_EQ(advance(c, std::vector<double>(100, 0.6)), 1u);
}

TEST(Advance, ShortHistoryStaysAtFirstStage) {
  const auto c = three_stages(0.5, 0.5);
  EXPECT_EQ(advance(c, std::vector<double>(99, 1.0)), 0u);
  EXPECT_EQ(advance(c, {}), 0u);
}

TEST(Advance, AllThresholdsMetReachesFinalStage) {
  const auto c = three_stages(0.5, 0.5);
  EXPECT_EQ(advance(c, std::vector<double>(200, 1.0)), 2u);
  EXPECT_EQ(advance(c, std::vector<double>(5000, 1.0)), 2u);
}

TEST(Advance, NeverSkipsStages) {
  // One stage per episode at most: a window of 100 needs 100 fresh returns per stage.
  const auto c = three_stages(0.5, 0.5);
  EXPECT_EQ(advance(c, std::vector<double>(150, 1.0)), 1u);
}

TEST(Advance, EmptyCurriculumIsConfigError) { EXPECT_THROW(advance(Curriculum{}, {1.0}), ConfigError); }

TEST(Advance, MatchesBruteForceReplay) {
  // Oracle: recompute each stage's trailing window from scratch at every episode.
  auto brute = [](const Curriculum& c, const std::vector<double>& h) {
    std::size_t stage = 0, start = 0;
    for (std::size_t i = 0; i < h.size() && stage + 1 < c.stages.size(); ++i) {
      if (i + 1 - start < c.window) continue;
      double sum = 0.0;
      for (std::size_t j = i + 1 - c.window; j <= i; ++j) sum += h[j];
      if (sum / static_cast<double>(c.window) >= c.stages[stage].threshold) {
        ++stage;
        start = i + 1;
      }
    }
    return stage;
  };
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const auto c = three_stages(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), 1 + rng.below(20));
    std::vector<double> h;
    for (std::size_t i = 0, n = rng.below(200); i < n; ++i) h.push_back(rng.uniform(-1.0, 1.0));
    EXPECT_EQ(advance(c, h), brute(c, h));
  }
}

TEST(Advance, MonotoneAsHistoryImproves) {
  const auto c = three_stages(0.2, 0.4, 10);
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> h;
    for (int i = 0; i < 80; ++i) h.push_back(rng.uniform(-1.0, 1.0));
    auto better = h;
    for (auto& x : better) x = std::min(1.0, x + 0.3);
    EXPECT_LE(advance(c, h), advance(c, better));
  }
}

TEST(EnvFactory, CurriculumUsesTheCurrentStage) {
  Curriculum c;
  c.window = 2;
  EnvironmentDistribution small, large;
  small.host_counts = {4};
  large.host_counts = {12};
  c.stages = {{small, 0.5}, {large, 0.0}};
  const auto f = EnvFactory::from_curriculum(c);
  EXPECT_EQ(f.max_hosts, 12u);
  EXPECT_EQ(f.next(1, {}).network.hosts, 4u);
  EXPECT_EQ(f.next(1, {1.0, 1.0}).network.hosts, 12u);
  EXPECT_EQ(f.stage({1.0, 1.0}), 1u);
}
