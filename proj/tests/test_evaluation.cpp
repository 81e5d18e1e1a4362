#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "limbrl/evaluation.hpp"
#include "limbrl/oracles.hpp"

using namespace limbrl;

namespace {

EpisodeRecord rec(const std::string& run, std::uint64_t seed, int episode, int length,
                  Algorithm a = Algorithm::PPO, KillSetting s = KillSetting::Kill0) {
  EpisodeRecord r;
  r.run_id = run;
  r.algorithm = a;
  r.setting = s;
  r.seed = seed;
  r.episode = episode;
  r.length = length;
  r.detected = true;
  return r;
}

WindowFn fixed(int w) {
  return [w](Algorithm) { return w; };
}

}  // namespace

TEST(Summarize, SingleSeedConstant) {
  const auto s = summarize({rec("a", 1, 0, 3), rec("a", 1, 1, 3), rec("a", 1, 2, 3)}, fixed(3));
  const auto& c = s.at({Algorithm::PPO, KillSetting::Kill0});
  EXPECT_EQ(c.mean, 3.0);
  EXPECT_EQ(c.sd, 0.0);
  EXPECT_EQ(c.n, 1);
}

TEST(Summarize, TwoSeedsSampleSd) {
  const auto s = summarize({rec("a", 1, 0, 1), rec("a", 1, 1, 1), rec("b", 2, 0, 3), rec("b", 2, 1, 3)}, fixed(2));
  const auto& c = s.at({Algorithm::PPO, KillSetting::Kill0});
  EXPECT_DOUBLE_EQ(c.mean, 2.0);
  EXPECT_DOUBLE_EQ(c.sd, std::sqrt(2.0));
  EXPECT_EQ(c.n, 2);
  EXPECT_EQ(c.episode_n, 4);
}

TEST(Summarize, WindowKeepsLastEpisodes) {
  const auto s = summarize({rec("a", 1, 0, 50), rec("a", 1, 1, 2), rec("a", 1, 2, 4)}, fixed(2));
  EXPECT_DOUBLE_EQ(s.at({Algorithm::PPO, KillSetting::Kill0}).mean, 3.0);
}

TEST(Summarize, WindowLargerThanRun) {
  const auto s = summarize({rec("a", 1, 0, 1), rec("a", 1, 1, 2), rec("a", 1, 2, 6)}, fixed(100));
  EXPECT_DOUBLE_EQ(s.at({Algorithm::PPO, KillSetting::Kill0}).mean, 3.0);
}

TEST(Summarize, MissingCellNamed) {
  try {
    summarize({rec("a", 1, 0, 1)}, fixed(5), {{Algorithm::AC, KillSetting::Kill1}});
    FAIL();
  } catch (const MissingData& e) {
    EXPECT_NE(std::string(e.what()).find("AC"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("Kill1"), std::string::npos);
  }
}

TEST(SummarizeProperty, PermutationInvariant) {
  std::mt19937_64 rng(1);
  std::vector<EpisodeRecord> recs;
  for (int seed = 0; seed < 6; ++seed)
    for (int e = 0; e < 40; ++e)
      recs.push_back(rec("r" + std::to_string(seed), seed, e, 1 + static_cast<int>(rng() % 30),
                         seed % 2 ? Algorithm::AC : Algorithm::PPO, KillSetting(seed % 3)));
  const auto base = summarize(recs, fixed(15));
  for (int k = 0; k < 10; ++k) {
    std::shuffle(recs.begin(), recs.end(), rng);
    const auto s = summarize(recs, fixed(15));
    for (const auto& [key, c] : base) {
      EXPECT_EQ(s.at(key).mean, c.mean);
      EXPECT_EQ(s.at(key).sd, c.sd);
      EXPECT_EQ(s.at(key).episode_lengths, c.episode_lengths);
    }
  }
}

TEST(TTest, IdenticalSamples) {
  const auto r = t_test({1, 2, 3}, {1, 2, 3});
  EXPECT_EQ(r.t, 0.0);
  EXPECT_DOUBLE_EQ(r.p, 1.0);
}

TEST(TTest, HandExample) {
  const auto r = t_test({1, 2, 3, 4}, {3, 4, 5, 6});
  EXPECT_NEAR(r.t, -2.19089, 1e-5);
  EXPECT_EQ(r.df, 6.0);
  EXPECT_NEAR(r.p, 0.07099, 1e-5);
  EXPECT_NEAR(r.p, oracle::t_two_sided_p(r.t, r.df), 1e-6);
}

TEST(TTest, DegenerateVariance) {
  const auto same = t_test({2, 2, 2}, {2, 2});
  EXPECT_EQ(same.t, 0.0);
  EXPECT_EQ(same.p, 1.0);
  EXPECT_TRUE(same.degenerate_variance);
  const auto apart = t_test({1, 1, 1}, {50, 50, 50});
  EXPECT_EQ(apart.p, 0.0);
  EXPECT_TRUE(std::isinf(apart.t) && apart.t < 0);
  EXPECT_TRUE(apart.degenerate_variance);
}

TEST(TTest, TooFewObservations) { EXPECT_THROW(t_test({1}, {1, 2}), InvalidInput); }

TEST(TTest, WelchMatchesHandFormula) {
  const std::vector<double> a{1, 2, 3, 4, 10}, b{3, 4, 5};
  const auto r = t_test(a, b, TTestKind::Welch);
  const double va = sample_sd(a) * sample_sd(a) / 5, vb = sample_sd(b) * sample_sd(b) / 3;
  EXPECT_NEAR(r.t, (4.0 - 4.0) / std::sqrt(va + vb), 1e-12);
  EXPECT_NEAR(r.df, (va + vb) * (va + vb) / (va * va / 4 + vb * vb / 2), 1e-12);
}

TEST(TTestProperty, Symmetric) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0, 1);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> a(2 + rng() % 20), b(2 + rng() % 20);
    for (auto& x : a) x = g(rng);
    for (auto& x : b) x = g(rng) + 0.5;
    const auto ab = t_test(a, b), ba = t_test(b, a);
    EXPECT_DOUBLE_EQ(ab.t, -ba.t);
    EXPECT_DOUBLE_EQ(ab.p, ba.p);
  }
}

TEST(TDistribution, MatchesQuadratureOracle) {
  for (int df = 2; df <= 60; ++df)
    for (double t : {0.0, 0.05, 0.3, 0.9, 1.7, 2.5, 4.0, 7.0})
      EXPECT_NEAR(student_t_two_sided_p(t, df), oracle::t_two_sided_p(t, df), 1e-6) << "df " << df << " t " << t;
}

TEST(IncompleteBeta, KnownValues) {
  EXPECT_DOUBLE_EQ(regularized_incomplete_beta(2, 3, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(regularized_incomplete_beta(2, 3, 1.0), 1.0);
  EXPECT_NEAR(regularized_incomplete_beta(1, 1, 0.37), 0.37, 1e-14);
  // I_x(2, 2) = 3x^2 - 2x^3
  EXPECT_NEAR(regularized_incomplete_beta(2, 2, 0.3), 3 * 0.09 - 2 * 0.027, 1e-14);
}

TEST(Holm, Examples) {
  EXPECT_EQ(holm_bonferroni({0.01, 0.04, 0.03}, 0.05), (std::vector<bool>{true, false, false}));
  EXPECT_EQ(holm_bonferroni({1, 1, 1}, 0.05), (std::vector<bool>{false, false, false}));
  EXPECT_EQ(holm_bonferroni({0.04}, 0.05), (std::vector<bool>{true}));
  EXPECT_THROW(holm_bonferroni({0.5, 1.5}, 0.05), InvalidInput);
}

TEST(HolmProperty, MonotoneAndSubsetOfUnadjusted) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 0.1);
  for (int k = 0; k < 500; ++k) {
    std::vector<double> p(1 + rng() % 10);
    for (auto& x : p) x = u(rng);
    const auto r = holm_bonferroni(p, 0.05);
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (r[i]) EXPECT_LE(p[i], 0.05);
      for (std::size_t j = 0; j < p.size(); ++j)
        if (p[i] <= p[j] && r[j]) EXPECT_TRUE(r[i]);
    }
  }
}

TEST(LearningCurve, TwoSeedsMeanAndSe) {
  const auto c = learning_curve({rec("a", 1, 0, 1), rec("a", 1, 1, 1), rec("b", 2, 0, 3), rec("b", 2, 1, 3)}, 2);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_DOUBLE_EQ(c[0].mean, 2.0);
  EXPECT_DOUBLE_EQ(c[0].se, 1.0);
  EXPECT_EQ(c[0].n, 2);
}

TEST(LearningCurve, ConstantLengthsZeroSe) {
  std::vector<EpisodeRecord> r;
  for (int s = 0; s < 4; ++s)
    for (int e = 0; e < 30; ++e) r.push_back(rec("r" + std::to_string(s), s, e, 7));
  for (const auto& p : learning_curve(r, 10)) EXPECT_EQ(p.se, 0.0);
}

TEST(LearningCurve, BinOneIsPerEpisodeMean) {
  const auto c = learning_curve({rec("a", 1, 0, 2), rec("a", 1, 1, 6), rec("b", 2, 0, 4), rec("b", 2, 1, 8)}, 1);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_DOUBLE_EQ(c[0].mean, 3.0);
  EXPECT_DOUBLE_EQ(c[1].mean, 7.0);
  EXPECT_THROW(learning_curve({}, 0), InvalidInput);
}

TEST(Algorithm, ParseRoundTrip) {
  for (auto a : {Algorithm::PPO, Algorithm::AC, Algorithm::BMMS, Algorithm::BMSS})
    EXPECT_EQ(parse_algorithm(to_string(a)), a);
  EXPECT_THROW(parse_algorithm("DQN"), ConfigError);
}
