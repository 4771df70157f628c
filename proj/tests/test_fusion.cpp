#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "crsense/fusion.hpp"
#include "crsense/rng.hpp"

namespace fusion = crsense::fusion;
using crsense::RandomStream;
using fusion::DecisionVector;
using fusion::DetectorProfile;
using fusion::FusionDesign;
using fusion::StatisticDistribution;

namespace {

DetectorProfile two_detectors() {
  return DetectorProfile{{0.9, 0.8}, {0.1, 0.1}};
}

// Independent oracle for the statistic of one decision vector: evaluates the
// likelihood ratio directly from the joint vote probabilities, then takes the
// log.
double statistic_by_likelihood_ratio(const DecisionVector& u,
                                     const DetectorProfile& p) {
  double p1 = 1.0, p0 = 1.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    p1 *= u[i] ? p.betas[i] : 1.0 - p.betas[i];
    p0 *= u[i] ? p.alphas[i] : 1.0 - p.alphas[i];
  }
  return std::log(p1 / p0);
}

}  // namespace

TEST(LrtStatistic, AllZeroVectorLeavesOnlyOffsets) {
  const DetectorProfile p{{0.53, 0.93, 0.14}, {0.01, 0.01, 0.01}};
  double expected = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    expected += std::log((1.0 - p.betas[i]) / (1.0 - p.alphas[i]));
  }
  EXPECT_NEAR(fusion::lrt_statistic({0, 0, 0}, p), expected, 1e-12);
}

TEST(LrtStatistic, SingleDetectorVote) {
  const DetectorProfile p{{0.9}, {0.1}};
  // log(81) + log(1/9) = log 9
  EXPECT_NEAR(fusion::lrt_statistic({1}, p), std::log(9.0), 1e-12);
}

TEST(LrtStatistic, HandEvaluatedTwoDetectorCase) {
  // weight_1 = log 81, offsets log(1/9) + log(2/9); total = log 2.
  EXPECT_NEAR(fusion::lrt_statistic({1, 0}, two_detectors()), std::log(2.0), 1e-12);
}

TEST(LrtStatistic, MatchesLikelihoodRatioOracle) {
  const DetectorProfile p{{0.53, 0.93, 0.14, 0.7}, {0.01, 0.05, 0.02, 0.3}};
  for (unsigned mask = 0; mask < 16; ++mask) {
    DecisionVector u;
    for (int i = 0; i < 4; ++i) u.push_back((mask >> i) & 1u);
    EXPECT_NEAR(fusion::lrt_statistic(u, p), statistic_by_likelihood_ratio(u, p),
                1e-9);
  }
}

TEST(LrtStatistic, RejectsBadInput) {
  EXPECT_THROW(fusion::lrt_statistic({1}, two_detectors()), std::invalid_argument);
  EXPECT_THROW(fusion::lrt_statistic({1, 1}, DetectorProfile{{0.1, 0.8}, {0.2, 0.1}}),
               std::invalid_argument);
  EXPECT_THROW(fusion::lrt_statistic({1}, DetectorProfile{{1.0}, {0.1}}),
               std::invalid_argument);
}

TEST(StatisticDistribution, SingleDetector) {
  const auto dist = fusion::statistic_distribution(DetectorProfile{{0.9}, {0.1}});
  ASSERT_EQ(dist.atoms.size(), 2u);
  EXPECT_NEAR(dist.atoms[0].prob_h1, 0.1, 1e-12);
  EXPECT_NEAR(dist.atoms[1].prob_h1, 0.9, 1e-12);
  EXPECT_NEAR(dist.atoms[0].prob_h0, 0.9, 1e-12);
  EXPECT_NEAR(dist.atoms[1].prob_h0, 0.1, 1e-12);
  EXPECT_LT(dist.atoms[0].value, dist.atoms[1].value);
}

TEST(StatisticDistribution, TwoDetectorEnumeration) {
  const auto dist = fusion::statistic_distribution(two_detectors());
  ASSERT_EQ(dist.atoms.size(), 4u);
  const double h1[] = {0.02, 0.08, 0.18, 0.72};
  const double h0[] = {0.81, 0.09, 0.09, 0.01};
  for (int j = 0; j < 4; ++j) {
    EXPECT_NEAR(dist.atoms[j].prob_h1, h1[j], 1e-12);
    EXPECT_NEAR(dist.atoms[j].prob_h0, h0[j], 1e-12);
  }
}

TEST(StatisticDistribution, IdenticalDetectorsCollapseToBinomial) {
  const double b = 0.7, a = 0.2;
  const auto dist =
      fusion::statistic_distribution(DetectorProfile{{b, b, b}, {a, a, a}});
  ASSERT_EQ(dist.atoms.size(), 4u);  // vote counts 0..3
  const auto choose = [](int n, int j) {
    double c = 1.0;
    for (int i = 0; i < j; ++i) c = c * (n - i) / (i + 1);
    return c;
  };
  for (int j = 0; j < 4; ++j) {
    const double want1 = choose(3, j) * std::pow(b, j) * std::pow(1 - b, 3 - j);
    const double want0 = choose(3, j) * std::pow(a, j) * std::pow(1 - a, 3 - j);
    EXPECT_NEAR(dist.atoms[j].prob_h1, want1, 1e-12);
    EXPECT_NEAR(dist.atoms[j].prob_h0, want0, 1e-12);
  }
}

TEST(StatisticDistribution, EnumerationCap) {
  DetectorProfile p;
  p.betas.assign(21, 0.6);
  p.alphas.assign(21, 0.3);
  EXPECT_THROW(fusion::statistic_distribution(p), std::length_error);
}

TEST(RandomizedDesign, HandEvaluatedTwoDetectorTarget085) {
  const auto d = fusion::randomized_cv_design(two_detectors(), 0.85);
  EXPECT_NEAR(d.threshold, std::log(2.0), 1e-9);   // statistic of u = (1,0)
  EXPECT_NEAR(d.rand_prob, 13.0 / 18.0, 1e-12);
  EXPECT_NEAR(d.false_alarm, 0.075, 1e-12);
}

TEST(RandomizedDesign, SingleDetectorAtItsOwnOperatingPoint) {
  // A single 0.9-detector at target 0.9 reproduces its own operating point:
  // fires exactly when the vote is 1, so the false alarm is 0.1.
  const DetectorProfile p{{0.9}, {0.1}};
  const auto d = fusion::randomized_cv_design(p, 0.9);
  EXPECT_NEAR(d.false_alarm, 0.1, 1e-12);
  // Detection probability is met exactly.
  const auto dist = fusion::statistic_distribution(p);
  double det = 0.0;
  for (const auto& atom : dist.atoms) {
    if (atom.value > d.threshold + fusion::kMergeTolerance) det += atom.prob_h1;
    else if (atom.value >= d.threshold - fusion::kMergeTolerance)
      det += d.rand_prob * atom.prob_h1;
  }
  EXPECT_NEAR(det, 0.9, 1e-12);
  // The decision rule equals "declare occupied iff the vote is 1".
  for (double coin : {0.0, 0.3, 0.9999}) {
    EXPECT_EQ(fusion::fuse({1}, d, p, coin), 1);
    EXPECT_EQ(fusion::fuse({0}, d, p, coin), 0);
  }
}

TEST(RandomizedDesign, TargetEqualToAtomSuffixGivesZeroRandomization) {
  // Dyadic probabilities keep every mass and suffix sum exactly
  // representable, so "target equals an atom's strictly-above mass" is an
  // exact floating-point event. P(T > statistic of (1,0) | occupied) = 0.375.
  const DetectorProfile p{{0.75, 0.5}, {0.25, 0.25}};
  const auto d = fusion::randomized_cv_design(p, 0.375);
  EXPECT_NEAR(d.threshold, std::log(2.0), 1e-9);  // statistic of (1,0)
  EXPECT_EQ(d.rand_prob, 0.0);
  EXPECT_DOUBLE_EQ(d.false_alarm, 0.0625);  // P(T > threshold | idle)
}

TEST(RandomizedDesign, RejectsTargetOutsideOpenInterval) {
  EXPECT_THROW(fusion::randomized_cv_design(two_detectors(), 0.0),
               std::invalid_argument);
  EXPECT_THROW(fusion::randomized_cv_design(two_detectors(), 1.0),
               std::invalid_argument);
}

TEST(NonrandomizedFalseAlarm, DominatesRandomizedDesign) {
  const auto d = fusion::randomized_cv_design(two_detectors(), 0.85);
  const double fa = fusion::nonrandomized_false_alarm(two_detectors(), 0.85);
  EXPECT_NEAR(fa, 0.10, 1e-12);
  EXPECT_GE(fa, d.false_alarm);
}

TEST(NonrandomizedFalseAlarm, GapEqualsThresholdAtomMassTimesOneMinusRho) {
  // alpha_tilde - alpha_hat = (1 - rho) P(T = threshold | idle); with rho = 0
  // the gap is the full threshold-atom mass.
  const DetectorProfile p{{0.75, 0.5}, {0.25, 0.25}};
  const auto d = fusion::randomized_cv_design(p, 0.375);
  ASSERT_EQ(d.rand_prob, 0.0);
  const double fa = fusion::nonrandomized_false_alarm(p, 0.375);
  EXPECT_DOUBLE_EQ(fa - d.false_alarm, 0.1875);  // P(T = log 2 | idle)
}

TEST(Fuse, ThreeWayBranching) {
  const auto p = two_detectors();
  const auto d = fusion::randomized_cv_design(p, 0.85);  // threshold at (1,0)
  for (double coin : {0.0, 0.5, 0.9999}) {
    EXPECT_EQ(fusion::fuse({1, 1}, d, p, coin), 1);  // strictly above
    EXPECT_EQ(fusion::fuse({0, 0}, d, p, coin), 0);  // strictly below
  }
  EXPECT_EQ(fusion::fuse({1, 0}, d, p, 0.5), 1);  // 0.5 < 13/18
  EXPECT_EQ(fusion::fuse({1, 0}, d, p, 0.8), 0);  // 0.8 > 13/18
}

TEST(Fuse, EmpiricalRandomizationFrequencyMatchesRho) {
  const auto p = two_detectors();
  const auto d = fusion::randomized_cv_design(p, 0.85);
  RandomStream rng(20240601);
  const int trials = 100000;
  int ones = 0;
  for (int t = 0; t < trials; ++t) {
    ones += fusion::fuse({1, 0}, d, p, rng.uniform());
  }
  EXPECT_NEAR(static_cast<double>(ones) / trials, 13.0 / 18.0, 0.01);
}

TEST(MajorityThreshold, KnownCases) {
  EXPECT_EQ(fusion::majority_threshold(2, 0.01, 0.505), 1);  // OR rule
  EXPECT_EQ(fusion::majority_threshold(4, 0.1, 0.55), 2);
  EXPECT_EQ(fusion::majority_threshold(1, 0.2, 0.9), 1);
  EXPECT_THROW(fusion::majority_threshold(3, 0.5, 0.4), std::invalid_argument);
}

TEST(MajorityThreshold, MinimizesFusedErrorOverGrid) {
  // Brute-force oracle: P(false alarm) + P(miss) of the m-out-of-n rule with
  // identical detectors and an even prior, enumerated over binomial masses.
  const auto fused_error = [](int n, int m, double a, double b) {
    const auto tail = [n](double p, int from) {
      double total = 0.0;
      for (int j = from; j <= n; ++j) {
        double c = 1.0;
        for (int i = 0; i < j; ++i) c = c * (n - i) / (i + 1);
        total += c * std::pow(p, j) * std::pow(1.0 - p, n - j);
      }
      return total;
    };
    return tail(a, m) + (1.0 - tail(b, m));
  };
  for (int n = 1; n <= 8; ++n) {
    for (double a : {0.01, 0.05, 0.1, 0.2, 0.3, 0.4}) {
      for (double b : {0.5, 0.6, 0.7, 0.8, 0.9, 0.99}) {
        const int m = fusion::majority_threshold(n, a, b);
        double best = 1e9;
        for (int cand = 1; cand <= n; ++cand) {
          best = std::min(best, fused_error(n, cand, a, b));
        }
        EXPECT_LE(fused_error(n, m, a, b), best + 1e-12)
            << "n=" << n << " a=" << a << " b=" << b;
      }
    }
  }
}

TEST(MOutOfNFuse, CountingRule) {
  EXPECT_EQ(fusion::m_out_of_n_fuse({1, 0}, 1), 1);
  EXPECT_EQ(fusion::m_out_of_n_fuse({1, 0, 1}, 3), 0);
  EXPECT_EQ(fusion::m_out_of_n_fuse({1, 1, 0, 0}, 2), 1);
  EXPECT_THROW(fusion::m_out_of_n_fuse({1, 0}, 3), std::invalid_argument);
  EXPECT_THROW(fusion::m_out_of_n_fuse({1, 0}, 0), std::invalid_argument);
}

// Property suite over random profiles: exact detection, rho in [0,1],
// randomized false alarm never above the non-randomized one, both marginals
// normalized, and positive vote weights.
TEST(FusionProperties, RandomProfiles) {
  RandomStream rng(987654321);
  for (int trial = 0; trial < 1000; ++trial) {
    const int d = 1 + static_cast<int>(rng.below(6));
    DetectorProfile p;
    for (int i = 0; i < d; ++i) {
      const double a = 0.01 + 0.6 * rng.uniform();
      const double b = a + (0.999 - a) * (0.05 + 0.95 * rng.uniform());
      p.alphas.push_back(a);
      p.betas.push_back(b);
      EXPECT_GT(fusion::vote_weight(b, a), 0.0);
    }
    const double target = 0.01 + 0.98 * rng.uniform();

    const auto dist = fusion::statistic_distribution(p);
    double sum1 = 0.0, sum0 = 0.0;
    for (std::size_t j = 0; j < dist.atoms.size(); ++j) {
      sum1 += dist.atoms[j].prob_h1;
      sum0 += dist.atoms[j].prob_h0;
      EXPECT_GE(dist.atoms[j].prob_h1, 0.0);
      EXPECT_GE(dist.atoms[j].prob_h0, 0.0);
      if (j > 0) {
        EXPECT_GT(dist.atoms[j].value,
                  dist.atoms[j - 1].value + fusion::kMergeTolerance);
      }
    }
    EXPECT_NEAR(sum1, 1.0, 1e-12);
    EXPECT_NEAR(sum0, 1.0, 1e-12);

    const auto design = fusion::randomized_cv_design(p, target);
    EXPECT_GE(design.rand_prob, 0.0);
    EXPECT_LE(design.rand_prob, 1.0);

    double detection = 0.0;
    for (const auto& atom : dist.atoms) {
      if (atom.value > design.threshold + fusion::kMergeTolerance) {
        detection += atom.prob_h1;
      } else if (atom.value >= design.threshold - fusion::kMergeTolerance) {
        detection += design.rand_prob * atom.prob_h1;
      }
    }
    EXPECT_NEAR(detection, target, 1e-12);

    EXPECT_LE(design.false_alarm,
              fusion::nonrandomized_false_alarm(p, target) + 1e-15);
  }
}
