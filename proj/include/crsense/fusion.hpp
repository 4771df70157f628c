#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

// Hard-decision fusion of cooperating detectors: the weighted-vote
// log-likelihood statistic, its exact discrete law under both hypotheses,
// randomized threshold designs that hit a detection-probability target
// exactly (randomized Chair-Varshney rule), and the m-out-of-n counting rule
// used when detector qualities are unknown.

namespace crsense::fusion {

// Statistic values closer than this are treated as one atom of the discrete
// law (and as "equal to the threshold" when fusing).
inline constexpr double kMergeTolerance = 1e-9;

// Exhaustive enumeration is 2^D decision vectors.
inline constexpr std::size_t kEnumerationCap = 20;

// Operating points of the detectors taking part in one fused decision.
// betas[i] = P(u_i = 1 | band occupied), alphas[i] = P(u_i = 1 | band idle).
struct DetectorProfile {
  std::vector<double> betas;
  std::vector<double> alphas;

  std::size_t size() const { return betas.size(); }

  void validate() const {
    if (betas.empty()) {
      throw std::invalid_argument("detector profile: no detectors");
    }
    if (betas.size() != alphas.size()) {
      throw std::invalid_argument("detector profile: beta/alpha length mismatch");
    }
    for (std::size_t i = 0; i < betas.size(); ++i) {
      const double b = betas[i], a = alphas[i];
      if (!(a > 0.0 && a < 1.0 && b > 0.0 && b < 1.0)) {
        throw std::invalid_argument(
            "detector profile: probabilities must lie strictly in (0,1) at index " +
            std::to_string(i));
      }
      if (!(b > a)) {
        throw std::invalid_argument(
            "detector profile: requires beta > alpha at index " + std::to_string(i));
      }
    }
  }
};

// Local hard decisions, aligned with the profile order. 1 = "occupied".
using DecisionVector = std::vector<std::uint8_t>;

struct Atom {
  double value = 0.0;    // statistic value
  double prob_h1 = 0.0;  // mass under "occupied"
  double prob_h0 = 0.0;  // mass under "idle"
};

// Exact law of the fusion statistic; atoms ascending by value, masses under
// each hypothesis summing to one.
struct StatisticDistribution {
  std::vector<Atom> atoms;
};

// A tuned decision rule: declare "occupied" when the statistic exceeds
// `threshold`, declare it with probability `rand_prob` when the statistic
// equals the threshold atom. Detection probability equals `target_detection`
// by construction; `false_alarm` is the resulting false-alarm probability.
struct FusionDesign {
  double threshold = 0.0;
  double rand_prob = 0.0;
  double target_detection = 0.0;
  double false_alarm = 0.0;
};

// Per-detector vote weight; positive whenever beta > alpha.
inline double vote_weight(double beta, double alpha) {
  return std::log(beta * (1.0 - alpha) / (alpha * (1.0 - beta)));
}

// Per-detector additive offset, applied regardless of the vote.
inline double vote_offset(double beta, double alpha) {
  return std::log((1.0 - beta) / (1.0 - alpha));
}

// Weighted-vote log-likelihood-ratio statistic of a decision vector.
inline double lrt_statistic(const DecisionVector& u, const DetectorProfile& p) {
  p.validate();
  if (u.size() != p.size()) {
    throw std::invalid_argument("lrt_statistic: decision/profile length mismatch");
  }
  double t = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u[i]) t += vote_weight(p.betas[i], p.alphas[i]);
    t += vote_offset(p.betas[i], p.alphas[i]);
  }
  return t;
}

// Enumerates all 2^D decision vectors and accumulates the exact law of the
// statistic under both hypotheses. Atoms within kMergeTolerance collapse.
inline StatisticDistribution statistic_distribution(const DetectorProfile& p) {
  p.validate();
  const std::size_t d = p.size();
  if (d > kEnumerationCap) {
    throw std::length_error("statistic_distribution: profile size " +
                            std::to_string(d) + " exceeds enumeration cap " +
                            std::to_string(kEnumerationCap));
  }

  std::vector<double> weight(d), offset(d);
  double base = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    weight[i] = vote_weight(p.betas[i], p.alphas[i]);
    offset[i] = vote_offset(p.betas[i], p.alphas[i]);
    base += offset[i];
  }

  const std::size_t count = std::size_t{1} << d;
  std::vector<Atom> raw(count);
  for (std::size_t mask = 0; mask < count; ++mask) {
    double value = base;
    double p1 = 1.0, p0 = 1.0;
    for (std::size_t i = 0; i < d; ++i) {
      if (mask & (std::size_t{1} << i)) {
        value += weight[i];
        p1 *= p.betas[i];
        p0 *= p.alphas[i];
      } else {
        p1 *= 1.0 - p.betas[i];
        p0 *= 1.0 - p.alphas[i];
      }
    }
    raw[mask] = Atom{value, p1, p0};
  }

  std::sort(raw.begin(), raw.end(),
            [](const Atom& a, const Atom& b) { return a.value < b.value; });

  StatisticDistribution dist;
  for (const Atom& a : raw) {
    if (!dist.atoms.empty() &&
        a.value - dist.atoms.back().value <= kMergeTolerance) {
      dist.atoms.back().prob_h1 += a.prob_h1;
      dist.atoms.back().prob_h0 += a.prob_h0;
    } else {
      dist.atoms.push_back(a);
    }
  }
  return dist;
}

namespace detail {

struct ThresholdScan {
  std::size_t index = 0;      // threshold atom
  double above_h1 = 0.0;      // P(T > threshold | occupied)
  double above_h0 = 0.0;      // P(T > threshold | idle)
};

// Smallest atom value whose strictly-above mass under the occupied hypothesis
// does not exceed the target. Always exists since the top atom has zero mass
// above it.
inline ThresholdScan scan_threshold(const StatisticDistribution& dist,
                                    double target_detection) {
  const std::size_t m = dist.atoms.size();
  std::vector<double> above1(m), above0(m);
  double s1 = 0.0, s0 = 0.0;
  for (std::size_t j = m; j-- > 0;) {
    above1[j] = s1;
    above0[j] = s0;
    s1 += dist.atoms[j].prob_h1;
    s0 += dist.atoms[j].prob_h0;
  }
  for (std::size_t j = 0; j < m; ++j) {
    if (above1[j] <= target_detection) {
      return ThresholdScan{j, above1[j], above0[j]};
    }
  }
  return ThresholdScan{m - 1, above1[m - 1], above0[m - 1]};  // unreachable
}

inline void check_target(double target_detection) {
  if (!(target_detection > 0.0 && target_detection < 1.0)) {
    throw std::invalid_argument("target detection probability must lie in (0,1)");
  }
}

}  // namespace detail

// Threshold-and-randomization design meeting the detection target exactly:
// the threshold is the smallest statistic value for which the strictly-above
// detection mass drops to or below the target, and the randomization
// probability spends the remaining mass on the threshold atom.
inline FusionDesign randomized_cv_design(const DetectorProfile& p,
                                         double target_detection) {
  detail::check_target(target_detection);
  const StatisticDistribution dist = statistic_distribution(p);
  const auto scan = detail::scan_threshold(dist, target_detection);
  const Atom& at = dist.atoms[scan.index];

  double rho = (target_detection - scan.above_h1) / at.prob_h1;
  rho = std::clamp(rho, 0.0, 1.0);

  FusionDesign design;
  design.threshold = at.value;
  design.rand_prob = rho;
  design.target_detection = target_detection;
  design.false_alarm = std::clamp(scan.above_h0 + rho * at.prob_h0, 0.0, 1.0);
  return design;
}

// False-alarm probability of the non-randomized variant: same threshold atom
// but deciding "occupied" on it with probability one. Never smaller than the
// randomized design's false alarm.
inline double nonrandomized_false_alarm(const DetectorProfile& p,
                                        double target_detection) {
  detail::check_target(target_detection);
  const StatisticDistribution dist = statistic_distribution(p);
  const auto scan = detail::scan_threshold(dist, target_detection);
  return std::clamp(scan.above_h0 + dist.atoms[scan.index].prob_h0, 0.0, 1.0);
}

// Applies a design to one decision vector. `coin` is a uniform [0,1) draw
// supplied by the caller; it only matters on the threshold atom.
inline int fuse(const DecisionVector& u, const FusionDesign& design,
                const DetectorProfile& p, double coin) {
  const double t = lrt_statistic(u, p);
  if (t > design.threshold + kMergeTolerance) return 1;
  if (t >= design.threshold - kMergeTolerance) {
    return coin < design.rand_prob ? 1 : 0;
  }
  return 0;
}

// Error-minimizing vote count for n identical detectors under an even prior:
// ceil(n * log((1-a)/(1-b)) / log(b(1-a)/(a(1-b)))), clamped into [1, n].
inline int majority_threshold(int n, double alpha_p, double beta_p) {
  if (n < 1) throw std::invalid_argument("majority_threshold: need n >= 1");
  if (!(alpha_p > 0.0 && beta_p < 1.0 && beta_p > alpha_p)) {
    throw std::invalid_argument(
        "majority_threshold: requires 0 < alpha' < beta' < 1");
  }
  const double num =
      static_cast<double>(n) * std::log((1.0 - alpha_p) / (1.0 - beta_p));
  const double den = vote_weight(beta_p, alpha_p);
  const int m = static_cast<int>(std::ceil(num / den));
  return std::clamp(m, 1, n);
}

// Counting rule: declare "occupied" when at least m of the votes say so.
inline int m_out_of_n_fuse(const DecisionVector& u, int m) {
  if (m < 1 || static_cast<std::size_t>(m) > u.size()) {
    throw std::invalid_argument("m_out_of_n_fuse: m out of range");
  }
  int ones = 0;
  for (auto b : u) ones += b ? 1 : 0;
  return ones >= m ? 1 : 0;
}

// One band's deployed fusion: the reporting SUs, the operating points assumed
// for them, and the threshold design built from those operating points.
struct BandFusion {
  int band = -1;
  std::vector<int> sus;
  DetectorProfile profile;
  FusionDesign design;
};

}  // namespace crsense::fusion
