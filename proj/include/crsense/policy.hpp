#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "crsense/assignment.hpp"
#include "crsense/environment.hpp"
#include "crsense/fusion.hpp"
#include "crsense/learning.hpp"
#include "crsense/matrix.hpp"
#include "crsense/rng.hpp"
#include "crsense/scenario.hpp"

// The fusion center's decision layer: epsilon-greedy phase choice, random
// exploration (fixed-diversity sensing, counting-rule fusion, random access)
// and exploitation (greedy band search with iterated sensing assignment,
// randomized threshold designs at the detection target, and max-weight access
// grants balancing rate against fairness).

namespace crsense {

struct PolicyParams {
  double epsilon = 0.1;            // exploration probability
  int diversity = 2;               // SUs per band during exploration
  double theta = 1.0;              // rate exponent in access weights
  double nu = 0.0;                 // fairness exponent in access weights
  double target_detection = 0.9;   // fused detection target, 1 - omega
  bool deny_exploration_access = false;

  static PolicyParams for_scenario(const Scenario& s) {
    PolicyParams p;
    p.target_detection = 1.0 - s.collision_limit;
    return p;
  }

  void validate() const {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
      throw std::invalid_argument("policy: epsilon must lie in [0,1]");
    }
    if (diversity < 1) {
      throw std::invalid_argument("policy: diversity must be >= 1");
    }
    if (!(theta >= 0.0) || !(nu >= 0.0)) {
      throw std::invalid_argument("policy: theta and nu must be >= 0");
    }
    if (!(target_detection > 0.0 && target_detection < 1.0)) {
      throw std::invalid_argument("policy: target detection must lie in (0,1)");
    }
  }
};

enum class Phase { explore, exploit };

inline Phase choose_phase(const PolicyParams& params, RandomStream& exploration_rng) {
  return exploration_rng.uniform() < params.epsilon ? Phase::explore
                                                    : Phase::exploit;
}

namespace detail {

inline double pow_fast(double x, double e) {
  if (e == 0.0) return 1.0;
  if (e == 1.0) return x;
  return std::pow(x, e);
}

}  // namespace detail

// Rate/fairness weight of granting SU i access to band k.
inline double access_weight(const LearnerState& state, const PolicyParams& params,
                            int su, int band) {
  return detail::pow_fast(state.q_acc.at(su, band), params.theta) /
         state.fairness_divisor(su, params.nu);
}

// Uniform sensing plan for exploration: floor(N / D) bands drawn without
// replacement (capped at K), D shuffled SUs on each, leftovers round-robin
// over the drawn bands.
inline SensingPlan explore_sensing(const PolicyParams& params,
                                   const Scenario& scenario, RandomStream& rng) {
  const int n = scenario.num_sus;
  const int k = scenario.num_bands;
  const int d = params.diversity;
  if (d > n) {
    throw std::invalid_argument("explore_sensing: diversity exceeds SU count");
  }
  const int num_bands = std::min(k, n / d);

  std::vector<int> bands(k);
  std::iota(bands.begin(), bands.end(), 0);
  // Partial Fisher-Yates: the first num_bands entries are a uniform draw
  // without replacement.
  for (int i = 0; i < num_bands; ++i) {
    const int j = i + static_cast<int>(rng.below(k - i));
    std::swap(bands[i], bands[j]);
  }
  bands.resize(num_bands);

  std::vector<int> sus(n);
  std::iota(sus.begin(), sus.end(), 0);
  rng.shuffle(sus);

  SensingPlan plan;
  plan.assignment.assign(n, k, 0.0);
  int next = 0;
  for (int b = 0; b < num_bands; ++b) {
    for (int j = 0; j < d; ++j) {
      plan.assignment.at(sus[next++], bands[b]) = 1.0;
    }
  }
  for (int b = 0; next < n; b = (b + 1) % num_bands) {
    plan.assignment.at(sus[next++], bands[b]) = 1.0;
  }
  std::sort(bands.begin(), bands.end());
  plan.sensed_bands = std::move(bands);
  return plan;
}

// Counting-rule fusion for exploration. Learned detection estimates are not
// consulted: each band uses the surrogate beta' = (1 + alpha') / 2, the mean
// of a uniform variable on [alpha', 1].
inline void explore_fusion(const SensingPlan& plan, const Matrix& local_decisions,
                           const Scenario& scenario,
                           std::vector<std::int8_t>& global_out) {
  global_out.assign(scenario.num_bands, -1);
  for (int band : plan.sensed_bands) {
    int votes = 0;
    int present = 0;
    double alpha_sum = 0.0;
    for (int i = 0; i < scenario.num_sus; ++i) {
      if (plan.assignment.at(i, band) == 0.0) continue;
      ++present;
      alpha_sum += scenario.local_alpha.at(i, band);
      if (local_decisions.at(i, band) != 0.0) ++votes;
    }
    const double alpha_p = alpha_sum / present;
    const double beta_p = 0.5 * (1.0 + alpha_p);
    const int m = fusion::majority_threshold(present, alpha_p, beta_p);
    global_out[band] = votes >= m ? 1 : 0;
  }
}

// Uniformly random injective map from SUs onto the idle bands; every idle
// band receives exactly one SU whenever enough SUs exist.
inline AccessGrant explore_access(const std::vector<int>& idle_bands, int num_sus,
                                  RandomStream& rng) {
  AccessGrant grant;
  if (idle_bands.empty()) return grant;
  const int m = std::min<int>(num_sus, static_cast<int>(idle_bands.size()));

  std::vector<int> sus(num_sus);
  std::iota(sus.begin(), sus.end(), 0);
  rng.shuffle(sus);

  std::vector<int> bands = idle_bands;
  if (m < static_cast<int>(bands.size())) rng.shuffle(bands);

  for (int j = 0; j < m; ++j) grant.grants.emplace_back(sus[j], bands[j]);
  std::sort(grant.grants.begin(), grant.grants.end());
  return grant;
}

// Greedy band attractiveness: estimated idle probability times the summed
// rate/fairness weights, minus the summed detection-estimate margins.
inline double band_score(const LearnerState& state, const Scenario& scenario,
                         const PolicyParams& params, int band) {
  double rate_sum = 0.0;
  double margin_sum = 0.0;
  for (int i = 0; i < scenario.num_sus; ++i) {
    rate_sum += access_weight(state, params, i, band);
    margin_sum += state.q_sen.at(i, band) - scenario.local_alpha.at(i, band);
  }
  return state.q_idle[band] * rate_sum - margin_sum;
}

// A fully evaluated sensing candidate: the plan, the per-band threshold
// designs built from the learned detection estimates, and its score.
struct ExploitChoice {
  SensingPlan plan;
  std::vector<fusion::BandFusion> fusions;
  double score = 0.0;
};

namespace detail {

// Detection estimates clamped into (alpha, 1) before they parameterize a
// threshold design, which requires beta > alpha.
inline double clamped_detection_estimate(const LearnerState& state,
                                         const Scenario& scenario, int su, int band) {
  const double lo = scenario.local_alpha.at(su, band) + 1e-6;
  const double hi = 1.0 - 1e-6;
  return std::clamp(state.q_sen.at(su, band), lo, hi);
}

}  // namespace detail

// Greedy sensing search. For every candidate size V from min(N, K) down to 1:
// take the top-V bands by band_score, assign all SUs to them round by round
// (maximizing the score-weighted detection margins), build per-band threshold
// designs at the detection target, and score the candidate by its estimated
// discoverable rate. Returns the best-scoring candidate, ties favoring the
// larger V.
inline ExploitChoice exploit_sensing(const LearnerState& state,
                                     const Scenario& scenario,
                                     const PolicyParams& params) {
  const int n = scenario.num_sus;
  const int k = scenario.num_bands;
  const int v_max = std::min(n, k);

  std::vector<double> rate_sum(k, 0.0);
  for (int band = 0; band < k; ++band) {
    for (int i = 0; i < n; ++i) {
      rate_sum[band] += access_weight(state, params, i, band);
    }
  }
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return band_score(state, scenario, params, a) >
           band_score(state, scenario, params, b);
  });

  std::optional<ExploitChoice> best;
  for (int v = v_max; v >= 1; --v) {
    std::vector<int> bands(order.begin(), order.begin() + v);
    std::sort(bands.begin(), bands.end());

    Matrix values(n, v, 0.0);
    for (int c = 0; c < v; ++c) {
      const int band = bands[c];
      const double band_factor = state.q_idle[band] * rate_sum[band];
      for (int i = 0; i < n; ++i) {
        values.at(i, c) =
            (state.q_sen.at(i, band) - scenario.local_alpha.at(i, band)) *
            band_factor;
      }
    }
    const Matrix x = lap::iterated_sensing_assignment(values, scenario.capacity);

    ExploitChoice choice;
    choice.plan.sensed_bands = bands;
    choice.plan.assignment.assign(n, k, 0.0);
    double score = 0.0;
    for (int c = 0; c < v; ++c) {
      const int band = bands[c];
      fusion::BandFusion bf;
      bf.band = band;
      for (int i = 0; i < n; ++i) {
        if (x.at(i, c) == 0.0) continue;
        choice.plan.assignment.at(i, band) = 1.0;
        bf.sus.push_back(i);
        bf.profile.betas.push_back(
            detail::clamped_detection_estimate(state, scenario, i, band));
        bf.profile.alphas.push_back(scenario.local_alpha.at(i, band));
      }
      bf.design = fusion::randomized_cv_design(bf.profile, params.target_detection);
      score += state.q_idle[band] * (1.0 - bf.design.false_alarm) * rate_sum[band];
      choice.fusions.push_back(std::move(bf));
    }
    choice.score = score;

    if (!best || choice.score > best->score) best = std::move(choice);
  }
  return *best;
}

// Max-weight injective grant of idle bands to SUs; shared by the learned
// policy (estimated weights) and the genie (true rates).
inline AccessGrant max_weight_grant(const Matrix& weights,
                                    const std::vector<int>& idle_bands) {
  AccessGrant grant;
  if (idle_bands.empty()) return grant;
  Matrix costs(weights.rows, idle_bands.size());
  for (std::size_t i = 0; i < weights.rows; ++i) {
    for (std::size_t c = 0; c < idle_bands.size(); ++c) {
      costs.at(i, c) = -weights.at(i, idle_bands[c]);
    }
  }
  const lap::Assignment a = lap::solve(costs);
  for (const auto& [su, c] : a.pairs) {
    grant.grants.emplace_back(su, idle_bands[c]);
  }
  return grant;
}

// Access grants maximizing the summed rate/fairness weights over the bands
// declared idle this slot.
inline AccessGrant exploit_access(const LearnerState& state,
                                  const std::vector<int>& idle_bands,
                                  const PolicyParams& params) {
  if (idle_bands.empty()) return {};
  Matrix weights(state.q_acc.rows, state.q_acc.cols, 0.0);
  for (std::size_t i = 0; i < weights.rows; ++i) {
    for (int band : idle_bands) {
      weights.at(i, band) = access_weight(state, params, static_cast<int>(i), band);
    }
  }
  return max_weight_grant(weights, idle_bands);
}

}  // namespace crsense
