#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "crsense/environment.hpp"
#include "crsense/fusion.hpp"
#include "crsense/matrix.hpp"
#include "crsense/policy.hpp"
#include "crsense/scenario.hpp"

// Genie-aided evaluation: the exact expected sum rate of any sensing plan
// under the true scenario parameters, and the optimal plan by exhaustive
// search. The genie fuses with threshold designs built from the true
// detection probabilities at target 1 - omega, and grants discovered idle
// bands by max-weight matching on the true mean rates.

namespace crsense {

// Subset expansion over detected-idle outcomes covers 2^|sensed| terms.
inline constexpr std::size_t kSensedSetCap = 20;

// Exhaustive plan search size limit.
inline constexpr std::uint64_t kPlanSearchCap = 1'000'000;

struct PolicyValue {
  SensingPlan plan;
  double expected_rate = 0.0;
  std::vector<double> per_band_psi;          // declared-idle probability; 0 if unsensed
  std::vector<fusion::BandFusion> fusions;   // designs from the true betas
};

// Probability that a sensed band is declared idle: the idle state surviving
// the false alarm, plus the occupied state slipping through as a missed
// detection (1 - target = omega).
inline double psi(const Scenario& scenario, int band, double fused_false_alarm) {
  const double p = scenario.idle_prob[band];
  return (1.0 - fused_false_alarm) * p + scenario.collision_limit * (1.0 - p);
}

// Expected sum rate conditioned on a concrete declared-idle set: the bands
// are granted by max-weight matching on the true mean rates, and each granted
// rate is weighted by the posterior probability that its band really is idle.
inline double expected_rate_given_idle_set(
    const Scenario& scenario, const std::vector<int>& idle_bands,
    const std::vector<double>& false_alarm_by_band) {
  if (idle_bands.empty()) return 0.0;
  const AccessGrant grant = max_weight_grant(scenario.mean_rate, idle_bands);
  double total = 0.0;
  for (const auto& [su, band] : grant.grants) {
    const double p = scenario.idle_prob[band];
    const double detected_idle = (1.0 - false_alarm_by_band[band]) * p;
    const double declared = detected_idle + scenario.collision_limit * (1.0 - p);
    total += scenario.mean_rate.at(su, band) * detected_idle / declared;
  }
  return total;
}

// Exact expected sum rate of a sensing plan: per-band threshold designs from
// the true detection probabilities, then the total over every possible
// declared-idle subset weighted by its probability.
inline PolicyValue policy_value(const Scenario& scenario, const SensingPlan& plan) {
  const std::size_t m = plan.sensed_bands.size();
  if (m > kSensedSetCap) {
    throw std::length_error("policy_value: sensed set size " + std::to_string(m) +
                            " exceeds cap " + std::to_string(kSensedSetCap));
  }

  PolicyValue value;
  value.plan = plan;
  value.per_band_psi.assign(scenario.num_bands, 0.0);

  std::vector<double> false_alarm(scenario.num_bands, 0.0);
  std::vector<double> declared(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    const int band = plan.sensed_bands[j];
    fusion::BandFusion bf;
    bf.band = band;
    for (int i = 0; i < scenario.num_sus; ++i) {
      if (plan.assignment.at(i, band) == 0.0) continue;
      bf.sus.push_back(i);
      bf.profile.betas.push_back(scenario.local_beta.at(i, band));
      bf.profile.alphas.push_back(scenario.local_alpha.at(i, band));
    }
    if (bf.sus.empty()) {
      throw std::invalid_argument("policy_value: sensed band " +
                                  std::to_string(band + 1) + " has no SU assigned");
    }
    bf.design = fusion::randomized_cv_design(bf.profile,
                                             1.0 - scenario.collision_limit);
    false_alarm[band] = bf.design.false_alarm;
    value.per_band_psi[band] = psi(scenario, band, false_alarm[band]);
    declared[j] = value.per_band_psi[band];
    value.fusions.push_back(std::move(bf));
  }

  double total = 0.0;
  std::vector<int> idle_bands;
  for (std::uint32_t mask = 0; mask < (std::uint32_t{1} << m); ++mask) {
    idle_bands.clear();
    double weight = 1.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (mask & (std::uint32_t{1} << j)) {
        idle_bands.push_back(plan.sensed_bands[j]);
        weight *= declared[j];
      } else {
        weight *= 1.0 - declared[j];
      }
    }
    if (idle_bands.empty() || weight == 0.0) continue;
    total += weight * expected_rate_given_idle_set(scenario, idle_bands, false_alarm);
  }
  value.expected_rate = total;
  return value;
}

namespace detail {

// All band subsets an SU may sense, sizes 0..capacity, as ascending bitmasks.
inline std::vector<std::uint32_t> su_choice_masks(int num_bands, int capacity) {
  std::vector<std::uint32_t> masks;
  for (std::uint32_t mask = 0; mask < (std::uint32_t{1} << num_bands); ++mask) {
    if (std::popcount(mask) <= capacity) masks.push_back(mask);
  }
  return masks;
}

}  // namespace detail

// Exhaustive search over all feasible sensing assignments (every SU senses
// any subset of at most `capacity` bands, possibly none). Ties keep the
// first, i.e. lexicographically smallest, assignment in enumeration order.
inline PolicyValue optimal_policy(const Scenario& scenario) {
  const int n = scenario.num_sus;
  const int k = scenario.num_bands;
  if (k > 30) {
    throw std::length_error("optimal_policy: too many bands for exhaustive search");
  }
  const std::vector<std::uint32_t> choices =
      detail::su_choice_masks(k, scenario.capacity);

  std::uint64_t count = 1;
  for (int i = 0; i < n; ++i) {
    count *= choices.size();
    if (count > kPlanSearchCap) {
      throw std::length_error("optimal_policy: search space exceeds cap of " +
                              std::to_string(kPlanSearchCap) + " candidates");
    }
  }

  std::vector<std::size_t> pick(n, 0);
  PolicyValue best;
  bool have_best = false;

  for (;;) {
    SensingPlan plan;
    plan.assignment.assign(n, k, 0.0);
    std::uint32_t sensed_mask = 0;
    for (int i = 0; i < n; ++i) {
      const std::uint32_t mask = choices[pick[i]];
      sensed_mask |= mask;
      for (int band = 0; band < k; ++band) {
        if (mask & (std::uint32_t{1} << band)) plan.assignment.at(i, band) = 1.0;
      }
    }
    for (int band = 0; band < k; ++band) {
      if (sensed_mask & (std::uint32_t{1} << band)) plan.sensed_bands.push_back(band);
    }

    PolicyValue candidate = policy_value(scenario, plan);
    if (!have_best || candidate.expected_rate > best.expected_rate) {
      best = std::move(candidate);
      have_best = true;
    }

    int i = n - 1;
    while (i >= 0 && pick[i] + 1 == choices.size()) {
      pick[i] = 0;
      --i;
    }
    if (i < 0) break;
    ++pick[i];
  }
  return best;
}

}  // namespace crsense
