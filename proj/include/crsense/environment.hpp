#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "crsense/matrix.hpp"
#include "crsense/rng.hpp"
#include "crsense/scenario.hpp"

// Ground-truth world of one slot: primary-user occupancy, local detector
// outcomes, and the collision/rate resolution of access grants.

namespace crsense {

// Which bands are sensed this slot and by whom.
struct SensingPlan {
  std::vector<int> sensed_bands;  // ascending band indices
  Matrix assignment;              // N x K, 1.0 where SU i senses band k

  std::vector<int> sus_on_band(int band) const {
    std::vector<int> sus;
    for (std::size_t i = 0; i < assignment.rows; ++i) {
      if (assignment.at(i, band) != 0.0) sus.push_back(static_cast<int>(i));
    }
    return sus;
  }
};

// Access grants over bands declared idle this slot; at most one SU per band
// and one band per SU.
struct AccessGrant {
  std::vector<std::pair<int, int>> grants;  // (su, band)
};

// Full record of one slot.
struct SlotOutcome {
  SensingPlan plan;
  std::vector<std::uint8_t> true_idle;        // per band, 1 = idle
  Matrix local_decisions;                     // N x K, meaningful where sensed
  std::vector<std::int8_t> global_decisions;  // per band: 1/0, -1 = not sensed
  AccessGrant grants;
  std::vector<std::uint8_t> collisions;       // per band
  Matrix rates;                               // N x K achieved rates
  double sum_rate = 0.0;
  bool exploration = false;
};

// Independent per-band Bernoulli occupancy draws.
inline void sample_band_states(const Scenario& scenario, RandomStream& rng,
                               std::vector<std::uint8_t>& idle_out) {
  idle_out.resize(scenario.num_bands);
  for (int k = 0; k < scenario.num_bands; ++k) {
    idle_out[k] = rng.bernoulli(scenario.idle_prob[k]) ? 1 : 0;
  }
}

// Local hard decisions for every sensed (SU, band) pair: "occupied" with
// probability beta when the band is occupied, alpha when it is idle.
// Decisions are conditionally independent given the band states. Unsensed
// pairs are left untouched.
inline void sample_local_decisions(const Scenario& scenario,
                                   const SensingPlan& plan,
                                   const std::vector<std::uint8_t>& true_idle,
                                   RandomStream& rng, Matrix& decisions_out) {
  decisions_out.assign(scenario.num_sus, scenario.num_bands, 0.0);
  for (int i = 0; i < scenario.num_sus; ++i) {
    for (int k = 0; k < scenario.num_bands; ++k) {
      if (plan.assignment.at(i, k) == 0.0) continue;
      const double p_one =
          true_idle[k] ? scenario.local_alpha.at(i, k) : scenario.local_beta.at(i, k);
      decisions_out.at(i, k) = rng.bernoulli(p_one) ? 1.0 : 0.0;
    }
  }
}

// Resolves grants against the true band states: a grant on an idle band
// yields the scenario's mean rate (optionally scaled by multiplicative
// noise), a grant on an occupied band yields rate zero and a collision.
inline void resolve_access(const Scenario& scenario, const AccessGrant& grants,
                           const std::vector<std::uint8_t>& true_idle,
                           std::vector<std::uint8_t>& collisions_out,
                           Matrix& rates_out, double& sum_rate_out,
                           double rate_noise = 0.0,
                           RandomStream* noise_rng = nullptr) {
  collisions_out.assign(scenario.num_bands, 0);
  rates_out.assign(scenario.num_sus, scenario.num_bands, 0.0);
  sum_rate_out = 0.0;
  for (const auto& [su, band] : grants.grants) {
    if (true_idle[band]) {
      double rate = scenario.mean_rate.at(su, band);
      if (rate_noise > 0.0 && noise_rng != nullptr) {
        const double factor = 1.0 + rate_noise * (2.0 * noise_rng->uniform() - 1.0);
        rate *= factor > 0.0 ? factor : 0.0;
      }
      rates_out.at(su, band) = rate;
      sum_rate_out += rate;
    } else {
      collisions_out[band] = 1;
    }
  }
}

}  // namespace crsense
