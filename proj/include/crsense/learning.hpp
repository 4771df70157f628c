#pragma once

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "crsense/environment.hpp"
#include "crsense/matrix.hpp"
#include "crsense/scenario.hpp"

// The fusion center's learned estimates: per-(SU, band) detection
// probabilities and mean rates, per-band idle probabilities, and the per-SU
// fairness averages, all maintained by constant-step exponential smoothing.

namespace crsense {

struct LearnerConfig {
  double step_prob = 0.01;      // probability estimates (detection, idle)
  double step_rate = 0.1;       // rate estimates
  double step_fair = 0.1;       // fairness averages
  double fairness_floor = 1e-6; // floor applied when J_i is used as a divisor
};

// Constant-step exponential smoothing toward the reward.
inline double update_value(double q, double reward, double step) {
  return q + step * (reward - q);
}

struct LearnerState {
  Matrix q_sen;                  // N x K estimated detection probabilities
  Matrix q_acc;                  // N x K estimated mean achievable rates
  std::vector<double> q_idle;    // per-band estimated idle probabilities
  std::vector<double> fairness;  // per-SU weighted average obtained rate J_i
  LearnerConfig cfg;

  // Neutral starting point: even idle prior, zero rate knowledge, detection
  // prior equal to the exploration surrogate (1 + alpha) / 2.
  static LearnerState initial(const Scenario& s, LearnerConfig cfg = {}) {
    LearnerState state;
    state.cfg = cfg;
    state.q_sen.assign(s.num_sus, s.num_bands, 0.0);
    for (int i = 0; i < s.num_sus; ++i) {
      for (int k = 0; k < s.num_bands; ++k) {
        state.q_sen.at(i, k) = 0.5 * (1.0 + s.local_alpha.at(i, k));
      }
    }
    state.q_acc.assign(s.num_sus, s.num_bands, 0.0);
    state.q_idle.assign(s.num_bands, 0.5);
    state.fairness.assign(s.num_sus, 0.0);
    return state;
  }

  // J_i floored before use as a divisor; with exponent 0 the weight is 1.
  double fairness_divisor(int su, double nu) const {
    if (nu == 0.0) return 1.0;
    const double j = fairness[su] > cfg.fairness_floor ? fairness[su]
                                                       : cfg.fairness_floor;
    return std::pow(j, nu);
  }
};

// Rate estimates: each collision-free grant feeds back its achieved rate.
// Collided or ungranted pairs keep their values (the reward would equal the
// current estimate).
inline void apply_access_rewards(LearnerState& state, const SlotOutcome& outcome) {
  for (const auto& [su, band] : outcome.grants.grants) {
    if (outcome.collisions[band]) continue;
    state.q_acc.at(su, band) = update_value(
        state.q_acc.at(su, band), outcome.rates.at(su, band), state.cfg.step_rate);
  }
}

// Idle-probability estimates, updated only during exploration slots: reward 1
// when the band was declared idle and no collision occurred, reward 0 when it
// was declared occupied or a collision was observed.
inline void apply_idle_rewards(LearnerState& state, const SlotOutcome& outcome,
                               bool is_exploration) {
  if (!is_exploration) return;
  for (int band : outcome.plan.sensed_bands) {
    const bool occupied_or_collision =
        outcome.global_decisions[band] == 1 || outcome.collisions[band] != 0;
    const double reward = occupied_or_collision ? 0.0 : 1.0;
    state.q_idle[band] =
        update_value(state.q_idle[band], reward, state.cfg.step_prob);
  }
}

// Detection-probability estimates, updated only during exploration slots and
// only when the fused decision (or an observed collision) indicates the
// primary user was present; the reward is the SU's own local decision.
inline void apply_sensing_rewards(LearnerState& state, const SlotOutcome& outcome,
                                  bool is_exploration) {
  if (!is_exploration) return;
  for (int band : outcome.plan.sensed_bands) {
    const bool occupied_or_collision =
        outcome.global_decisions[band] == 1 || outcome.collisions[band] != 0;
    if (!occupied_or_collision) continue;
    for (std::size_t i = 0; i < outcome.plan.assignment.rows; ++i) {
      if (outcome.plan.assignment.at(i, band) == 0.0) continue;
      state.q_sen.at(i, band) =
          update_value(state.q_sen.at(i, band),
                       outcome.local_decisions.at(i, band), state.cfg.step_prob);
    }
  }
}

// Fairness averages: every SU is smoothed toward its achieved rate this slot,
// zero when it got no access or collided.
inline void update_fairness(LearnerState& state, const SlotOutcome& outcome) {
  const int n = static_cast<int>(state.fairness.size());
  for (int i = 0; i < n; ++i) {
    double achieved = 0.0;
    for (std::size_t k = 0; k < outcome.rates.cols; ++k) {
      achieved += outcome.rates.at(i, k);
    }
    state.fairness[i] = update_value(state.fairness[i], achieved, state.cfg.step_fair);
  }
}

// Snapshot in the same tabular text format as scenario files.
inline void save_learner_state(const LearnerState& state, std::ostream& out) {
  using detail::format_double;
  const std::size_t n = state.q_sen.rows;
  const std::size_t k = state.q_sen.cols;
  out << "sus = " << n << "\n";
  out << "bands = " << k << "\n";
  out << "step_prob = " << format_double(state.cfg.step_prob) << "\n";
  out << "step_rate = " << format_double(state.cfg.step_rate) << "\n";
  out << "step_fair = " << format_double(state.cfg.step_fair) << "\n";
  out << "fairness_floor = " << format_double(state.cfg.fairness_floor) << "\n";
  const auto write_matrix = [&](const char* name, const Matrix& m) {
    out << "\n[" << name << "]\n";
    for (std::size_t r = 0; r < m.rows; ++r) {
      for (std::size_t c = 0; c < m.cols; ++c) {
        if (c) out << ' ';
        out << format_double(m.at(r, c));
      }
      out << "\n";
    }
  };
  write_matrix("q_sen", state.q_sen);
  write_matrix("q_acc", state.q_acc);
  out << "\n[q_idle]\n";
  for (std::size_t i = 0; i < state.q_idle.size(); ++i) {
    if (i) out << ' ';
    out << format_double(state.q_idle[i]);
  }
  out << "\n\n[fairness]\n";
  for (std::size_t i = 0; i < state.fairness.size(); ++i) {
    if (i) out << ' ';
    out << format_double(state.fairness[i]);
  }
  out << "\n";
}

inline LearnerState load_learner_state(std::istream& in,
                                       const std::string& source = "<snapshot>") {
  const detail::TabularDoc doc = detail::parse_tabular(in, source);
  LearnerState state;
  const auto n = static_cast<std::size_t>(doc.scalar_long("sus"));
  const auto k = static_cast<std::size_t>(doc.scalar_long("bands"));
  state.cfg.step_prob = doc.scalar_double("step_prob");
  state.cfg.step_rate = doc.scalar_double("step_rate");
  state.cfg.step_fair = doc.scalar_double("step_fair");
  state.cfg.fairness_floor = doc.scalar_double("fairness_floor");
  state.q_sen = doc.section_matrix("q_sen", n, k);
  state.q_acc = doc.section_matrix("q_acc", n, k);
  state.q_idle = doc.section_row("q_idle", k);
  state.fairness = doc.section_row("fairness", n);
  return state;
}

}  // namespace crsense
