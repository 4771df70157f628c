#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <future>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "crsense/environment.hpp"
#include "crsense/learning.hpp"
#include "crsense/matrix.hpp"
#include "crsense/oracle.hpp"
#include "crsense/policy.hpp"
#include "crsense/rng.hpp"
#include "crsense/scenario.hpp"

// Experiment driver: the slotted sensing/communication loop for one policy,
// Monte Carlo aggregation over repeated runs, and CSV/summary output.

namespace crsense {

enum class PolicyKind { learned, genie, random };

inline const char* policy_name(PolicyKind p) {
  switch (p) {
    case PolicyKind::learned: return "learned";
    case PolicyKind::genie: return "genie";
    case PolicyKind::random: return "random";
  }
  return "?";
}

struct RunConfig {
  std::string scenario_path;
  PolicyKind policy = PolicyKind::learned;
  std::int64_t horizon = 200000;
  int runs = 20;
  std::uint64_t seed = 1;
  double epsilon = 0.1;
  double step_prob = 0.01;
  double step_rate = 0.1;
  double step_fair = 0.1;
  int diversity = 2;
  double theta = 1.0;
  double nu = 0.0;
  std::optional<double> omega;          // overrides the scenario's limit
  std::int64_t window = 5000;           // collision-frequency window
  bool deny_exploration_access = false;
  double rate_noise = 0.0;              // multiplicative rate-noise hook, off by default
  std::string output_path;
  std::string initial_state_path;       // learner snapshot to resume from
  std::string final_state_path;         // where to save the final snapshot (runs = 1)

  void validate() const {
    if (horizon < 1) throw std::invalid_argument("config: horizon must be >= 1");
    if (runs < 1) throw std::invalid_argument("config: runs must be >= 1");
    if (window < 1) throw std::invalid_argument("config: window must be >= 1");
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
      throw std::invalid_argument("config: epsilon must lie in [0,1]");
    }
    if (!(rate_noise >= 0.0)) {
      throw std::invalid_argument("config: rate_noise must be >= 0");
    }
    if (omega && !(*omega > 0.0 && *omega < 1.0)) {
      throw std::invalid_argument("config: omega must lie in (0,1)");
    }
    if (!final_state_path.empty() && runs != 1) {
      throw std::invalid_argument(
          "config: saving the final learner state needs runs = 1");
    }
  }

  // The scenario actually simulated, with the omega override applied.
  Scenario effective_scenario(const Scenario& base) const {
    Scenario s = base;
    if (omega) s.collision_limit = *omega;
    return s;
  }

  PolicyParams policy_params(const Scenario& effective) const {
    PolicyParams p = PolicyParams::for_scenario(effective);
    p.epsilon = epsilon;
    p.diversity = diversity;
    p.theta = theta;
    p.nu = nu;
    p.deny_exploration_access = deny_exploration_access;
    return p;
  }

  LearnerConfig learner_config() const {
    LearnerConfig c;
    c.step_prob = step_prob;
    c.step_rate = step_rate;
    c.step_fair = step_fair;
    return c;
  }
};

// Per-slot series, averaged over runs. Collision frequencies are windowed:
// among the occupied slots inside the trailing window, the fraction that
// collided.
struct MetricsSeries {
  std::int64_t horizon = 0;
  int num_bands = 0;
  double baseline = 0.0;  // relative-rate denominator (genie value)
  std::vector<double> sum_rate;
  std::vector<double> relative_rate;
  std::vector<std::vector<double>> collision_freq;  // [band][slot]
  std::vector<double> explore_rate;
};

// Side telemetry for analysis; not part of the emitted series.
struct RunStats {
  std::int64_t slots = 0;
  std::int64_t explore_slots = 0;
  std::int64_t late_exploit_slots = 0;  // exploitation slots in the second half
  std::vector<std::int64_t> late_sensed_mask_counts;  // by sensed-set bitmask

  void merge(const RunStats& o) {
    slots += o.slots;
    explore_slots += o.explore_slots;
    late_exploit_slots += o.late_exploit_slots;
    if (late_sensed_mask_counts.size() < o.late_sensed_mask_counts.size()) {
      late_sensed_mask_counts.resize(o.late_sensed_mask_counts.size(), 0);
    }
    for (std::size_t i = 0; i < o.late_sensed_mask_counts.size(); ++i) {
      late_sensed_mask_counts[i] += o.late_sensed_mask_counts[i];
    }
  }
};

// Steady-state figures: means over the final 10% of the horizon.
struct Summary {
  std::int64_t horizon = 0;
  int num_bands = 0;
  double baseline = 0.0;
  double steady_sum_rate = 0.0;
  double steady_relative_rate = 0.0;
  double steady_explore_rate = 0.0;
  std::vector<double> steady_collision;  // per band
};

// One simulated trajectory. `baseline` scales the relative-rate series (0
// disables it). For the genie policy the fixed plan must be supplied. The
// learner starts from `initial_state` when given (checkpoint/resume), else
// from the neutral initialization; the final state can be captured through
// `final_state_out`.
inline MetricsSeries run_one(const RunConfig& config, const Scenario& scenario,
                             std::uint64_t run_seed, double baseline,
                             const PolicyValue* genie = nullptr,
                             RunStats* stats_out = nullptr,
                             const LearnerState* initial_state = nullptr,
                             LearnerState* final_state_out = nullptr) {
  config.validate();
  scenario.validate();
  const PolicyParams params = config.policy_params(scenario);
  params.validate();
  if (config.policy == PolicyKind::genie && genie == nullptr) {
    throw std::invalid_argument("run_one: genie policy needs the optimal plan");
  }

  const int n = scenario.num_sus;
  const int k = scenario.num_bands;
  const auto horizon = static_cast<std::size_t>(config.horizon);

  RngStreams rng(run_seed);
  LearnerState state = initial_state != nullptr
                           ? *initial_state
                           : LearnerState::initial(scenario, config.learner_config());

  MetricsSeries series;
  series.horizon = config.horizon;
  series.num_bands = k;
  series.baseline = baseline;
  series.sum_rate.assign(horizon, 0.0);
  series.relative_rate.assign(horizon, 0.0);
  series.explore_rate.assign(horizon, 0.0);

  // Raw per-slot occupancy / collision bits, turned into windowed
  // frequencies after the loop.
  std::vector<std::vector<std::uint8_t>> occupied(k),
      collided(k);
  for (int band = 0; band < k; ++band) {
    occupied[band].assign(horizon, 0);
    collided[band].assign(horizon, 0);
  }

  RunStats stats;
  stats.late_sensed_mask_counts.assign(std::size_t{1} << k, 0);

  SlotOutcome out;
  std::vector<int> idle_declared;
  fusion::DecisionVector votes;
  RandomStream* noise = config.rate_noise > 0.0 ? &rng.rate : nullptr;

  for (std::size_t t = 0; t < horizon; ++t) {
    sample_band_states(scenario, rng.occupancy, out.true_idle);

    bool explore = false;
    switch (config.policy) {
      case PolicyKind::learned:
        explore = choose_phase(params, rng.exploration) == Phase::explore;
        break;
      case PolicyKind::random:
        explore = true;
        break;
      case PolicyKind::genie:
        explore = false;
        break;
    }
    out.exploration = explore;

    const std::vector<fusion::BandFusion>* fusions = nullptr;
    ExploitChoice choice;
    if (config.policy == PolicyKind::genie) {
      out.plan = genie->plan;
      fusions = &genie->fusions;
    } else if (explore) {
      out.plan = explore_sensing(params, scenario, rng.exploration);
    } else {
      choice = exploit_sensing(state, scenario, params);
      out.plan = std::move(choice.plan);
      fusions = &choice.fusions;
    }

    sample_local_decisions(scenario, out.plan, out.true_idle, rng.local,
                           out.local_decisions);

    if (fusions != nullptr) {
      out.global_decisions.assign(k, -1);
      for (const fusion::BandFusion& bf : *fusions) {
        votes.clear();
        for (int su : bf.sus) {
          votes.push_back(out.local_decisions.at(su, bf.band) != 0.0 ? 1 : 0);
        }
        out.global_decisions[bf.band] =
            static_cast<std::int8_t>(fusion::fuse(votes, bf.design, bf.profile,
                                                  rng.coin.uniform()));
      }
    } else {
      explore_fusion(out.plan, out.local_decisions, scenario, out.global_decisions);
    }

    idle_declared.clear();
    for (int band : out.plan.sensed_bands) {
      if (out.global_decisions[band] == 0) idle_declared.push_back(band);
    }

    if (config.policy == PolicyKind::genie) {
      out.grants = max_weight_grant(scenario.mean_rate, idle_declared);
    } else if (explore) {
      out.grants = params.deny_exploration_access
                       ? AccessGrant{}
                       : explore_access(idle_declared, n, rng.access);
    } else {
      out.grants = exploit_access(state, idle_declared, params);
    }

    resolve_access(scenario, out.grants, out.true_idle, out.collisions, out.rates,
                   out.sum_rate, config.rate_noise, noise);

    if (config.policy != PolicyKind::genie) {
      apply_access_rewards(state, out);
      apply_idle_rewards(state, out, explore);
      apply_sensing_rewards(state, out, explore);
      update_fairness(state, out);
    }

    series.sum_rate[t] = out.sum_rate;
    series.explore_rate[t] = explore ? 1.0 : 0.0;
    for (int band = 0; band < k; ++band) {
      occupied[band][t] = out.true_idle[band] ? 0 : 1;
      collided[band][t] = out.collisions[band];
    }

    ++stats.slots;
    if (explore) ++stats.explore_slots;
    if (!explore && t >= horizon / 2) {
      ++stats.late_exploit_slots;
      std::uint32_t mask = 0;
      for (int band : out.plan.sensed_bands) mask |= std::uint32_t{1} << band;
      ++stats.late_sensed_mask_counts[mask];
    }
  }

  if (baseline > 0.0) {
    for (std::size_t t = 0; t < horizon; ++t) {
      series.relative_rate[t] = series.sum_rate[t] / baseline;
    }
  }

  series.collision_freq.assign(k, std::vector<double>(horizon, 0.0));
  const auto window = static_cast<std::size_t>(config.window);
  for (int band = 0; band < k; ++band) {
    std::int64_t occ = 0, coll = 0;
    for (std::size_t t = 0; t < horizon; ++t) {
      occ += occupied[band][t];
      coll += collided[band][t];
      if (t >= window) {
        occ -= occupied[band][t - window];
        coll -= collided[band][t - window];
      }
      series.collision_freq[band][t] =
          occ > 0 ? static_cast<double>(coll) / static_cast<double>(occ) : 0.0;
    }
  }

  if (stats_out != nullptr) *stats_out = stats;
  if (final_state_out != nullptr) *final_state_out = std::move(state);
  return series;
}

namespace detail {

inline void accumulate(MetricsSeries& acc, const MetricsSeries& one) {
  for (std::size_t t = 0; t < acc.sum_rate.size(); ++t) {
    acc.sum_rate[t] += one.sum_rate[t];
    acc.relative_rate[t] += one.relative_rate[t];
    acc.explore_rate[t] += one.explore_rate[t];
  }
  for (int band = 0; band < acc.num_bands; ++band) {
    for (std::size_t t = 0; t < acc.sum_rate.size(); ++t) {
      acc.collision_freq[band][t] += one.collision_freq[band][t];
    }
  }
}

}  // namespace detail

// Monte Carlo mean of run_one over `runs` child seeds. Runs execute in
// parallel but are reduced in run order, so the result does not depend on
// scheduling.
inline MetricsSeries run_monte_carlo(const RunConfig& config,
                                     const Scenario& scenario, double baseline,
                                     const PolicyValue* genie = nullptr,
                                     RunStats* stats_out = nullptr) {
  config.validate();

  std::optional<PolicyValue> local_genie;
  if (config.policy == PolicyKind::genie && genie == nullptr) {
    local_genie = optimal_policy(scenario);
    genie = &*local_genie;
  }

  std::optional<LearnerState> initial_state;
  if (!config.initial_state_path.empty()) {
    std::ifstream in(config.initial_state_path);
    if (!in) {
      throw std::runtime_error("cannot open learner snapshot: " +
                               config.initial_state_path);
    }
    initial_state = load_learner_state(in, config.initial_state_path);
  }

  MetricsSeries acc;
  acc.horizon = config.horizon;
  acc.num_bands = scenario.num_bands;
  acc.baseline = baseline;
  acc.sum_rate.assign(config.horizon, 0.0);
  acc.relative_rate.assign(config.horizon, 0.0);
  acc.explore_rate.assign(config.horizon, 0.0);
  acc.collision_freq.assign(scenario.num_bands,
                            std::vector<double>(config.horizon, 0.0));
  RunStats stats;

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const int chunk = static_cast<int>(std::min<unsigned>(hw, config.runs));

  const LearnerState* start = initial_state ? &*initial_state : nullptr;
  for (int base = 0; base < config.runs; base += chunk) {
    const int limit = std::min(config.runs, base + chunk);
    std::vector<std::future<std::pair<MetricsSeries, RunStats>>> futures;
    for (int r = base; r < limit; ++r) {
      futures.push_back(std::async(std::launch::async, [&, r] {
        RunStats rs;
        LearnerState final_state;
        const bool want_final = !config.final_state_path.empty();
        MetricsSeries one =
            run_one(config, scenario, child_seed(config.seed, r), baseline,
                    genie, &rs, start, want_final ? &final_state : nullptr);
        if (want_final) {
          std::ofstream out(config.final_state_path, std::ios::binary);
          if (!out) {
            throw std::runtime_error("cannot open snapshot output: " +
                                     config.final_state_path);
          }
          save_learner_state(final_state, out);
        }
        return std::make_pair(std::move(one), rs);
      }));
    }
    for (auto& f : futures) {
      auto [one, rs] = f.get();
      detail::accumulate(acc, one);
      stats.merge(rs);
    }
  }

  const double inv = 1.0 / config.runs;
  for (auto& v : acc.sum_rate) v *= inv;
  for (auto& v : acc.relative_rate) v *= inv;
  for (auto& v : acc.explore_rate) v *= inv;
  for (auto& band : acc.collision_freq) {
    for (auto& v : band) v *= inv;
  }

  if (stats_out != nullptr) *stats_out = stats;
  return acc;
}

inline Summary summarize(const MetricsSeries& series) {
  Summary s;
  s.horizon = series.horizon;
  s.num_bands = series.num_bands;
  s.baseline = series.baseline;
  const std::size_t total = series.sum_rate.size();
  const std::size_t tail = std::max<std::size_t>(1, total / 10);
  const std::size_t from = total - tail;
  const auto mean_tail = [&](const std::vector<double>& v) {
    double sum = 0.0;
    for (std::size_t t = from; t < total; ++t) sum += v[t];
    return sum / static_cast<double>(tail);
  };
  s.steady_sum_rate = mean_tail(series.sum_rate);
  s.steady_relative_rate = mean_tail(series.relative_rate);
  s.steady_explore_rate = mean_tail(series.explore_rate);
  for (int band = 0; band < series.num_bands; ++band) {
    s.steady_collision.push_back(mean_tail(series.collision_freq[band]));
  }
  return s;
}

enum class EmitFormat { csv, summary };

inline void emit(const MetricsSeries& series, std::ostream& out, EmitFormat format) {
  using detail::format_double;
  if (format == EmitFormat::csv) {
    out << "slot,sum_rate,relative_rate";
    for (int band = 0; band < series.num_bands; ++band) {
      out << ",collision_band_" << (band + 1);
    }
    out << ",explore_rate\n";
    for (std::size_t t = 0; t < series.sum_rate.size(); ++t) {
      out << t << ',' << format_double(series.sum_rate[t]) << ','
          << format_double(series.relative_rate[t]);
      for (int band = 0; band < series.num_bands; ++band) {
        out << ',' << format_double(series.collision_freq[band][t]);
      }
      out << ',' << format_double(series.explore_rate[t]) << '\n';
    }
  } else {
    const Summary s = summarize(series);
    out << "horizon: " << s.horizon << '\n';
    out << "bands: " << s.num_bands << '\n';
    out << "baseline: " << format_double(s.baseline) << '\n';
    out << "steady_sum_rate: " << format_double(s.steady_sum_rate) << '\n';
    out << "steady_relative_rate: " << format_double(s.steady_relative_rate) << '\n';
    out << "steady_explore_rate: " << format_double(s.steady_explore_rate) << '\n';
    for (int band = 0; band < s.num_bands; ++band) {
      out << "steady_collision_band_" << (band + 1) << ": "
          << format_double(s.steady_collision[band]) << '\n';
    }
  }
}

inline void emit(const MetricsSeries& series, const std::string& path,
                 EmitFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open output file: " + path);
  }
  emit(series, out, format);
  out.flush();
  if (!out) {
    throw std::runtime_error("write failed: " + path);
  }
}

// Inverse of the CSV emitter, for round-trip checks and external reuse.
inline MetricsSeries parse_metrics_csv(std::istream& in,
                                       const std::string& source = "<csv>") {
  MetricsSeries series;
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError(source, 1, "missing CSV header");
  }
  int cols = 1;
  for (char c : line) {
    if (c == ',') ++cols;
  }
  series.num_bands = cols - 4;
  if (series.num_bands < 0) {
    throw ParseError(source, 1, "unexpected CSV header");
  }
  series.collision_freq.assign(series.num_bands, {});

  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> fields;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      std::size_t comma = line.find(',', pos);
      if (comma == std::string::npos) comma = line.size();
      double v = 0.0;
      if (!detail::parse_double(
              detail::trim(std::string_view(line).substr(pos, comma - pos)), v)) {
        throw ParseError(source, lineno, "malformed CSV number");
      }
      fields.push_back(v);
      pos = comma + 1;
    }
    if (static_cast<int>(fields.size()) != cols) {
      throw ParseError(source, lineno, "wrong number of CSV fields");
    }
    series.sum_rate.push_back(fields[1]);
    series.relative_rate.push_back(fields[2]);
    for (int band = 0; band < series.num_bands; ++band) {
      series.collision_freq[band].push_back(fields[3 + band]);
    }
    series.explore_rate.push_back(fields.back());
  }
  series.horizon = static_cast<std::int64_t>(series.sum_rate.size());
  return series;
}

inline MetricsSeries parse_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open CSV file: " + path);
  }
  return parse_metrics_csv(in, path);
}

}  // namespace crsense
