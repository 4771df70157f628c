// crsense command-line harness.
//
// Subcommands:
//   run       simulate one policy and emit per-slot CSV metrics + a summary
//   compare   simulate learned vs genie vs random with a shared baseline
//   oracle    print the optimal sensing plan and its expected sum rate
//   validate  parse and lint a scenario file

#include <cstdio>
#include <exception>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "crsense/harness.hpp"
#include "crsense/oracle.hpp"
#include "crsense/scenario.hpp"

namespace {

using crsense::EmitFormat;
using crsense::MetricsSeries;
using crsense::PolicyKind;
using crsense::PolicyValue;
using crsense::RunConfig;
using crsense::Scenario;
using crsense::Summary;

void add_run_options(CLI::App* cmd, RunConfig& config) {
  cmd->add_option("--scenario", config.scenario_path, "Scenario file")->required();
  cmd->add_option("--horizon", config.horizon, "Slots per run");
  cmd->add_option("--runs", config.runs, "Monte Carlo repetitions");
  cmd->add_option("--seed", config.seed, "Master seed; all randomness derives from it");
  cmd->add_option("--epsilon", config.epsilon, "Exploration probability");
  cmd->add_option("--delta-prob", config.step_prob,
                  "Step size for probability estimates");
  cmd->add_option("--delta-rate", config.step_rate, "Step size for rate estimates");
  cmd->add_option("--delta-fair", config.step_fair,
                  "Step size for fairness averages");
  cmd->add_option("--diversity", config.diversity, "SUs per band while exploring");
  cmd->add_option("--theta", config.theta, "Rate exponent in access weights");
  cmd->add_option("--nu", config.nu, "Fairness exponent in access weights");
  cmd->add_option("--omega", config.omega,
                  "Collision limit override (default: scenario value)");
  cmd->add_option("--window", config.window, "Collision-frequency window (slots)");
  cmd->add_flag("--deny-exploration-access", config.deny_exploration_access,
                "Do not grant access during exploration slots");
  cmd->add_option("--rate-noise", config.rate_noise,
                  "Multiplicative rate noise amplitude (default 0: rates are "
                  "deterministically the scenario means)");
}

double compute_baseline(const Scenario& scenario, PolicyValue& genie, bool& have) {
  try {
    genie = crsense::optimal_policy(scenario);
    have = true;
    return genie.expected_rate;
  } catch (const std::length_error& e) {
    std::cerr << "note: baseline disabled (" << e.what() << ")\n";
    have = false;
    return 0.0;
  }
}

void print_plan(const PolicyValue& value, const Scenario& scenario,
                std::ostream& out) {
  using crsense::detail::format_double;
  out << "expected_sum_rate: " << format_double(value.expected_rate) << "\n";
  out << "sensed_bands:";
  for (int band : value.plan.sensed_bands) out << ' ' << (band + 1);
  out << "\n";
  for (const auto& bf : value.fusions) {
    out << "band " << (bf.band + 1) << ": sus =";
    for (int su : bf.sus) out << ' ' << (su + 1);
    out << ", false_alarm = " << format_double(bf.design.false_alarm)
        << ", declared_idle_prob = "
        << format_double(value.per_band_psi[bf.band])
        << ", rand_prob = " << format_double(bf.design.rand_prob) << "\n";
  }
  (void)scenario;
}

int cmd_run(RunConfig& config, const std::string& out_csv,
            const std::string& out_summary) {
  const Scenario scenario =
      config.effective_scenario(crsense::load_scenario(config.scenario_path));
  config.validate();

  PolicyValue genie;
  bool have_genie = false;
  const double baseline = compute_baseline(scenario, genie, have_genie);

  const MetricsSeries series = crsense::run_monte_carlo(
      config, scenario, baseline, have_genie ? &genie : nullptr);

  if (!out_csv.empty()) crsense::emit(series, out_csv, EmitFormat::csv);
  if (!out_summary.empty()) crsense::emit(series, out_summary, EmitFormat::summary);
  std::cout << "policy: " << crsense::policy_name(config.policy) << "\n";
  crsense::emit(series, std::cout, EmitFormat::summary);
  return 0;
}

int cmd_compare(RunConfig& config, const std::string& prefix) {
  const Scenario scenario =
      config.effective_scenario(crsense::load_scenario(config.scenario_path));
  config.validate();

  PolicyValue genie;
  bool have_genie = false;
  const double baseline = compute_baseline(scenario, genie, have_genie);

  for (PolicyKind policy :
       {PolicyKind::learned, PolicyKind::genie, PolicyKind::random}) {
    RunConfig one = config;
    one.policy = policy;
    if (policy == PolicyKind::genie && !have_genie) {
      std::cerr << "note: skipping genie policy (no baseline)\n";
      continue;
    }
    const MetricsSeries series = crsense::run_monte_carlo(
        one, scenario, baseline, have_genie ? &genie : nullptr);
    const std::string path =
        prefix + "_" + crsense::policy_name(policy) + ".csv";
    crsense::emit(series, path, EmitFormat::csv);
    std::cout << "policy: " << crsense::policy_name(policy) << "\n";
    crsense::emit(series, std::cout, EmitFormat::summary);
    std::cout << "csv: " << path << "\n\n";
  }
  return 0;
}

int cmd_oracle(const std::string& scenario_path) {
  const Scenario scenario = crsense::load_scenario(scenario_path);
  const PolicyValue best = crsense::optimal_policy(scenario);
  print_plan(best, scenario, std::cout);
  return 0;
}

int cmd_validate(const std::string& scenario_path) {
  const Scenario scenario = crsense::load_scenario(scenario_path);
  std::cout << "ok: " << scenario_path << "\n";
  std::cout << "bands: " << scenario.num_bands << "\n";
  std::cout << "sus: " << scenario.num_sus << "\n";
  std::cout << "collision_limit: "
            << crsense::detail::format_double(scenario.collision_limit) << "\n";
  std::cout << "capacity: " << scenario.capacity << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cooperative spectrum sensing simulator"};
  app.require_subcommand(1);

  RunConfig run_config;
  std::string run_out_csv, run_out_summary, run_policy = "learned";
  CLI::App* run = app.add_subcommand("run", "Simulate one policy");
  add_run_options(run, run_config);
  run->add_option("--policy", run_policy, "learned | genie | random")
      ->check(CLI::IsMember({"learned", "genie", "random"}));
  run->add_option("--out", run_out_csv, "Per-slot CSV output path");
  run->add_option("--summary-out", run_out_summary, "Summary output path");
  run->add_option("--init-state", run_config.initial_state_path,
                  "Learner snapshot to resume from");
  run->add_option("--final-state-out", run_config.final_state_path,
                  "Save the final learner snapshot (requires --runs 1)");

  RunConfig cmp_config;
  std::string cmp_prefix = "compare";
  CLI::App* cmp = app.add_subcommand(
      "compare", "Simulate learned, genie and random policies");
  add_run_options(cmp, cmp_config);
  cmp->add_option("--out-prefix", cmp_prefix, "Prefix for per-policy CSV files");

  std::string oracle_scenario;
  CLI::App* oracle = app.add_subcommand("oracle", "Print the optimal sensing plan");
  oracle->add_option("--scenario", oracle_scenario, "Scenario file")->required();

  std::string validate_scenario;
  CLI::App* validate = app.add_subcommand("validate", "Lint a scenario file");
  validate->add_option("--scenario", validate_scenario, "Scenario file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      if (run_policy == "genie") run_config.policy = PolicyKind::genie;
      else if (run_policy == "random") run_config.policy = PolicyKind::random;
      else run_config.policy = PolicyKind::learned;
      return cmd_run(run_config, run_out_csv, run_out_summary);
    }
    if (cmp->parsed()) return cmd_compare(cmp_config, cmp_prefix);
    if (oracle->parsed()) return cmd_oracle(oracle_scenario);
    if (validate->parsed()) return cmd_validate(validate_scenario);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
