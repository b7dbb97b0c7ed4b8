// aoimec: run experiments, sweeps, and the property self-test.
//
// Exit codes: 0 ok, 1 a self-test check failed or a run errored, 2 usage or
// configuration error.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "aoimec/harness.hpp"
#include "checks.hpp"

namespace {

using namespace aoimec;

struct Common {
  std::string config;
  std::string profile;
  std::string policy;
  std::uint64_t seed = 1;
  std::string out;
  long slots = -1;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "key = value experiment file");
  cmd->add_option("--profile", c.profile, "base profile: desk, full, smoke (overrides the file)");
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--slots", c.slots, "horizon in slots (overrides the config)");
}

ExperimentConfig resolve(const Common& c) {
  KeyValueFile kv;
  if (!c.config.empty()) {
    if (!std::filesystem::exists(c.config)) throw ConfigError("--config: no such file: " + c.config);
    kv = KeyValueFile::load(c.config);
  }
  if (!c.profile.empty()) kv.set("profile", c.profile);
  if (!c.policy.empty()) kv.set("policy", c.policy);
  if (c.slots >= 0) kv.set("horizon_slots", std::to_string(c.slots));
  return experiment_config_from(kv);
}

void write_file(const std::string& dir, const std::string& name, const std::string& text) {
  std::filesystem::create_directories(dir);
  std::ofstream out(std::filesystem::path(dir) / name, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + (std::filesystem::path(dir) / name).string());
}

std::vector<PolicyKind> parse_policies(const std::vector<std::string>& names) {
  std::vector<PolicyKind> out;
  for (const auto& n : names) out.push_back(parse_policy(n));
  return out;
}

int selftest(bool quick) {
  struct Item {
    const char* name;
    checks::Outcome (*run)(bool);
  };
  const Item items[] = {
      {"env-oracle", [](bool q) { return checks::env_oracle(q ? 2000 : 10000); }},
      {"transition-cases", [](bool) { return checks::transition_cases(); }},
      {"rate-energy-duality", [](bool q) { return checks::rate_energy_duality(q ? 1000 : 10000); }},
      {"network-gradients", [](bool q) { return checks::network_gradients(q ? 3 : 20); }},
      {"cost-gradients", [](bool q) { return checks::cost_gradients(q ? 100 : 500); }},
      {"actor-gradient", [](bool) { return checks::actor_objective_gradient(); }},
      {"flop-closed-forms", [](bool) { return checks::flop_closed_forms(); }},
      {"tabular-pds", [](bool) { return checks::tabular_pds(); }},
      {"feasibility-tracking", [](bool) { return checks::feasibility_and_tracking(); }},
  };
  bool all = true;
  for (const auto& it : items) {
    const checks::Outcome o = it.run(quick);
    all = all && o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << it.name << ": " << o.detail << "\n";
  }
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AoI-aware MEC scheduling experiments"};
  app.require_subcommand(1);

  Common run_opts;
  auto* run = app.add_subcommand("run", "one seeded experiment; writes trace.csv and summary.csv");
  add_common(run, run_opts);
  run->add_option("--policy", run_opts.policy, "dpds, lpo, coo, dpl, addpg, dddpg");
  run->add_option("--seed", run_opts.seed, "run seed");

  Common sn_opts;
  std::vector<int> ns{5, 10, 15};
  std::vector<std::string> sn_policies{"dpds", "lpo", "coo"};
  std::vector<std::uint64_t> sn_seeds{1, 2, 3};
  int sn_jobs = 1;
  auto* sweep_n_cmd = app.add_subcommand("sweep-n", "median AoI over a list of N");
  add_common(sweep_n_cmd, sn_opts);
  sweep_n_cmd->add_option("--n", ns, "numbers of WDs")->delimiter(',');
  sweep_n_cmd->add_option("--policies", sn_policies)->delimiter(',');
  sweep_n_cmd->add_option("--seeds", sn_seeds)->delimiter(',');
  sweep_n_cmd->add_option("--jobs", sn_jobs, "worker threads")->check(CLI::PositiveNumber);

  Common sb_opts;
  std::vector<double> mults{1.0, 1.1, 1.5, 2.0, 3.0};
  std::vector<std::string> sb_policies{"dpds", "lpo", "coo"};
  std::vector<std::uint64_t> sb_seeds{1, 2, 3};
  int sb_jobs = 1;
  auto* sweep_b_cmd = app.add_subcommand("sweep-budget", "median AoI over energy-budget multipliers");
  add_common(sweep_b_cmd, sb_opts);
  sweep_b_cmd->add_option("--multipliers", mults)->delimiter(',');
  sweep_b_cmd->add_option("--policies", sb_policies)->delimiter(',');
  sweep_b_cmd->add_option("--seeds", sb_seeds)->delimiter(',');
  sweep_b_cmd->add_option("--jobs", sb_jobs, "worker threads")->check(CLI::PositiveNumber);

  bool quick = false;
  auto* self = app.add_subcommand("selftest", "oracle, gradient, and feasibility property checks");
  self->add_flag("--quick", quick, "smaller sample counts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*self) return selftest(quick);

    if (*run) {
      const ExperimentConfig cfg = resolve(run_opts);
      const std::string dir = run_opts.out.empty() ? "." : run_opts.out;
      const RunResult r = run_experiment(cfg, run_opts.seed, dir);
      std::cout << summary_csv_header() << "\n" << summary_csv_row(r.summary) << "\n";
      return 0;
    }

    const bool by_n = static_cast<bool>(*sweep_n_cmd);
    const Common& c = by_n ? sn_opts : sb_opts;
    const ExperimentConfig cfg = resolve(c);
    std::vector<SweepCell> cells;
    std::string param;
    if (by_n) {
      cells = sweep_n(cfg, ns, parse_policies(sn_policies), sn_seeds, sn_jobs);
      param = "n_wds";
    } else {
      cells = sweep_budget(cfg, mults, parse_policies(sb_policies), sb_seeds, sb_jobs);
      param = "multiplier";
    }
    const std::string medians = sweep_median_csv(cells, param);
    if (!c.out.empty()) {
      write_file(c.out, "sweep.csv", sweep_csv(cells, param));
      write_file(c.out, "sweep_median.csv", medians);
    }
    std::cout << medians;
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n\n" << app.help();
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
