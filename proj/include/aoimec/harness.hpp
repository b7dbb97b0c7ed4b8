#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aoimec/baselines.hpp"
#include "aoimec/config.hpp"
#include "aoimec/dpds.hpp"

namespace aoimec {

struct ExperimentConfig {
  std::string profile = "desk";
  SimConfig sim;
  AgentConfig agent;
  MyopicOptions myopic;
  PolicyKind policy = PolicyKind::Dpds;
  int stride = 10;                  // slots aggregated per trace row
  double budget_multiplier = 1.0;   // on top of the per-policy multiplier
  bool policy_budget_scaling = true;  // apply x3 (LPO) / x2 (COO)
};

/// Named base profiles: "desk" (N = 5, 2e4 slots), "full" (N = 15, 1e5
/// slots), "smoke" (N = 2, 1e4 slots).
ExperimentConfig profile_config(const std::string& name);

/// Reads `profile` first, then applies every other key on top of it.
ExperimentConfig experiment_config_from(const KeyValueFile& kv);
ExperimentConfig load_experiment_config(const std::string& path);
std::string to_key_value(const ExperimentConfig& cfg);

/// Copy of `cfg` with N WDs. Per-WD parameters must be uniform; positions
/// are resampled from the layout seed.
SimConfig with_n_wds(const SimConfig& cfg, int n);

/// Simulation config a run actually uses: budgets scaled by the policy and
/// sweep multipliers.
SimConfig effective_sim_config(const ExperimentConfig& cfg);

/// Aggregate of `slots` consecutive slots starting at `slot_begin`.
struct TraceRow {
  long slot_begin = 0;
  long slots = 0;
  long wd_slots = 0;
  long aoi_sum = 0;
  double energy_sum = 0.0;
  long violations = 0;  // WD-slots with E_i(t) > E^max_i
  long clamped = 0;
  double lambda_mean = 0.0;  // at the end of the window
  double critic_loss = 0.0;  // mean over trained slots in the window
  double actor_grad_norm = 0.0;
  // Running averages since slot 0, for plotting.
  double running_aoi = 0.0;
  double running_energy = 0.0;

  double mean_aoi() const { return wd_slots ? static_cast<double>(aoi_sum) / wd_slots : 0.0; }
  double mean_energy() const { return wd_slots ? energy_sum / wd_slots : 0.0; }
};

struct RunSummary {
  std::string policy;
  std::uint64_t seed = 0;
  int n_wds = 0;
  long slots = 0;
  double mean_budget = 0.0;
  double mean_aoi = 0.0;
  double mean_energy = 0.0;
  double violation_fraction = 0.0;
  double first_window_aoi = 0.0;  // first 10% of trace rows
  double final_window_aoi = 0.0;  // last 20% of trace rows
  double final_window_energy = 0.0;
  double lambda_final = 0.0;
};

struct RunResult {
  std::vector<TraceRow> trace;
  RunSummary summary;
};

/// Recomputes the summary statistics from trace rows.
void summarize_trace(const std::vector<TraceRow>& trace, RunSummary& summary);

/// Runs one seeded experiment. When `out_dir` is non-empty writes trace.csv,
/// summary.csv and config.txt there.
RunResult run_experiment(const ExperimentConfig& cfg, std::uint64_t seed,
                         const std::string& out_dir = "");

std::string trace_csv_header();
std::string trace_csv_row(const TraceRow& row);
std::string summary_csv_header();
std::string summary_csv_row(const RunSummary& s);
std::vector<TraceRow> read_trace_csv(const std::string& path);

/// One cell of a sweep plus its seed-wise results.
struct SweepCell {
  double parameter = 0.0;  // N or budget multiplier
  PolicyKind policy = PolicyKind::Dpds;
  std::vector<RunSummary> runs;

  double median_aoi() const;
  double median_energy() const;
  double median_final_aoi() const;
};

/// Runs every (N, policy, seed) combination; `jobs` worker threads.
std::vector<SweepCell> sweep_n(const ExperimentConfig& base, const std::vector<int>& ns,
                               const std::vector<PolicyKind>& policies,
                               const std::vector<std::uint64_t>& seeds, int jobs = 1);

/// Runs every (multiplier, policy, seed) combination.
std::vector<SweepCell> sweep_budget(const ExperimentConfig& base,
                                    const std::vector<double>& multipliers,
                                    const std::vector<PolicyKind>& policies,
                                    const std::vector<std::uint64_t>& seeds, int jobs = 1);

/// Per-seed rows followed by nothing else; `parameter_name` heads column 1.
std::string sweep_csv(const std::vector<SweepCell>& cells, const std::string& parameter_name);
/// One median row per cell.
std::string sweep_median_csv(const std::vector<SweepCell>& cells,
                             const std::string& parameter_name);

double median(std::vector<double> v);

}  // namespace aoimec
