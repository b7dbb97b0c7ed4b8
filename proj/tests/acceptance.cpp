// Acceptance suite: one PASS/FAIL line per criterion. Criteria 1-7 are
// deterministic and decide the exit status; 8-12 are seeded learning runs
// reported as qualitative gates.

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "aoimec/harness.hpp"
#include "checks.hpp"

using namespace aoimec;

namespace {

// Runtime limits (seconds).
constexpr double kEnvOracleSeconds = 5.0;
constexpr double kGradientSeconds = 30.0;
constexpr double kTabularSeconds = 10.0;

// Stochastic gates.
constexpr double kEnergyBand = 0.15;         // |E / E_max - 1|
constexpr double kOrderingMargin = 1.5;      // LPO and COO over DPDS
constexpr double kCooSensitivity = 3.0;      // AoI(1.0) / AoI(1.1)
constexpr double kLambdaZeroExcess = 0.25;   // violation with lambda_0 = 0
const std::vector<std::uint64_t> kSeeds{1, 2, 3};

struct Line {
  int id;
  bool pass;
  std::string text;
};

void report(std::vector<Line>& lines, int id, bool pass, const std::string& text) {
  lines.push_back({id, pass, text});
  std::cout << (pass ? "PASS" : "FAIL") << " criterion " << id << ": " << text << std::endl;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

struct Job {
  std::string key;
  ExperimentConfig cfg;
  std::uint64_t seed;
  RunSummary summary;
};

void run_all(std::vector<Job>& jobs, int threads) {
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      const auto t0 = std::chrono::steady_clock::now();
      jobs[j].summary = run_experiment(jobs[j].cfg, jobs[j].seed).summary;
      const double s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::ostringstream os;
      os << "  ran " << jobs[j].key << " seed " << jobs[j].seed << " in " << fmt(s) << " s\n";
      std::cerr << os.str();
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
}

// Median over seeds of `field` for runs tagged `key`.
double med(const std::vector<Job>& jobs, const std::string& key,
           const std::function<double(const RunSummary&)>& field) {
  std::vector<double> v;
  for (const auto& j : jobs)
    if (j.key == key) v.push_back(field(j.summary));
  return median(v);
}

double mean_energy(const RunSummary& s) { return s.mean_energy; }
double mean_aoi(const RunSummary& s) { return s.mean_aoi; }
double final_aoi(const RunSummary& s) { return s.final_window_aoi; }

void properties(std::vector<Line>& lines) {
  {
    const auto o = checks::env_oracle(10000);
    report(lines, 1, o.pass && o.seconds < kEnvOracleSeconds,
           "environment vs event-log oracle, " + o.detail);
  }
  {
    const auto o = checks::transition_cases();
    report(lines, 2, o.pass, "transition cases, " + o.detail);
  }
  {
    const auto o = checks::rate_energy_duality(10000);
    report(lines, 3, o.pass, "rate/energy duality, " + o.detail);
  }
  {
    const auto net = checks::network_gradients(20);
    const auto cost = checks::cost_gradients(500);
    const auto actor = checks::actor_objective_gradient();
    const double secs = net.seconds + cost.seconds + actor.seconds;
    report(lines, 4, net.pass && cost.pass && actor.pass && secs < kGradientSeconds,
           "gradients: networks " + net.detail + "; cost " + cost.detail + "; actor " +
               actor.detail + "; total " + fmt(secs) + " s");
  }
  {
    const auto o = checks::flop_closed_forms();
    report(lines, 5, o.pass, "FLOP closed forms, " + o.detail);
  }
  {
    const auto o = checks::tabular_pds(100000);
    report(lines, 6, o.pass && o.seconds < kTabularSeconds, "tabular PDS vs RVI, " + o.detail);
  }
  {
    const auto o = checks::feasibility_and_tracking();
    report(lines, 7, o.pass, "feasibility and tracking, " + o.detail);
  }
}

void learning_gates(std::vector<Line>& lines, int threads) {
  const ExperimentConfig desk = profile_config("desk");
  const auto with_policy = [](ExperimentConfig c, PolicyKind p) {
    c.policy = p;
    return c;
  };
  ExperimentConfig lam0 = with_policy(desk, PolicyKind::Dpds);
  lam0.agent.lambda_init = 0.0;
  ExperimentConfig coo11 = with_policy(desk, PolicyKind::Coo);
  coo11.budget_multiplier = 1.1;
  const ExperimentConfig smoke = profile_config("smoke");

  std::vector<Job> jobs;
  const auto add = [&](const std::string& key, const ExperimentConfig& c) {
    for (auto s : kSeeds) jobs.push_back({key, c, s, {}});
  };
  add("dpl", with_policy(desk, PolicyKind::Dpl));
  add("dpds", with_policy(desk, PolicyKind::Dpds));
  add("lam0", lam0);
  add("smoke-dpds", with_policy(smoke, PolicyKind::Dpds));
  add("smoke-addpg", with_policy(smoke, PolicyKind::Addpg));
  add("lpo", with_policy(desk, PolicyKind::Lpo));
  add("coo", with_policy(desk, PolicyKind::Coo));
  add("coo-1.1", coo11);
  run_all(jobs, threads);

  const double budget = desk.sim.energy_budget[0];
  const double e_dpds = med(jobs, "dpds", mean_energy);
  const bool gate8 = std::abs(e_dpds / budget - 1.0) <= kEnergyBand;
  report(lines, 8, gate8,
         "DPDS median energy " + fmt(e_dpds) + " J/slot vs budget " + fmt(budget) + " (" +
             fmt(100.0 * (e_dpds / budget - 1.0)) + "%, band +-" + fmt(100.0 * kEnergyBand) +
             "%)");

  const double a_dpds = med(jobs, "dpds", final_aoi);
  const double a_dpl = med(jobs, "dpl", final_aoi);
  const double a_lpo = med(jobs, "lpo", final_aoi);
  const double a_coo = med(jobs, "coo", final_aoi);
  const bool gate9 = a_dpds < a_dpl && a_lpo >= kOrderingMargin * a_dpds &&
                     a_coo >= kOrderingMargin * a_dpds;
  report(lines, 9, gate9,
         "final-window AoI DPDS " + fmt(a_dpds) + ", DPL " + fmt(a_dpl) + ", LPO " + fmt(a_lpo) +
             " (x" + fmt(a_lpo / a_dpds) + "), COO " + fmt(a_coo) + " (x" +
             fmt(a_coo / a_dpds) + "); margin " + fmt(kOrderingMargin));

  const double c10 = med(jobs, "coo", mean_aoi);
  const double c11 = med(jobs, "coo-1.1", mean_aoi);
  report(lines, 10, c10 / c11 >= kCooSensitivity,
         "COO mean AoI " + fmt(c10) + " at x1.0, " + fmt(c11) + " at x1.1, ratio " +
             fmt(c10 / c11) + " (need >= " + fmt(kCooSensitivity) + "); COO energy " +
             fmt(med(jobs, "coo", mean_energy)) + " J/slot");

  const double e_lam0 = med(jobs, "lam0", mean_energy);
  const bool gate11 = e_lam0 > (1.0 + kLambdaZeroExcess) * budget && gate8;
  report(lines, 11, gate11,
         "lambda_0 = 0 median energy " + fmt(e_lam0) + " (+" +
             fmt(100.0 * (e_lam0 / budget - 1.0)) + "%), lambda_0 = 5000 " + fmt(e_dpds));

  const double s_dpds = med(jobs, "smoke-dpds", final_aoi);
  const double s_ddpg = med(jobs, "smoke-addpg", final_aoi);
  report(lines, 12, s_dpds <= s_ddpg,
         "smoke final-window AoI DPDS " + fmt(s_dpds) + " vs A-DDPG " + fmt(s_ddpg));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  bool properties_only = false;
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  app.add_flag("--properties-only", properties_only, "skip the learning runs (criteria 8-12)");
  app.add_option("--jobs", threads, "worker threads for the learning runs")
      ->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  std::vector<Line> lines;
  properties(lines);
  if (!properties_only) learning_gates(lines, threads);

  int gating_failures = 0, gate_failures = 0;
  for (const auto& l : lines) (l.id <= 7 ? gating_failures : gate_failures) += l.pass ? 0 : 1;
  std::cout << "summary: " << gating_failures << " deterministic failure(s), " << gate_failures
            << " qualitative gate failure(s)" << std::endl;
  return gating_failures == 0 ? 0 : 1;
}
