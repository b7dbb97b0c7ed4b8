#include "aoimec/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace aoimec {

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

const std::vector<std::string>& experiment_keys() {
  static const std::vector<std::string> keys = {
      "profile",          "policy",          "stride",           "budget_multiplier",
      "policy_budget_scaling", "hidden",     "actor_lr",         "value_lr",
      "omega",            "batch_size",      "buffer_capacity",  "warmup",
      "lambda_init",      "lambda_max",      "eta_scale",        "strict_arch",
      "a_scale",          "q_scale",         "estimate_decay",   "agent_seed",
      "discount",         "exploration_noise", "ddpg_redesigned_cost", "myopic_grid_points",
      "myopic_fixed_max"};
  return keys;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + p.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed: " + p.string());
}

std::vector<double> uniform_or_throw(const std::vector<double>& v, const char* key) {
  if (v.empty()) throw ConfigError(std::string(key) + ": missing");
  for (double x : v)
    if (x != v.front())
      throw ConfigError(std::string(key) + ": per-WD values must be uniform to change N");
  return {v.front()};
}

}  // namespace

ExperimentConfig profile_config(const std::string& name) {
  ExperimentConfig cfg;
  cfg.profile = name;
  if (name == "desk") {
    cfg.sim = desk_config();
  } else if (name == "full") {
    cfg.sim = full_config();
  } else if (name == "smoke") {
    SimConfig s = desk_config();
    s = with_n_wds(s, 2);
    s.bs_bandwidth = 20e6 * 2.0 / 15.0;
    s.horizon_slots = 10000;
    s.finalize();
    cfg.sim = s;
  } else {
    throw ConfigError("profile: unknown profile '" + name + "' (expected desk, full or smoke)");
  }
  return cfg;
}

ExperimentConfig experiment_config_from(const KeyValueFile& kv) {
  std::vector<std::string> known = sim_config_keys();
  known.insert(known.end(), experiment_keys().begin(), experiment_keys().end());
  kv.require_known(known);

  ExperimentConfig cfg = profile_config(kv.get_string("profile", "desk"));
  cfg.sim = sim_config_from(kv, cfg.sim);
  if (kv.has("policy")) cfg.policy = parse_policy(kv.get_string("policy", "dpds"));
  cfg.stride = static_cast<int>(kv.get_long("stride", cfg.stride));
  if (cfg.stride <= 0) throw ConfigError("stride: must be positive");
  cfg.budget_multiplier = kv.get_double("budget_multiplier", cfg.budget_multiplier);
  if (!(cfg.budget_multiplier > 0.0)) throw ConfigError("budget_multiplier: must be positive");
  cfg.policy_budget_scaling = kv.get_bool("policy_budget_scaling", cfg.policy_budget_scaling);

  AgentConfig& a = cfg.agent;
  a.hidden = static_cast<int>(kv.get_long("hidden", a.hidden));
  a.actor_lr = kv.get_double("actor_lr", a.actor_lr);
  a.value_lr = kv.get_double("value_lr", a.value_lr);
  a.omega = kv.get_double("omega", a.omega);
  a.batch_size = static_cast<int>(kv.get_long("batch_size", a.batch_size));
  a.buffer_capacity = static_cast<std::size_t>(
      kv.get_long("buffer_capacity", static_cast<long>(a.buffer_capacity)));
  a.warmup = static_cast<std::size_t>(kv.get_long("warmup", static_cast<long>(a.warmup)));
  a.lambda_init = kv.get_double("lambda_init", a.lambda_init);
  a.lambda_max = kv.get_double("lambda_max", a.lambda_max);
  a.eta_scale = kv.get_double("eta_scale", a.eta_scale);
  a.strict_arch = kv.get_bool("strict_arch", a.strict_arch);
  a.a_scale = kv.get_double("a_scale", a.a_scale);
  a.q_scale = kv.get_double("q_scale", a.q_scale);
  a.estimate_decay = kv.get_double("estimate_decay", a.estimate_decay);
  a.seed = static_cast<std::uint64_t>(kv.get_long("agent_seed", static_cast<long>(a.seed)));
  a.discount = kv.get_double("discount", a.discount);
  a.exploration_noise = kv.get_double("exploration_noise", a.exploration_noise);
  a.ddpg_redesigned_cost = kv.get_bool("ddpg_redesigned_cost", a.ddpg_redesigned_cost);
  cfg.myopic.grid_points = static_cast<int>(kv.get_long("myopic_grid_points", 201));
  cfg.myopic.fixed_max = kv.get_bool("myopic_fixed_max", false);

  if (a.hidden <= 0) throw ConfigError("hidden: must be positive");
  if (a.batch_size <= 0) throw ConfigError("batch_size: must be positive");
  if (a.buffer_capacity == 0) throw ConfigError("buffer_capacity: must be positive");
  if (a.omega < 0.0 || a.omega > 1.0) throw ConfigError("omega: must lie in [0, 1]");
  if (a.lambda_init < 0.0) throw ConfigError("lambda_init: must be nonnegative");
  if (a.lambda_max < a.lambda_init) throw ConfigError("lambda_max: must be >= lambda_init");
  if (a.discount <= 0.0 || a.discount >= 1.0) throw ConfigError("discount: must lie in (0, 1)");
  if (a.estimate_decay < 0.0 || a.estimate_decay >= 1.0)
    throw ConfigError("estimate_decay: must lie in [0, 1)");
  if (cfg.myopic.grid_points < 2) throw ConfigError("myopic_grid_points: must be >= 2");
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  return experiment_config_from(KeyValueFile::load(path));
}

std::string to_key_value(const ExperimentConfig& cfg) {
  const AgentConfig& a = cfg.agent;
  std::ostringstream out;
  out << "profile = " << cfg.profile << '\n'
      << "policy = " << policy_name(cfg.policy) << '\n'
      << "stride = " << cfg.stride << '\n'
      << "budget_multiplier = " << fmt(cfg.budget_multiplier) << '\n'
      << "policy_budget_scaling = " << (cfg.policy_budget_scaling ? "true" : "false") << '\n'
      << "hidden = " << a.hidden << '\n'
      << "actor_lr = " << fmt(a.actor_lr) << '\n'
      << "value_lr = " << fmt(a.value_lr) << '\n'
      << "omega = " << fmt(a.omega) << '\n'
      << "batch_size = " << a.batch_size << '\n'
      << "buffer_capacity = " << a.buffer_capacity << '\n'
      << "warmup = " << a.warmup << '\n'
      << "lambda_init = " << fmt(a.lambda_init) << '\n'
      << "lambda_max = " << fmt(a.lambda_max) << '\n'
      << "eta_scale = " << fmt(a.eta_scale) << '\n'
      << "strict_arch = " << (a.strict_arch ? "true" : "false") << '\n'
      << "a_scale = " << fmt(a.a_scale) << '\n'
      << "q_scale = " << fmt(a.q_scale) << '\n'
      << "estimate_decay = " << fmt(a.estimate_decay) << '\n'
      << "agent_seed = " << a.seed << '\n'
      << "discount = " << fmt(a.discount) << '\n'
      << "exploration_noise = " << fmt(a.exploration_noise) << '\n'
      << "ddpg_redesigned_cost = " << (a.ddpg_redesigned_cost ? "true" : "false") << '\n'
      << "myopic_grid_points = " << cfg.myopic.grid_points << '\n'
      << "myopic_fixed_max = " << (cfg.myopic.fixed_max ? "true" : "false") << '\n'
      << to_key_value(cfg.sim);
  return out.str();
}

SimConfig with_n_wds(const SimConfig& cfg, int n) {
  if (n <= 0) throw ConfigError("n_wds: must be positive");
  SimConfig out = cfg;
  out.n_wds = n;
  out.max_freq = uniform_or_throw(cfg.max_freq, "max_freq");
  out.max_power = uniform_or_throw(cfg.max_power, "max_power");
  out.energy_budget = uniform_or_throw(cfg.energy_budget, "energy_budget");
  out.arrival_rate = uniform_or_throw(cfg.arrival_rate, "arrival_rate");
  out.wd_positions.clear();
  out.finalize();
  return out;
}

SimConfig effective_sim_config(const ExperimentConfig& cfg) {
  SimConfig sim = cfg.sim;
  const double m = cfg.budget_multiplier *
                   (cfg.policy_budget_scaling ? default_budget_multiplier(cfg.policy) : 1.0);
  for (double& e : sim.energy_budget) e *= m;
  sim.validate();
  return sim;
}

// ---------------------------------------------------------------- running

void summarize_trace(const std::vector<TraceRow>& trace, RunSummary& s) {
  long wd_slots = 0, aoi = 0, violations = 0, slots = 0;
  double energy = 0.0;
  for (const TraceRow& r : trace) {
    wd_slots += r.wd_slots;
    aoi += r.aoi_sum;
    energy += r.energy_sum;
    violations += r.violations;
    slots += r.slots;
  }
  s.slots = slots;
  s.mean_aoi = wd_slots ? static_cast<double>(aoi) / wd_slots : 0.0;
  s.mean_energy = wd_slots ? energy / wd_slots : 0.0;
  s.violation_fraction = wd_slots ? static_cast<double>(violations) / wd_slots : 0.0;

  const auto window = [&](std::size_t begin, std::size_t end, double& mean_aoi,
                          double* mean_energy) {
    long ws = 0, a = 0;
    double e = 0.0;
    for (std::size_t k = begin; k < end; ++k) {
      ws += trace[k].wd_slots;
      a += trace[k].aoi_sum;
      e += trace[k].energy_sum;
    }
    mean_aoi = ws ? static_cast<double>(a) / ws : 0.0;
    if (mean_energy) *mean_energy = ws ? e / ws : 0.0;
  };
  const std::size_t rows = trace.size();
  const std::size_t first = (rows + 9) / 10;
  const std::size_t last = (rows + 4) / 5;
  window(0, first, s.first_window_aoi, nullptr);
  window(rows - last, rows, s.final_window_aoi, &s.final_window_energy);
  s.lambda_final = rows ? trace.back().lambda_mean : 0.0;
}

RunResult run_experiment(const ExperimentConfig& cfg, std::uint64_t seed,
                         const std::string& out_dir) {
  SimConfig sim = effective_sim_config(cfg);
  sim.rng_seed = seed;
  AgentConfig agent = cfg.agent;
  agent.seed = splitmix64(seed ^ splitmix64(cfg.agent.seed));

  Environment env(sim);
  std::unique_ptr<Scheduler> sched = make_scheduler(cfg.policy, sim, agent, cfg.myopic);

  RunResult result;
  result.summary.policy = policy_name(cfg.policy);
  result.summary.seed = seed;
  result.summary.n_wds = sim.n_wds;
  double budget = 0.0;
  for (double e : sim.energy_budget) budget += e;
  result.summary.mean_budget = budget / sim.n_wds;

  const long horizon = sim.horizon_slots;
  long total_wd_slots = 0, total_aoi = 0;
  double total_energy = 0.0;
  TraceRow row;
  long trained = 0;
  for (long t = 0; t < horizon; ++t) {
    if (row.slots == 0) {
      row = TraceRow{};
      row.slot_begin = t;
      trained = 0;
    }
    const StepMetrics m = sched->step(env);
    for (int i = 0; i < sim.n_wds; ++i) {
      const auto k = static_cast<std::size_t>(i);
      row.aoi_sum += m.aoi[k];
      row.energy_sum += m.energy[k];
      if (m.energy[k] > sim.energy_budget[k]) ++row.violations;
    }
    row.wd_slots += sim.n_wds;
    row.clamped += m.clamped;
    ++row.slots;
    const TrainStats st = sched->stats();
    if (st.trained) {
      row.critic_loss += st.critic_loss;
      row.actor_grad_norm += st.actor_grad_norm;
      ++trained;
    }
    if (row.slots == cfg.stride || t + 1 == horizon) {
      row.lambda_mean = sched->lambda_mean();
      if (trained) {
        row.critic_loss /= trained;
        row.actor_grad_norm /= trained;
      }
      total_wd_slots += row.wd_slots;
      total_aoi += row.aoi_sum;
      total_energy += row.energy_sum;
      row.running_aoi = static_cast<double>(total_aoi) / total_wd_slots;
      row.running_energy = total_energy / total_wd_slots;
      result.trace.push_back(row);
      row.slots = 0;
    }
  }
  summarize_trace(result.trace, result.summary);

  if (!out_dir.empty()) {
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    std::string trace = trace_csv_header();
    for (const TraceRow& r : result.trace) trace += trace_csv_row(r);
    write_file(dir / "trace.csv", trace);
    write_file(dir / "summary.csv", summary_csv_header() + summary_csv_row(result.summary));
    ExperimentConfig snapshot = cfg;
    snapshot.sim.rng_seed = seed;
    write_file(dir / "config.txt", to_key_value(snapshot));
  }
  return result;
}

// ---------------------------------------------------------------- CSV

std::string trace_csv_header() {
  return "slot_begin,slots,wd_slots,aoi_sum,energy_sum,violations,clamped,mean_aoi,mean_energy,"
         "lambda_mean,critic_loss,actor_grad_norm,running_aoi,running_energy\n";
}

std::string trace_csv_row(const TraceRow& r) {
  std::string s;
  s += std::to_string(r.slot_begin) + ',' + std::to_string(r.slots) + ',' +
       std::to_string(r.wd_slots) + ',' + std::to_string(r.aoi_sum) + ',' + fmt(r.energy_sum) +
       ',' + std::to_string(r.violations) + ',' + std::to_string(r.clamped) + ',' +
       fmt(r.mean_aoi()) + ',' + fmt(r.mean_energy()) + ',' + fmt(r.lambda_mean) + ',' +
       fmt(r.critic_loss) + ',' + fmt(r.actor_grad_norm) + ',' + fmt(r.running_aoi) + ',' +
       fmt(r.running_energy) + '\n';
  return s;
}

std::string summary_csv_header() {
  return "policy,seed,n_wds,slots,mean_budget,mean_aoi,mean_energy,violation_fraction,"
         "first_window_aoi,final_window_aoi,final_window_energy,lambda_final\n";
}

std::string summary_csv_row(const RunSummary& s) {
  return s.policy + ',' + std::to_string(s.seed) + ',' + std::to_string(s.n_wds) + ',' +
         std::to_string(s.slots) + ',' + fmt(s.mean_budget) + ',' + fmt(s.mean_aoi) + ',' +
         fmt(s.mean_energy) + ',' + fmt(s.violation_fraction) + ',' + fmt(s.first_window_aoi) +
         ',' + fmt(s.final_window_aoi) + ',' + fmt(s.final_window_energy) + ',' +
         fmt(s.lambda_final) + '\n';
}

std::vector<TraceRow> read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line + '\n' != trace_csv_header())
    throw std::runtime_error(path + ": unexpected trace header");
  std::vector<TraceRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 14) throw std::runtime_error(path + ": malformed trace row");
    TraceRow r;
    r.slot_begin = std::stol(f[0]);
    r.slots = std::stol(f[1]);
    r.wd_slots = std::stol(f[2]);
    r.aoi_sum = std::stol(f[3]);
    r.energy_sum = std::stod(f[4]);
    r.violations = std::stol(f[5]);
    r.clamped = std::stol(f[6]);
    r.lambda_mean = std::stod(f[9]);
    r.critic_loss = std::stod(f[10]);
    r.actor_grad_norm = std::stod(f[11]);
    r.running_aoi = std::stod(f[12]);
    r.running_energy = std::stod(f[13]);
    rows.push_back(r);
  }
  return rows;
}

// ---------------------------------------------------------------- sweeps

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double SweepCell::median_aoi() const {
  std::vector<double> v;
  for (const auto& r : runs) v.push_back(r.mean_aoi);
  return median(v);
}

double SweepCell::median_energy() const {
  std::vector<double> v;
  for (const auto& r : runs) v.push_back(r.mean_energy);
  return median(v);
}

double SweepCell::median_final_aoi() const {
  std::vector<double> v;
  for (const auto& r : runs) v.push_back(r.final_window_aoi);
  return median(v);
}

namespace {

struct Job {
  ExperimentConfig cfg;
  std::uint64_t seed;
  std::size_t cell, slot;
};

void run_jobs(std::vector<Job>& jobs, std::vector<SweepCell>& cells, int workers) {
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(jobs.size());
  auto work = [&] {
    for (std::size_t k = next++; k < jobs.size(); k = next++) {
      try {
        cells[jobs[k].cell].runs[jobs[k].slot] = run_experiment(jobs[k].cfg, jobs[k].seed).summary;
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min<int>(workers, static_cast<int>(jobs.size())));
  if (n == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

std::vector<SweepCell> sweep_n(const ExperimentConfig& base, const std::vector<int>& ns,
                               const std::vector<PolicyKind>& policies,
                               const std::vector<std::uint64_t>& seeds, int jobs) {
  std::vector<SweepCell> cells;
  std::vector<Job> work;
  for (int n : ns) {
    for (PolicyKind p : policies) {
      SweepCell cell;
      cell.parameter = n;
      cell.policy = p;
      cell.runs.resize(seeds.size());
      ExperimentConfig cfg = base;
      cfg.sim = with_n_wds(base.sim, n);
      cfg.policy = p;
      for (std::size_t k = 0; k < seeds.size(); ++k) work.push_back({cfg, seeds[k], cells.size(), k});
      cells.push_back(std::move(cell));
    }
  }
  run_jobs(work, cells, jobs);
  return cells;
}

std::vector<SweepCell> sweep_budget(const ExperimentConfig& base,
                                    const std::vector<double>& multipliers,
                                    const std::vector<PolicyKind>& policies,
                                    const std::vector<std::uint64_t>& seeds, int jobs) {
  std::vector<SweepCell> cells;
  std::vector<Job> work;
  for (double m : multipliers) {
    if (!(m > 0.0)) throw ConfigError("budget_multiplier: must be positive");
    for (PolicyKind p : policies) {
      SweepCell cell;
      cell.parameter = m;
      cell.policy = p;
      cell.runs.resize(seeds.size());
      ExperimentConfig cfg = base;
      cfg.budget_multiplier = base.budget_multiplier * m;
      cfg.policy = p;
      for (std::size_t k = 0; k < seeds.size(); ++k) work.push_back({cfg, seeds[k], cells.size(), k});
      cells.push_back(std::move(cell));
    }
  }
  run_jobs(work, cells, jobs);
  return cells;
}

std::string sweep_csv(const std::vector<SweepCell>& cells, const std::string& parameter_name) {
  std::string out = parameter_name + ',' + summary_csv_header();
  for (const SweepCell& c : cells)
    for (const RunSummary& r : c.runs) out += fmt(c.parameter) + ',' + summary_csv_row(r);
  return out;
}

std::string sweep_median_csv(const std::vector<SweepCell>& cells,
                             const std::string& parameter_name) {
  std::string out = parameter_name + ",policy,seeds,median_aoi,median_energy,median_final_aoi\n";
  for (const SweepCell& c : cells)
    out += fmt(c.parameter) + ',' + policy_name(c.policy) + ',' + std::to_string(c.runs.size()) +
           ',' + fmt(c.median_aoi()) + ',' + fmt(c.median_energy()) + ',' +
           fmt(c.median_final_aoi()) + '\n';
  return out;
}

}  // namespace aoimec
