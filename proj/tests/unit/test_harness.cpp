#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "aoimec/harness.hpp"

using namespace aoimec;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("aoimec_test_" + name);
  fs::remove_all(p);
  return p;
}

ExperimentConfig quick(PolicyKind policy, long slots) {
  ExperimentConfig cfg = profile_config("smoke");
  cfg.policy = policy;
  cfg.sim.horizon_slots = slots;
  cfg.agent.hidden = 16;
  cfg.agent.warmup = 50;
  cfg.agent.batch_size = 8;
  return cfg;
}

}  // namespace

TEST_CASE("profiles") {
  CHECK(profile_config("desk").sim.n_wds == 5);
  CHECK(profile_config("desk").sim.horizon_slots == 20000);
  CHECK(profile_config("full").sim.n_wds == 15);
  CHECK(profile_config("full").sim.horizon_slots == 100000);
  CHECK(profile_config("smoke").sim.n_wds == 2);
  CHECK_THROWS_AS(profile_config("huge"), ConfigError);
}

TEST_CASE("experiment config files") {
  SUBCASE("round trip") {
    ExperimentConfig cfg = profile_config("smoke");
    cfg.policy = PolicyKind::Coo;
    cfg.agent.lambda_init = 123.5;
    cfg.budget_multiplier = 1.1;
    const ExperimentConfig back = experiment_config_from(KeyValueFile::parse(to_key_value(cfg)));
    CHECK(to_key_value(back) == to_key_value(cfg));
    CHECK(back.policy == PolicyKind::Coo);
    CHECK(back.agent.lambda_init == 123.5);
  }
  SUBCASE("errors name the key") {
    const auto message = [](const std::string& text) {
      try {
        experiment_config_from(KeyValueFile::parse(text));
      } catch (const ConfigError& e) {
        return std::string(e.what());
      }
      return std::string();
    };
    CHECK(message("profile = smoke\nlambda_inti = 3\n").find("lambda_inti") != std::string::npos);
    CHECK(message("horizon_slots = -1\n").find("horizon_slots") != std::string::npos);
    CHECK(message("policy = nope\n").find("policy") != std::string::npos);
    CHECK(message("n_wds = many\n").find("n_wds") != std::string::npos);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_experiment_config("/nonexistent/aoimec.conf"), ConfigError);
  }
}

TEST_CASE("budget scaling and resizing") {
  ExperimentConfig cfg = profile_config("desk");
  cfg.policy = PolicyKind::Lpo;
  CHECK(effective_sim_config(cfg).energy_budget[0] == doctest::Approx(3e-3));
  cfg.policy = PolicyKind::Coo;
  cfg.budget_multiplier = 1.5;
  CHECK(effective_sim_config(cfg).energy_budget[0] == doctest::Approx(3e-3));
  cfg.policy_budget_scaling = false;
  CHECK(effective_sim_config(cfg).energy_budget[0] == doctest::Approx(1.5e-3));

  const SimConfig ten = with_n_wds(cfg.sim, 10);
  CHECK(ten.n_wds == 10);
  CHECK(ten.max_freq.size() == 10);
  CHECK(ten.wd_positions.size() == 10);
  const SimConfig again = with_n_wds(cfg.sim, 10);
  for (int i = 0; i < 10; ++i) CHECK(again.distance(i) == ten.distance(i));
}

TEST_CASE("runs") {
  SUBCASE("same seed, same bytes") {
    const fs::path a = scratch("a"), b = scratch("b");
    run_experiment(quick(PolicyKind::Dpds, 300), 7, a.string());
    run_experiment(quick(PolicyKind::Dpds, 300), 7, b.string());
    CHECK(slurp(a / "trace.csv") == slurp(b / "trace.csv"));
    CHECK(slurp(a / "summary.csv") == slurp(b / "summary.csv"));
    CHECK(fs::exists(a / "config.txt"));
    const fs::path c = scratch("c");
    run_experiment(quick(PolicyKind::Dpds, 300), 8, c.string());
    CHECK(slurp(a / "trace.csv") != slurp(c / "trace.csv"));
    fs::remove_all(a);
    fs::remove_all(b);
    fs::remove_all(c);
  }
  SUBCASE("zero horizon writes headers only") {
    const fs::path d = scratch("zero");
    const RunResult r = run_experiment(quick(PolicyKind::Coo, 0), 1, d.string());
    CHECK(r.trace.empty());
    CHECK(slurp(d / "trace.csv") == trace_csv_header());
    CHECK(read_trace_csv((d / "trace.csv").string()).empty());
    fs::remove_all(d);
  }
  SUBCASE("summary recomputes from the written trace") {
    const fs::path d = scratch("summary");
    ExperimentConfig cfg = quick(PolicyKind::Lpo, 2005);  // last row is partial
    cfg.stride = 10;
    const RunResult r = run_experiment(cfg, 3, d.string());
    CHECK(r.trace.size() == 201);
    CHECK(r.trace.back().slots == 5);
    const auto rows = read_trace_csv((d / "trace.csv").string());
    REQUIRE(rows.size() == r.trace.size());
    RunSummary again = r.summary;
    summarize_trace(rows, again);
    CHECK(again.mean_aoi == doctest::Approx(r.summary.mean_aoi).epsilon(1e-9));
    CHECK(again.mean_energy == doctest::Approx(r.summary.mean_energy).epsilon(1e-9));
    CHECK(again.violation_fraction ==
          doctest::Approx(r.summary.violation_fraction).epsilon(1e-9));
    CHECK(again.final_window_aoi == doctest::Approx(r.summary.final_window_aoi).epsilon(1e-9));
    CHECK(again.first_window_aoi == doctest::Approx(r.summary.first_window_aoi).epsilon(1e-9));
    long slots = 0;
    for (const auto& row : rows) slots += row.slots;
    CHECK(slots == 2005);
    fs::remove_all(d);
  }
}

TEST_CASE("sweeps") {
  const ExperimentConfig base = quick(PolicyKind::Coo, 500);
  SUBCASE("one cell, one row") {
    const auto cells = sweep_n(base, {3}, {PolicyKind::Coo}, {1}, 1);
    REQUIRE(cells.size() == 1);
    CHECK(cells[0].runs.size() == 1);
    CHECK(cells[0].runs[0].n_wds == 3);
    std::istringstream csv(sweep_median_csv(cells, "n"));
    std::string line;
    int lines = 0;
    while (std::getline(csv, line)) ++lines;
    CHECK(lines == 2);
  }
  SUBCASE("multiplier one reproduces a plain run") {
    const auto cells = sweep_budget(base, {1.0}, {PolicyKind::Coo}, {4}, 1);
    const RunResult plain = run_experiment(base, 4);
    CHECK(cells[0].runs[0].mean_aoi == plain.summary.mean_aoi);
    CHECK(cells[0].runs[0].mean_energy == plain.summary.mean_energy);
  }
  SUBCASE("threads do not change results") {
    const auto one = sweep_n(base, {2, 3}, {PolicyKind::Lpo, PolicyKind::Coo}, {1, 2}, 1);
    const auto many = sweep_n(base, {2, 3}, {PolicyKind::Lpo, PolicyKind::Coo}, {1, 2}, 3);
    CHECK(sweep_csv(one, "n") == sweep_csv(many, "n"));
  }
  SUBCASE("median") {
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  }
}
