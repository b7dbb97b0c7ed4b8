#include <doctest.h>

#include <cmath>
#include <random>

#include "aoimec/baselines.hpp"
#include "checks.hpp"

using namespace aoimec;

namespace {

SystemState random_state(const SimConfig& cfg, std::mt19937_64& rng, double p_empty = 0.3) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> q(1, 6);
  SystemState s;
  s.slot = 100;
  for (int i = 0; i < cfg.n_wds; ++i) {
    WDState w;
    const int tasks = u(rng) < p_empty ? 0 : q(rng);
    for (int k = 0; k < tasks; ++k) {
      const double bits = cfg.task_bits_min + u(rng) * (cfg.task_bits_max - cfg.task_bits_min);
      w.task_queue.push_back(Task{s.slot - 8 + k, bits, bits});
    }
    w.queue_len = tasks;
    w.hol_remaining_bits = tasks ? w.task_queue.front().remaining_bits : 0.0;
    w.aoi_slots = tasks ? 8 : 0;
    w.channel_gain = channel_gain(cfg.distance(i), 0.2 + 2.0 * u(rng), cfg);
    s.per_wd.push_back(w);
  }
  return s;
}

struct Fixture {
  SimConfig cfg = desk_config();
  ArrivalEstimates est = ArrivalEstimates::from_config(cfg);
  LagrangeMultipliers lm = LagrangeMultipliers::uniform(cfg.n_wds, 5000.0);
};

void constant_head(nn::Mlp& net, const std::vector<double>& bias) {
  auto& head = std::get<nn::DenseLayer>(net.mutable_layers().back());
  head.weights.setZero();
  for (std::size_t k = 0; k < bias.size(); ++k) head.bias[static_cast<Eigen::Index>(k)] = bias[k];
}

}  // namespace

TEST_CASE("policy names") {
  for (auto k : {PolicyKind::Dpds, PolicyKind::Lpo, PolicyKind::Coo, PolicyKind::Dpl,
                 PolicyKind::Addpg, PolicyKind::Dddpg})
    CHECK(parse_policy(policy_name(k)) == k);
  CHECK_THROWS_AS(parse_policy("greedy"), ConfigError);
  CHECK(default_budget_multiplier(PolicyKind::Lpo) == 3.0);
  CHECK(default_budget_multiplier(PolicyKind::Coo) == 2.0);
  CHECK(default_budget_multiplier(PolicyKind::Dpds) == 1.0);
}

TEST_CASE("local processing only") {
  Fixture fx;
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const SystemState s = random_state(fx.cfg, rng);
    const Action a = lpo_policy(s, fx.lm, fx.est, fx.cfg);
    const auto pds = apply_action(s, a, fx.cfg);
    for (int i = 0; i < fx.cfg.n_wds; ++i) {
      const auto k = static_cast<std::size_t>(i);
      CHECK(a.power[k] == 0.0);
      CHECK(a.bandwidth[k] == 0.0);
      CHECK(pds.per_wd[k].offload_energy == 0.0);
      CHECK(a.freq[k] >= 0.0);
      CHECK(a.freq[k] <= fx.cfg.max_freq[k]);
      if (s.per_wd[k].queue_len == 0) CHECK(a.freq[k] == 0.0);
    }
  }
  SUBCASE("a prohibitive multiplier stops at the budget") {
    LagrangeMultipliers big = LagrangeMultipliers::uniform(fx.cfg.n_wds, 1e12, 1e12);
    for (int trial = 0; trial < 50; ++trial) {
      const SystemState s = random_state(fx.cfg, rng, 0.0);
      const auto pds = apply_action(s, lpo_policy(s, big, fx.est, fx.cfg), fx.cfg);
      for (int i = 0; i < fx.cfg.n_wds; ++i) {
        const auto k = static_cast<std::size_t>(i);
        CHECK(pds.per_wd[k].energy() <= fx.cfg.energy_budget[k] * (1.0 + 1e-9));
      }
    }
  }
  SUBCASE("fixed-max variant") {
    MyopicOptions opt;
    opt.fixed_max = true;
    const SystemState s = random_state(fx.cfg, rng);
    const Action a = lpo_policy(s, fx.lm, fx.est, fx.cfg, opt);
    for (int i = 0; i < fx.cfg.n_wds; ++i) {
      const auto k = static_cast<std::size_t>(i);
      CHECK(a.freq[k] == (s.per_wd[k].queue_len ? fx.cfg.max_freq[k] : 0.0));
    }
  }
  SUBCASE("the grid choice is no worse than any grid point") {
    const SimConfig one = checks::one_wd_config();
    const ArrivalEstimates est = ArrivalEstimates::from_config(one);
    const LagrangeMultipliers lm = LagrangeMultipliers::uniform(1, 3000.0);
    for (int trial = 0; trial < 30; ++trial) {
      const SystemState s = random_state(one, rng, 0.0);
      const double best = redesigned_cost(s, lpo_policy(s, lm, est, one), lm, est, one);
      for (int g = 0; g <= 200; ++g) {
        Action a = Action::zeros(1);
        a.freq = {one.max_freq[0] * g / 200.0};
        REQUIRE(best <= redesigned_cost(s, a, lm, est, one) + 1e-12);
      }
    }
  }
}

TEST_CASE("offloading only") {
  Fixture fx;
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const SystemState s = random_state(fx.cfg, rng);
    const Action a = coo_policy(s, fx.lm, fx.est, fx.cfg);
    const auto pds = apply_action(s, a, fx.cfg);
    int busy = 0;
    for (const auto& w : s.per_wd) busy += w.queue_len > 0;
    double sum = 0.0;
    for (int i = 0; i < fx.cfg.n_wds; ++i) {
      const auto k = static_cast<std::size_t>(i);
      CHECK(a.freq[k] == 0.0);
      CHECK(pds.per_wd[k].local_energy == 0.0);
      CHECK(a.power[k] >= 0.0);
      CHECK(a.power[k] <= fx.cfg.max_power[k]);
      if (s.per_wd[k].queue_len == 0) {
        CHECK(a.power[k] == 0.0);
        CHECK(a.bandwidth[k] == 0.0);
      } else {
        CHECK(a.bandwidth[k] == fx.cfg.bs_bandwidth / busy);
      }
      sum += a.bandwidth[k];
    }
    CHECK(sum <= fx.cfg.bs_bandwidth * (1.0 + 1e-12));
  }
  SUBCASE("a single busy device takes the whole band") {
    SystemState s = random_state(fx.cfg, rng, 0.0);
    for (std::size_t k = 1; k < s.per_wd.size(); ++k) {
      s.per_wd[k].task_queue.clear();
      s.per_wd[k].queue_len = 0;
      s.per_wd[k].hol_remaining_bits = 0.0;
      s.per_wd[k].aoi_slots = 0;
    }
    CHECK(coo_policy(s, fx.lm, fx.est, fx.cfg).bandwidth[0] == fx.cfg.bs_bandwidth);
  }
  SUBCASE("all queues empty gives the zero action") {
    const SystemState s = random_state(fx.cfg, rng, 1.0);
    const Action a = coo_policy(s, fx.lm, fx.est, fx.cfg);
    for (int i = 0; i < fx.cfg.n_wds; ++i) {
      const auto k = static_cast<std::size_t>(i);
      CHECK(a.freq[k] == 0.0);
      CHECK(a.power[k] == 0.0);
      CHECK(a.bandwidth[k] == 0.0);
    }
  }
}

TEST_CASE("ddpg agents") {
  const SimConfig cfg = checks::one_wd_config();
  AgentConfig ac;
  ac.hidden = 16;
  ac.batch_size = 8;
  ac.warmup = 20;
  std::mt19937_64 rng(5);

  Experience e;
  e.state = random_state(cfg, rng, 0.0);
  e.next_state = random_state(cfg, rng, 0.0);
  e.norm_action = NormalizedAction{{0.3}, {0.6}, {1.0}};
  e.stored_cost = 4.25;

  SUBCASE("zero discount makes the target the stored cost") {
    AgentConfig d = ac;
    d.discount = 0.0;
    DdpgAgent agent(cfg, d, false);
    CHECK(agent.critic_targets({&e})[0] == 4.25);
  }
  SUBCASE("average-cost target") {
    DdpgAgent agent(cfg, ac, true);
    constant_head(agent.critic_target(), {1.5});
    CHECK(agent.critic_targets({&e})[0] == doctest::Approx(4.25 + 1.5 - agent.v_avg_target()));
  }
  SUBCASE("zero loss when the critic already matches") {
    AgentConfig d = ac;
    d.discount = 0.0;
    DdpgAgent agent(cfg, d, false);
    constant_head(agent.critic(), {4.25});
    CHECK(agent.critic_update({&e, &e}) == doctest::Approx(0.0).epsilon(1e-24));
  }
  SUBCASE("exploration stays feasible") {
    DdpgAgent agent(desk_config(), ac, true);
    const SimConfig desk = desk_config();
    for (int k = 0; k < 200; ++k) {
      const SystemState s = random_state(desk, rng);
      const auto [na, a] = agent.select_action(s, true);
      double sum = 0.0;
      for (int i = 0; i < desk.n_wds; ++i) {
        const auto j = static_cast<std::size_t>(i);
        REQUIRE(na.fhat[j] >= 0.0);
        REQUIRE(na.fhat[j] <= 1.0);
        REQUIRE(na.phat[j] >= 0.0);
        REQUIRE(na.phat[j] <= 1.0);
        sum += a.bandwidth[j];
      }
      REQUIRE(std::abs(sum - desk.bs_bandwidth) / desk.bs_bandwidth < 1e-9);
    }
  }
  SUBCASE("collection cost uses the lagrangian by default") {
    DdpgAgent agent(cfg, ac, true);
    const Action a = denormalize(e.norm_action, cfg);
    const auto pds = apply_action(e.state, a, cfg);
    CHECK(agent.collection_cost(e.state, pds) ==
          lagrangian_cost(e.state, pds, agent.multipliers(), cfg));
  }
  SUBCASE("training runs and stores experiences") {
    Environment env(cfg);
    DdpgAgent agent(cfg, ac, false);
    for (int k = 0; k < 60; ++k) agent.train_step(env);
    CHECK(agent.buffer().size() == 60);
    CHECK(agent.last_stats().trained);
  }
}

TEST_CASE("schedulers") {
  const SimConfig cfg = checks::one_wd_config();
  AgentConfig ac;
  ac.hidden = 16;
  ac.batch_size = 8;
  ac.warmup = 20;
  for (auto kind : {PolicyKind::Dpds, PolicyKind::Lpo, PolicyKind::Coo, PolicyKind::Dpl,
                    PolicyKind::Addpg, PolicyKind::Dddpg}) {
    CAPTURE(policy_name(kind));
    Environment env(cfg);
    auto sched = make_scheduler(kind, cfg, ac);
    for (int k = 0; k < 50; ++k) {
      const StepMetrics m = sched->step(env);
      REQUIRE(m.clamped == 0);
      REQUIRE(std::isfinite(m.energy[0]));
    }
    CHECK(std::isfinite(sched->lambda_mean()));
  }
}
