#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "aoimec/config.hpp"
#include "aoimec/env.hpp"
#include "checks.hpp"
#include "oracles.hpp"

using namespace aoimec;

namespace {

SystemState one_wd(long slot, std::vector<Task> tasks, double gain = 1e-9) {
  SystemState s;
  s.slot = slot;
  WDState w;
  w.task_queue = std::move(tasks);
  w.queue_len = static_cast<int>(w.task_queue.size());
  if (!w.task_queue.empty()) {
    w.hol_remaining_bits = w.task_queue.front().remaining_bits;
    w.aoi_slots = slot - w.task_queue.front().gen_slot;
  }
  w.channel_gain = gain;
  s.per_wd.push_back(w);
  return s;
}

RandomEvents quiet(int n = 1) {
  return RandomEvents{std::vector<int>(n, 0), std::vector<double>(n, 0.0),
                      std::vector<double>(n, 1.0)};
}

}  // namespace

TEST_CASE("local bits and energy") {
  const SimConfig cfg = desk_config();
  CHECK(local_bits(2e9, cfg) == doctest::Approx(20000.0).epsilon(1e-15));
  CHECK(local_bits(0.0, cfg) == 0.0);
  CHECK(local_bits(1e9, cfg) == doctest::Approx(10000.0).epsilon(1e-15));
  CHECK_THROWS_AS(local_bits(-1.0, cfg), std::domain_error);

  CHECK(local_energy(20000.0, cfg) == doctest::Approx(8e-3).epsilon(1e-12));
  CHECK(local_energy(0.0, cfg) == 0.0);
  CHECK(local_energy(10000.0, cfg) == doctest::Approx(1e-3).epsilon(1e-12));
  // Cubic: doubling the bits multiplies the energy by 8.
  CHECK(local_energy(2 * 7321.0, cfg) == doctest::Approx(8 * local_energy(7321.0, cfg)));
}

TEST_CASE("channel gain") {
  const SimConfig cfg = desk_config();
  // 1e-3 * 50^-3.8 evaluated at 40 digits.
  CHECK(channel_gain(50.0, 1.0, cfg) == doctest::Approx(3.498758636618490e-10).epsilon(1e-13));
  CHECK(channel_gain(1.0, 1.0, cfg) == doctest::Approx(1e-3).epsilon(1e-15));
  CHECK(channel_gain(50.0, 2.0, cfg) == doctest::Approx(2 * channel_gain(50.0, 1.0, cfg)));
  CHECK_THROWS_AS(channel_gain(0.0, 1.0, cfg), std::domain_error);
}

TEST_CASE("transmission rate and offload energy") {
  SimConfig cfg = desk_config();
  const double sigma2 = cfg.noise_power;
  const double h = 1e-9;
  CHECK(tx_rate(0.0, 1e6, h, cfg) == 0.0);
  CHECK(tx_rate(sigma2 / h, 1e6, h, cfg) == doctest::Approx(1e6).epsilon(1e-13));
  CHECK(tx_rate(3 * sigma2 / h, 1e6, h, cfg) == doctest::Approx(2e6).epsilon(1e-13));
  CHECK(tx_rate(1.0, 0.0, h, cfg) == 0.0);

  CHECK(offload_energy(0.0, 1e6, h, cfg) == 0.0);
  const double w = 1e6;
  CHECK(offload_energy(w * cfg.slot_seconds, w, h, cfg) == doctest::Approx(1e-4).epsilon(1e-12));
  const double bits = tx_rate(1.0, w, h, cfg) * cfg.slot_seconds;
  CHECK(offload_energy(bits, w, h, cfg) == doctest::Approx(0.01).epsilon(1e-12));
  CHECK_THROWS_AS(offload_energy(10.0, 0.0, h, cfg), std::domain_error);

  // Strictly increasing in bits.
  double prev = 0.0;
  for (double b = 1000.0; b <= 60000.0; b += 1000.0) {
    const double e = offload_energy(b, w, h, cfg);
    CHECK(e > prev);
    prev = e;
  }
}

TEST_CASE("drain with carry-over") {
  const SimConfig cfg = desk_config();
  SimConfig one = checks::one_wd_config();

  SUBCASE("exact completion empties the queue") {
    const auto s = one_wd(10, {Task{7, 100, 100}});
    const auto pds = apply_processing(s, {100.0}, one);
    CHECK(pds.per_wd[0].queue_len == 0);
    CHECK(pds.per_wd[0].hol_remaining_bits == 0.0);
    CHECK(pds.per_wd[0].empty);
    CHECK(pds.per_wd[0].aoi_slots == 0);
    CHECK(pds.per_wd[0].completions == 1);
  }
  SUBCASE("capacity carries into the next task") {
    const long t = 10;
    const auto s = one_wd(t, {Task{t - 5, 100, 100}, Task{t - 3, 50, 50}});
    const auto pds = apply_processing(s, {120.0}, one);
    CHECK(pds.per_wd[0].queue_len == 1);
    CHECK(pds.per_wd[0].hol_remaining_bits == doctest::Approx(30.0));
    CHECK(pds.per_wd[0].aoi_slots == 3);
    CHECK(pds.per_wd[0].completions == 1);
  }
  SUBCASE("partial processing keeps the age") {
    const auto s = one_wd(10, {Task{6, 100, 100}});
    const auto pds = apply_processing(s, {40.0}, one);
    CHECK(pds.per_wd[0].queue_len == 1);
    CHECK(pds.per_wd[0].hol_remaining_bits == doctest::Approx(60.0));
    CHECK(pds.per_wd[0].aoi_slots == 4);
  }
  SUBCASE("clamp stops at one completion") {
    one.drain_mode = DrainMode::Clamp;
    const auto s = one_wd(10, {Task{5, 100, 100}, Task{7, 50, 50}});
    const auto pds = apply_processing(s, {500.0}, one);
    CHECK(pds.per_wd[0].queue_len == 1);
    CHECK(pds.per_wd[0].hol_remaining_bits == 50.0);
    CHECK(pds.per_wd[0].processed_bits == 100.0);
  }
  SUBCASE("energy is charged on offered capacity, even when wasted") {
    SystemState s = one_wd(3, {});
    Action a = Action::zeros(1);
    a.freq = {1e9};
    const auto pds = apply_action(s, a, one);
    CHECK(pds.per_wd[0].processed_bits == 0.0);
    CHECK(pds.per_wd[0].local_energy == doctest::Approx(1e-3));
  }
  (void)cfg;
}

TEST_CASE("advance") {
  const SimConfig one = checks::one_wd_config();
  const long t = 20;
  SUBCASE("empty stays empty without arrivals") {
    const auto pds = apply_processing(one_wd(t, {}), {0.0}, one);
    const auto next = advance(pds, quiet(), one);
    CHECK(next.per_wd[0].aoi_slots == 0);
    CHECK(next.per_wd[0].queue_len == 0);
    CHECK(next.slot == t + 1);
  }
  SUBCASE("arrival into an empty queue has age 1") {
    const auto pds = apply_processing(one_wd(t, {}), {0.0}, one);
    RandomEvents ev{{1}, {30000.0}, {1.0}};
    const auto next = advance(pds, ev, one);
    CHECK(next.per_wd[0].aoi_slots == 1);
    CHECK(next.per_wd[0].queue_len == 1);
    CHECK(next.per_wd[0].hol_remaining_bits == 30000.0);
  }
  SUBCASE("waiting HOL ages by one") {
    const auto pds = apply_processing(one_wd(t, {Task{t - 4, 100, 100}}), {0.0}, one);
    const auto next = advance(pds, quiet(), one);
    CHECK(next.per_wd[0].aoi_slots == 5);
  }
  SUBCASE("channel is redrawn from the fading sample") {
    const auto pds = apply_processing(one_wd(t, {}), {0.0}, one);
    RandomEvents ev{{0}, {0.0}, {2.5}};
    const auto next = advance(pds, ev, one);
    CHECK(next.per_wd[0].channel_gain == channel_gain(one.distance(0), 2.5, one));
  }
}

TEST_CASE("environment step") {
  SimConfig cfg = desk_config();
  cfg.rng_seed = 99;

  SUBCASE("zero action uses no energy and ages queues") {
    Environment env(cfg);
    for (int k = 0; k < 200; ++k) {
      const SystemState before = env.state();
      const auto r = env.step(Action::zeros(cfg.n_wds));
      for (int i = 0; i < cfg.n_wds; ++i) {
        const auto j = static_cast<std::size_t>(i);
        CHECK(r.metrics.energy[j] == 0.0);
        if (before.per_wd[j].queue_len > 0)
          CHECK(r.next.per_wd[j].aoi_slots == before.per_wd[j].aoi_slots + 1);
      }
    }
  }
  SUBCASE("energy is the sum of its parts") {
    Environment env(cfg);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 200; ++k) {
      Action a = Action::zeros(cfg.n_wds);
      for (int i = 0; i < cfg.n_wds; ++i) {
        const auto j = static_cast<std::size_t>(i);
        a.freq[j] = u(rng) * cfg.max_freq[j];
        a.power[j] = u(rng) * cfg.max_power[j];
        a.bandwidth[j] = cfg.bs_bandwidth / cfg.n_wds;
      }
      const auto r = env.step(a);
      for (std::size_t j = 0; j < r.metrics.energy.size(); ++j)
        CHECK(r.metrics.energy[j] == r.metrics.local_energy[j] + r.metrics.offload_energy[j]);
    }
  }
  SUBCASE("seeded runs are reproducible") {
    Environment a(cfg), b(cfg);
    for (int k = 0; k < 300; ++k) {
      Action act = Action::zeros(cfg.n_wds);
      for (auto& f : act.freq) f = 1e9;
      const auto ra = a.step(act);
      const auto rb = b.step(act);
      CHECK(ra.events.arrivals == rb.events.arrivals);
      CHECK(ra.events.new_task_bits == rb.events.new_task_bits);
      CHECK(ra.events.fading == rb.events.fading);
    }
  }
  SUBCASE("out-of-box actions are clamped and counted") {
    Environment env(cfg);
    Action a = Action::zeros(cfg.n_wds);
    a.freq[0] = 10 * cfg.max_freq[0];
    a.power[1] = -1.0;
    const auto r = env.step(a);
    CHECK(r.metrics.clamped == 2);
    CHECK(r.pds.per_wd[0].local_bits == local_bits(cfg.max_freq[0], cfg));
  }
}

TEST_CASE("state invariants hold along a random trace") {
  SimConfig cfg = desk_config();
  cfg.rng_seed = 5;
  Environment env(cfg);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 3000; ++k) {
    Action a = Action::zeros(cfg.n_wds);
    for (int i = 0; i < cfg.n_wds; ++i) {
      const auto j = static_cast<std::size_t>(i);
      a.freq[j] = 0.6 * u(rng) * cfg.max_freq[j];
    }
    const auto r = env.step(a);
    for (const auto& w : r.next.per_wd) {
      REQUIRE(w.queue_len == static_cast<int>(w.task_queue.size()));
      REQUIRE((w.queue_len == 0) == (w.hol_remaining_bits == 0.0));
      REQUIRE((w.queue_len == 0) == (w.aoi_slots == 0));
      if (w.queue_len) REQUIRE(w.aoi_slots == r.next.slot - w.task_queue.front().gen_slot);
      for (const auto& task : w.task_queue) {
        REQUIRE(task.remaining_bits >= 0.0);
        REQUIRE(task.remaining_bits <= task.size_bits);
        REQUIRE(task.size_bits >= cfg.task_bits_min);
        REQUIRE(task.size_bits <= cfg.task_bits_max);
      }
    }
  }
}

TEST_CASE("property suites: AoI oracle, transition cases, duality") {
  const auto a = checks::env_oracle(4000, 21);
  CHECK_MESSAGE(a.pass, a.detail);
  const auto b = checks::transition_cases();
  CHECK_MESSAGE(b.pass, b.detail);
  const auto c = checks::rate_energy_duality(2000, 4);
  CHECK_MESSAGE(c.pass, c.detail);
}

TEST_CASE("config files") {
  SUBCASE("round trip through the key-value format") {
    const SimConfig cfg = desk_config();
    const SimConfig back = sim_config_from(KeyValueFile::parse(to_key_value(cfg)), SimConfig{});
    CHECK(back.n_wds == cfg.n_wds);
    CHECK(back.bs_bandwidth == cfg.bs_bandwidth);
    for (int i = 0; i < cfg.n_wds; ++i) CHECK(back.distance(i) == cfg.distance(i));
    CHECK(to_key_value(back) == to_key_value(cfg));
  }
  SUBCASE("errors name the key") {
    const auto expect_key = [](const std::string& text, const std::string& key) {
      try {
        sim_config_from(KeyValueFile::parse(text), desk_config());
        FAIL("accepted: " << text);
      } catch (const ConfigError& e) {
        CHECK_MESSAGE(std::string(e.what()).find(key) != std::string::npos, e.what());
      }
    };
    expect_key("arrival_rate = 1.5\n", "arrival_rate");
    expect_key("noise_power = -1\n", "noise_power");
    expect_key("task_bits_min = 60000\n", "task_bits_min");
    expect_key("n_wds = 0\n", "n_wds");
  }
  SUBCASE("comments and blank lines") {
    const auto kv = KeyValueFile::parse("# header\n\nn_wds = 3  # trailing\n");
    CHECK(kv.get_long("n_wds", 0) == 3);
  }
}
