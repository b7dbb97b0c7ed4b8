#include "aoimec/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace aoimec {

double WDState::queued_bits() const {
  double total = 0.0;
  for (const auto& task : task_queue) total += task.remaining_bits;
  return total;
}

Action Action::zeros(int n) {
  const auto size = static_cast<std::size_t>(n);
  return Action{std::vector<double>(size, 0.0), std::vector<double>(size, 0.0),
                std::vector<double>(size, 0.0)};
}

double StepMetrics::mean_aoi() const {
  if (aoi.empty()) return 0.0;
  return static_cast<double>(std::accumulate(aoi.begin(), aoi.end(), 0L)) /
         static_cast<double>(aoi.size());
}

double StepMetrics::mean_energy() const {
  if (energy.empty()) return 0.0;
  return std::accumulate(energy.begin(), energy.end(), 0.0) / static_cast<double>(energy.size());
}

double local_bits(double freq, const SimConfig& cfg) {
  if (freq < 0.0) throw std::domain_error("local_bits: negative CPU frequency");
  return freq * cfg.slot_seconds / cfg.cycles_per_bit;
}

double local_energy(double bits, const SimConfig& cfg) {
  if (bits < 0.0) throw std::domain_error("local_energy: negative bit count");
  const double k = cfg.cycles_per_bit;
  return cfg.energy_eff * k * k * k / (cfg.slot_seconds * cfg.slot_seconds) * bits * bits * bits;
}

double channel_gain(double distance, double fading, const SimConfig& cfg) {
  if (!(distance > 0.0)) throw std::domain_error("channel_gain: distance must be positive");
  if (!(fading > 0.0)) throw std::domain_error("channel_gain: fading must be positive");
  return 1e-3 * std::pow(distance, -cfg.pathloss_exp) * fading;
}

double tx_rate(double power, double bandwidth, double gain, const SimConfig& cfg) {
  if (power < 0.0 || bandwidth < 0.0) throw std::domain_error("tx_rate: negative power or bandwidth");
  if (bandwidth == 0.0) return 0.0;
  return bandwidth * std::log1p(power * gain / cfg.noise_power) / std::log(2.0);
}

double offload_energy(double bits, double bandwidth, double gain, const SimConfig& cfg) {
  if (bits < 0.0) throw std::domain_error("offload_energy: negative bit count");
  if (bits == 0.0) return 0.0;
  if (!(bandwidth > 0.0))
    throw std::domain_error("offload_energy: infeasible, bits offloaded without bandwidth");
  const double dt = cfg.slot_seconds;
  return std::expm1(bits / (bandwidth * dt) * std::log(2.0)) * cfg.noise_power * dt / gain;
}

SystemState initial_state(const SimConfig& cfg, const std::vector<double>& fading) {
  if (static_cast<int>(fading.size()) != cfg.n_wds)
    throw std::invalid_argument("initial_state: one fading draw per WD required");
  SystemState s;
  s.per_wd.resize(static_cast<std::size_t>(cfg.n_wds));
  for (int i = 0; i < cfg.n_wds; ++i)
    s.per_wd[static_cast<std::size_t>(i)].channel_gain =
        channel_gain(cfg.distance(i), fading[static_cast<std::size_t>(i)], cfg);
  return s;
}

namespace {

void refresh_head(WDPostState& w, int queue_len, long slot) {
  w.queue_len = queue_len;
  w.empty = w.task_queue.empty();
  if (w.empty) {
    w.hol_remaining_bits = 0.0;
    w.aoi_slots = 0;
  } else {
    w.hol_remaining_bits = w.task_queue.front().remaining_bits;
    w.aoi_slots = slot - w.task_queue.front().gen_slot;
  }
}

void drain(WDPostState& w, double capacity, DrainMode mode) {
  auto& queue = w.task_queue;
  std::size_t done = 0;
  double processed = 0.0;
  while (capacity > 0.0 && done < queue.size()) {
    Task& task = queue[done];
    if (capacity >= task.remaining_bits) {
      capacity -= task.remaining_bits;
      processed += task.remaining_bits;
      task.remaining_bits = 0.0;
      ++done;
      if (mode == DrainMode::Clamp) break;
    } else {
      task.remaining_bits -= capacity;
      processed += capacity;
      capacity = 0.0;
    }
  }
  queue.erase(queue.begin(), queue.begin() + static_cast<std::ptrdiff_t>(done));
  w.completions = static_cast<int>(done);
  w.processed_bits = processed;
}

double clamp_count(double v, double lo, double hi, int& clamped) {
  if (std::isnan(v)) {
    ++clamped;
    return lo;
  }
  if (v < lo) {
    ++clamped;
    return lo;
  }
  if (v > hi) {
    ++clamped;
    return hi;
  }
  return v;
}

}  // namespace

PostDecisionState apply_processing(const SystemState& s, const std::vector<double>& bits,
                                   const SimConfig& cfg) {
  if (bits.size() != s.per_wd.size())
    throw std::invalid_argument("apply_processing: one bit budget per WD required");
  PostDecisionState pds;
  pds.slot = s.slot;
  pds.per_wd.resize(s.per_wd.size());
  for (std::size_t i = 0; i < s.per_wd.size(); ++i) {
    const WDState& src = s.per_wd[i];
    WDPostState& w = pds.per_wd[i];
    w.channel_gain = src.channel_gain;
    w.task_queue = src.task_queue;
    drain(w, std::max(0.0, bits[i]), cfg.drain_mode);
    // queue_len may exceed the materialized list in replay views.
    const int before = std::max(src.queue_len, static_cast<int>(src.task_queue.size()));
    refresh_head(w, before - w.completions, s.slot);
  }
  return pds;
}

PostDecisionState apply_action(const SystemState& s, const Action& a, const SimConfig& cfg) {
  const int n = s.n_wds();
  if (a.n_wds() != n || static_cast<int>(a.power.size()) != n ||
      static_cast<int>(a.bandwidth.size()) != n)
    throw std::invalid_argument("apply_action: action and state disagree on the number of WDs");
  int clamped = 0;
  std::vector<double> capacity(static_cast<std::size_t>(n));
  std::vector<double> d_local(capacity.size()), d_off(capacity.size()), e_local(capacity.size()),
      e_off(capacity.size());
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const double f = clamp_count(a.freq[k], 0.0, cfg.max_freq[k], clamped);
    const double p = clamp_count(a.power[k], 0.0, cfg.max_power[k], clamped);
    const double w = clamp_count(a.bandwidth[k], 0.0, cfg.bs_bandwidth, clamped);
    d_local[k] = local_bits(f, cfg);
    e_local[k] = local_energy(d_local[k], cfg);
    d_off[k] = tx_rate(p, w, s.per_wd[k].channel_gain, cfg) * cfg.slot_seconds;
    e_off[k] = p * cfg.slot_seconds;
    capacity[k] = d_local[k] + d_off[k];
  }
  PostDecisionState pds = apply_processing(s, capacity, cfg);
  pds.clamped = clamped;
  for (std::size_t k = 0; k < capacity.size(); ++k) {
    auto& w = pds.per_wd[k];
    w.local_bits = d_local[k];
    w.offload_bits = d_off[k];
    w.local_energy = e_local[k];
    w.offload_energy = e_off[k];
  }
  return pds;
}

SystemState advance(const PostDecisionState& pds, const RandomEvents& ev, const SimConfig& cfg) {
  const auto n = pds.per_wd.size();
  if (ev.arrivals.size() != n || ev.new_task_bits.size() != n || ev.fading.size() != n)
    throw std::invalid_argument("advance: events and post-decision state disagree on N");
  SystemState next;
  next.slot = pds.slot + 1;
  next.per_wd.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const WDPostState& src = pds.per_wd[i];
    WDState& w = next.per_wd[i];
    w.task_queue = src.task_queue;
    if (ev.arrivals[i]) {
      const double bits = ev.new_task_bits[i];
      w.task_queue.push_back(Task{pds.slot, bits, bits});
    }
    w.queue_len = static_cast<int>(w.task_queue.size());
    if (w.task_queue.empty()) {
      w.hol_remaining_bits = 0.0;
      w.aoi_slots = 0;
    } else {
      w.hol_remaining_bits = w.task_queue.front().remaining_bits;
      w.aoi_slots = next.slot - w.task_queue.front().gen_slot;
    }
    w.channel_gain = channel_gain(cfg.distance(static_cast<int>(i)), ev.fading[i], cfg);
  }
  return next;
}

StepMetrics metrics_of(const SystemState& s, const PostDecisionState& pds) {
  StepMetrics m;
  m.slot = s.slot;
  m.clamped = pds.clamped;
  for (std::size_t i = 0; i < s.per_wd.size(); ++i) {
    const auto& w = pds.per_wd[i];
    m.aoi.push_back(s.per_wd[i].aoi_slots);
    m.local_energy.push_back(w.local_energy);
    m.offload_energy.push_back(w.offload_energy);
    m.energy.push_back(w.local_energy + w.offload_energy);
    m.processed_bits.push_back(w.processed_bits);
    m.completions.push_back(w.completions);
  }
  return m;
}

Environment::Environment(SimConfig cfg) : cfg_(std::move(cfg)), rng_(cfg_.rng_seed) {
  cfg_.validate();
  std::exponential_distribution<double> fade(1.0);
  std::vector<double> fading(static_cast<std::size_t>(cfg_.n_wds));
  for (auto& f : fading) f = fade(rng_);
  state_ = initial_state(cfg_, fading);
}

RandomEvents Environment::sample_events() {
  const auto n = static_cast<std::size_t>(cfg_.n_wds);
  RandomEvents ev;
  ev.arrivals.resize(n);
  ev.new_task_bits.assign(n, 0.0);
  ev.fading.resize(n);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> size(cfg_.task_bits_min, cfg_.task_bits_max);
  std::exponential_distribution<double> fade(1.0);
  for (std::size_t i = 0; i < n; ++i) {
    ev.arrivals[i] = unit(rng_) < cfg_.arrival_rate[i] ? 1 : 0;
    if (ev.arrivals[i]) ev.new_task_bits[i] = cfg_.task_bits_min == cfg_.task_bits_max
                                                  ? cfg_.task_bits_min
                                                  : size(rng_);
    double f = fade(rng_);
    // exponential_distribution can return exactly zero.
    ev.fading[i] = f > 0.0 ? f : std::numeric_limits<double>::min();
  }
  return ev;
}

StepResult Environment::step(const Action& a) {
  StepResult r;
  r.pds = apply_action(state_, a, cfg_);
  r.events = sample_events();
  r.next = advance(r.pds, r.events, cfg_);
  r.metrics = metrics_of(state_, r.pds);
  r.metrics.arrivals = r.events.arrivals;
  state_ = r.next;
  return r;
}

}  // namespace aoimec
