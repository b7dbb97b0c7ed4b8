#include "aoimec/cost.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace aoimec {

LagrangeMultipliers LagrangeMultipliers::uniform(int n, double init, double lambda_max,
                                                 double eta_scale) {
  LagrangeMultipliers lm;
  lm.lambda.assign(static_cast<std::size_t>(n), std::clamp(init, 0.0, lambda_max));
  lm.lambda_max = lambda_max;
  lm.eta_scale = eta_scale;
  return lm;
}

double LagrangeMultipliers::eta(long slot) const {
  const double t = static_cast<double>(std::max(slot, 1L));
  return eta_scale * 1e2 * std::min(1.0, 10.0 / std::log(t + 1.0));
}

ArrivalEstimates ArrivalEstimates::from_config(const SimConfig& cfg, double decay) {
  ArrivalEstimates est;
  est.rate_est = cfg.arrival_rate;
  est.mean_bits_est.assign(static_cast<std::size_t>(cfg.n_wds), cfg.mean_task_bits());
  est.tasks_seen.assign(static_cast<std::size_t>(cfg.n_wds), 0);
  est.decay = decay;
  return est;
}

void ArrivalEstimates::observe(const RandomEvents& ev) {
  for (std::size_t i = 0; i < rate_est.size(); ++i) {
    const double g = ev.arrivals[i] ? 1.0 : 0.0;
    // Floor keeps 1 / rate finite; an EMA of a Bernoulli stream can get small.
    rate_est[i] = std::max(decay * rate_est[i] + (1.0 - decay) * g, 1e-3);
    if (ev.arrivals[i]) {
      mean_bits_est[i] = decay * mean_bits_est[i] + (1.0 - decay) * ev.new_task_bits[i];
      ++tasks_seen[i];
    }
  }
}

ActionGradient ActionGradient::zeros(int n) {
  const auto size = static_cast<std::size_t>(n);
  return {std::vector<double>(size, 0.0), std::vector<double>(size, 0.0),
          std::vector<double>(size, 0.0)};
}

namespace {

double state_term(const WDState& w, Objective obj) {
  return obj == Objective::Aoi ? static_cast<double>(w.aoi_slots)
                               : static_cast<double>(w.queue_len);
}

double drain_limit(const WDState& w, const SimConfig& cfg) {
  return cfg.drain_mode == DrainMode::Clamp ? w.hol_remaining_bits : w.queued_bits();
}

}  // namespace

double lagrangian_cost(const SystemState& s, const PostDecisionState& pds,
                       const LagrangeMultipliers& lm, const SimConfig& cfg, Objective obj) {
  double c = 0.0;
  for (std::size_t i = 0; i < s.per_wd.size(); ++i)
    c += state_term(s.per_wd[i], obj) +
         lm.lambda[i] * (pds.per_wd[i].energy() - cfg.energy_budget[i]);
  return c;
}

double expected_reduction(double bits, int wd, const ArrivalEstimates& est, Objective obj) {
  const auto i = static_cast<std::size_t>(wd);
  const double per_task = bits / est.mean_bits_est[i];
  return obj == Objective::Aoi ? per_task / est.rate_est[i] : per_task;
}

double redesigned_cost(const SystemState& s, const PostDecisionState& pds,
                       const LagrangeMultipliers& lm, const ArrivalEstimates& est,
                       const SimConfig& cfg, Objective obj) {
  double c = 0.0;
  for (std::size_t i = 0; i < s.per_wd.size(); ++i) {
    const auto& w = pds.per_wd[i];
    c += state_term(s.per_wd[i], obj) -
         expected_reduction(w.processed_bits, static_cast<int>(i), est, obj) +
         lm.lambda[i] * std::max(0.0, w.energy() - cfg.energy_budget[i]);
  }
  return c;
}

double redesigned_cost(const SystemState& s, const Action& a, const LagrangeMultipliers& lm,
                       const ArrivalEstimates& est, const SimConfig& cfg, Objective obj) {
  return redesigned_cost(s, apply_action(s, a, cfg), lm, est, cfg, obj);
}

ActionGradient cost_grad_action(const SystemState& s, const Action& a,
                                const LagrangeMultipliers& lm, const ArrivalEstimates& est,
                                const SimConfig& cfg, Objective obj) {
  const int n = s.n_wds();
  ActionGradient g = ActionGradient::zeros(n);
  const double dt = cfg.slot_seconds;
  const double ln2 = std::log(2.0);
  for (int wd = 0; wd < n; ++wd) {
    const auto i = static_cast<std::size_t>(wd);
    const double f = std::clamp(a.freq[i], 0.0, cfg.max_freq[i]);
    const double p = std::clamp(a.power[i], 0.0, cfg.max_power[i]);
    const double bw = std::clamp(a.bandwidth[i], 0.0, cfg.bs_bandwidth);
    const double h = s.per_wd[i].channel_gain;
    const double sigma2 = cfg.noise_power;

    const double d_local = local_bits(f, cfg);
    const double d_off = tx_rate(p, bw, h, cfg) * dt;
    const double e_total = local_energy(d_local, cfg) + p * dt;

    // d(reduction)/d(bits) is constant while the queue is not exhausted.
    const double per_bit = d_local + d_off < drain_limit(s.per_wd[i], cfg)
                               ? expected_reduction(1.0, wd, est, obj)
                               : 0.0;
    const double dbits_df = dt / cfg.cycles_per_bit;
    const double dbits_dp = bw * dt * h / ((sigma2 + p * h) * ln2);
    const double dbits_dw = dt * std::log1p(p * h / sigma2) / ln2;

    const double penalty = e_total > cfg.energy_budget[i] ? lm.lambda[i] : 0.0;
    const double de_df = 3.0 * cfg.energy_eff * f * f * dt;
    const double de_dp = dt;

    g.freq[i] = -per_bit * dbits_df + penalty * de_df;
    g.power[i] = -per_bit * dbits_dp + penalty * de_dp;
    g.bandwidth[i] = -per_bit * dbits_dw;
  }
  return g;
}

void update_lambda(LagrangeMultipliers& lm, const std::vector<double>& energy, long slot,
                   const SimConfig& cfg) {
  if (energy.size() != lm.lambda.size())
    throw std::invalid_argument("update_lambda: one energy value per multiplier required");
  const double eta = lm.eta(slot);
  for (std::size_t i = 0; i < lm.lambda.size(); ++i)
    lm.lambda[i] =
        std::clamp(lm.lambda[i] + eta * (energy[i] - cfg.energy_budget[i]), 0.0, lm.lambda_max);
}

}  // namespace aoimec
