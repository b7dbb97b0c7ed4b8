#include "aoimec/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace aoimec {

PolicyKind parse_policy(const std::string& name) {
  if (name == "dpds") return PolicyKind::Dpds;
  if (name == "lpo") return PolicyKind::Lpo;
  if (name == "coo") return PolicyKind::Coo;
  if (name == "dpl") return PolicyKind::Dpl;
  if (name == "addpg") return PolicyKind::Addpg;
  if (name == "dddpg") return PolicyKind::Dddpg;
  throw ConfigError("policy: unknown policy '" + name +
                    "' (expected dpds, lpo, coo, dpl, addpg or dddpg)");
}

std::string policy_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::Dpds: return "dpds";
    case PolicyKind::Lpo: return "lpo";
    case PolicyKind::Coo: return "coo";
    case PolicyKind::Dpl: return "dpl";
    case PolicyKind::Addpg: return "addpg";
    case PolicyKind::Dddpg: return "dddpg";
  }
  return "unknown";
}

double default_budget_multiplier(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::Lpo: return 3.0;
    case PolicyKind::Coo: return 2.0;
    default: return 1.0;
  }
}

// ---------------------------------------------------------------- myopic

namespace {

double drain_limit(const WDState& w, const SimConfig& cfg) {
  return cfg.drain_mode == DrainMode::Clamp ? w.hol_remaining_bits : w.queued_bits();
}

// Minimizes -reduction(min(bits(x), limit)) + lambda max(0, energy(x) - budget)
// over the grid on [0, x_max] plus the extra break points. Ties go to the
// smaller x.
template <class Bits, class Energy>
double minimize_1d(double x_max, int grid_points, std::vector<double> extra, double limit,
                   double lambda, double budget, int wd, const ArrivalEstimates& est,
                   Objective obj, Bits bits, Energy energy) {
  const int g = std::max(grid_points, 2);
  std::vector<double> cand;
  cand.reserve(static_cast<std::size_t>(g) + extra.size());
  for (int k = 0; k < g; ++k) cand.push_back(x_max * k / (g - 1));
  for (double x : extra)
    if (std::isfinite(x)) cand.push_back(std::clamp(x, 0.0, x_max));
  std::sort(cand.begin(), cand.end());

  double best_x = 0.0, best = std::numeric_limits<double>::infinity();
  for (double x : cand) {
    const double c = -expected_reduction(std::min(bits(x), limit), wd, est, obj) +
                     lambda * std::max(0.0, energy(x) - budget);
    if (c < best) {
      best = c;
      best_x = x;
    }
  }
  return best_x;
}

}  // namespace

Action lpo_policy(const SystemState& s, const LagrangeMultipliers& lm, const ArrivalEstimates& est,
                  const SimConfig& cfg, const MyopicOptions& opt) {
  const int n = s.n_wds();
  Action a = Action::zeros(n);
  const double dt = cfg.slot_seconds, kappa = cfg.cycles_per_bit;
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const WDState& w = s.per_wd[k];
    if (w.queue_len == 0) continue;
    if (opt.fixed_max) {
      a.freq[k] = cfg.max_freq[k];
      continue;
    }
    const double limit = drain_limit(w, cfg);
    const double budget = cfg.energy_budget[k];
    const double bits_at_budget =
        std::cbrt(budget * dt * dt / (cfg.energy_eff * kappa * kappa * kappa));
    a.freq[k] = minimize_1d(
        cfg.max_freq[k], opt.grid_points, {bits_at_budget * kappa / dt, limit * kappa / dt}, limit,
        lm.lambda[k], budget, i, est, Objective::Aoi,
        [&](double f) { return local_bits(f, cfg); },
        [&](double f) { return local_energy(local_bits(f, cfg), cfg); });
  }
  return a;
}

Action coo_policy(const SystemState& s, const LagrangeMultipliers& lm, const ArrivalEstimates& est,
                  const SimConfig& cfg, const MyopicOptions& opt) {
  const int n = s.n_wds();
  Action a = Action::zeros(n);
  int busy = 0;
  for (const auto& w : s.per_wd) busy += w.queue_len > 0 ? 1 : 0;
  if (busy == 0) return a;
  const double share = cfg.bs_bandwidth / busy;
  const double dt = cfg.slot_seconds;
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const WDState& w = s.per_wd[k];
    if (w.queue_len == 0) continue;
    a.bandwidth[k] = share;
    if (opt.fixed_max) {
      a.power[k] = cfg.max_power[k];
      continue;
    }
    const double h = w.channel_gain;
    const double limit = drain_limit(w, cfg);
    const double budget = cfg.energy_budget[k];
    const double p_drain = std::expm1(limit / (share * dt) * std::log(2.0)) * cfg.noise_power / h;
    a.power[k] = minimize_1d(
        cfg.max_power[k], opt.grid_points, {budget / dt, p_drain}, limit, lm.lambda[k], budget, i,
        est, Objective::Aoi, [&](double p) { return tx_rate(p, share, h, cfg) * dt; },
        [&](double p) { return p * dt; });
  }
  return a;
}

// ---------------------------------------------------------------- DDPG

DdpgAgent::DdpgAgent(const SimConfig& cfg, const AgentConfig& acfg, bool average_reward)
    : cfg_(cfg),
      acfg_(acfg),
      average_(average_reward),
      feat_(cfg, acfg.a_scale, acfg.q_scale, !acfg.strict_arch),
      rng_(acfg.seed),
      lambda_(LagrangeMultipliers::uniform(cfg.n_wds, acfg.lambda_init, acfg.lambda_max,
                                           acfg.eta_scale)),
      est_(ArrivalEstimates::from_config(cfg, acfg.estimate_decay)),
      buffer_(acfg.buffer_capacity) {
  if (!average_reward && (acfg.discount < 0.0 || acfg.discount >= 1.0))
    throw std::invalid_argument("DdpgAgent: discount must lie in [0, 1)");
  actor_ = nn::Mlp(nn::actor_arch(feat_.size(), cfg.n_wds, acfg.hidden), rng_);
  critic_ = nn::Mlp(nn::value_arch(feat_.size() + 3 * cfg.n_wds, acfg.hidden), rng_);
  actor_target_ = actor_;
  critic_target_ = critic_;
}

std::pair<NormalizedAction, Action> DdpgAgent::select_action(const SystemState& s, bool explore) {
  nn::Matrix x(1, feat_.size());
  feat_.encode(s, x.data());
  nn::Matrix out = actor_.evaluate(x, nn::Mode::Infer);
  if (explore && acfg_.exploration_noise > 0.0) {
    std::normal_distribution<double> noise(0.0, acfg_.exploration_noise);
    for (Eigen::Index j = 0; j < out.cols(); ++j)
      out(0, j) = std::clamp(out(0, j) + noise(rng_), 0.0, 1.0);
  }
  NormalizedAction na = NormalizedAction::from_row(out.data(), cfg_.n_wds);
  Action a = denormalize(na, cfg_);
  return {std::move(na), std::move(a)};
}

double DdpgAgent::collection_cost(const SystemState& s, const PostDecisionState& pds) const {
  return acfg_.ddpg_redesigned_cost ? redesigned_cost(s, pds, lambda_, est_, cfg_, acfg_.objective)
                                    : lagrangian_cost(s, pds, lambda_, cfg_, acfg_.objective);
}

nn::Matrix DdpgAgent::critic_input(const std::vector<const SystemState*>& states,
                                   const nn::Matrix& actions) const {
  const int f = feat_.size();
  nn::Matrix z(static_cast<Eigen::Index>(states.size()), f + 3 * cfg_.n_wds);
  z.leftCols(f) = feat_.encode(states);
  z.rightCols(3 * cfg_.n_wds) = actions;
  return z;
}

double DdpgAgent::q_value(const SystemState& s, const NormalizedAction& na) const {
  nn::Matrix act(1, 3 * cfg_.n_wds);
  na.to_row(act.data());
  return critic_.evaluate(critic_input({&s}, act), nn::Mode::Infer)(0, 0);
}

std::vector<double> DdpgAgent::critic_targets(const std::vector<const Experience*>& batch) const {
  std::vector<const SystemState*> next(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) next[b] = &batch[b]->next_state;
  const nn::Matrix na_next = actor_target_.evaluate(feat_.encode(next), nn::Mode::Infer);
  const nn::Matrix q_next =
      critic_target_.evaluate(critic_input(next, na_next), nn::Mode::Infer);
  std::vector<double> y(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const double q = q_next(static_cast<Eigen::Index>(b), 0);
    y[b] = average_ ? batch[b]->stored_cost - v_avg_target_ + q
                    : batch[b]->stored_cost + acfg_.discount * q;
  }
  return y;
}

double DdpgAgent::critic_update(const std::vector<const Experience*>& batch) {
  if (batch.empty()) return 0.0;
  const std::vector<double> y = critic_targets(batch);
  std::vector<const SystemState*> states(batch.size());
  nn::Matrix act(static_cast<Eigen::Index>(batch.size()), 3 * cfg_.n_wds);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    states[b] = &batch[b]->state;
    batch[b]->norm_action.to_row(act.row(static_cast<Eigen::Index>(b)).data());
  }
  nn::ForwardCache cache;
  const nn::Matrix pred = critic_.forward(critic_input(states, act), nn::Mode::Train, &cache);
  const auto bsz = static_cast<double>(batch.size());
  nn::Matrix upstream(pred.rows(), 1);
  double loss = 0.0;
  for (Eigen::Index b = 0; b < pred.rows(); ++b) {
    const double err = pred(b, 0) - y[static_cast<std::size_t>(b)];
    loss += err * err;
    upstream(b, 0) = 2.0 * err / bsz;
  }
  critic_.adam_step(critic_.backward(cache, upstream).params, acfg_.value_lr);
  return loss / bsz;
}

double DdpgAgent::actor_update(const std::vector<const Experience*>& batch) {
  if (batch.empty()) return 0.0;
  std::vector<const SystemState*> states(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) states[b] = &batch[b]->state;
  nn::ForwardCache acache, qcache;
  const nn::Matrix out = actor_.forward(feat_.encode(states), nn::Mode::Train, &acache);
  const nn::Matrix q = critic_.evaluate(critic_input(states, out), nn::Mode::Infer, &qcache);
  const nn::Matrix ones = nn::Matrix::Constant(q.rows(), 1, 1.0 / static_cast<double>(q.rows()));
  const nn::Matrix dq = critic_.backward(qcache, ones).input;
  const nn::Matrix upstream = dq.rightCols(3 * cfg_.n_wds);
  const nn::Gradients g = actor_.backward(acache, upstream);
  actor_.adam_step(g.params, acfg_.actor_lr);
  return std::sqrt(g.params.squared_norm());
}

void DdpgAgent::soft_update_targets() {
  critic_target_.soft_update(critic_, acfg_.omega);
  actor_target_.soft_update(actor_, acfg_.omega);
  v_avg_target_ = acfg_.omega * v_avg_ + (1.0 - acfg_.omega) * v_avg_target_;
}

StepMetrics DdpgAgent::train_step(Environment& env) {
  const SystemState s = env.state();
  auto [na, action] = select_action(s, true);
  StepResult r = env.step(action);
  const double c = collection_cost(s, r.pds);
  est_.observe(r.events);
  buffer_.push(Experience{replay_view(s, cfg_), na, replay_view(r.next, cfg_), c});
  ++steps_;

  stats_.trained = buffer_.size() >= std::max<std::size_t>(acfg_.warmup, 1);
  if (stats_.trained) {
    const auto batch = buffer_.sample(static_cast<std::size_t>(acfg_.batch_size), rng_);
    stats_.critic_loss = critic_update(batch);
    stats_.actor_grad_norm = actor_update(batch);
    if (average_) {
      const auto greedy_q = [&](const SystemState& x) {
        nn::Matrix in(1, feat_.size());
        feat_.encode(x, in.data());
        const nn::Matrix out = actor_.evaluate(in, nn::Mode::Infer);
        return q_value(x, NormalizedAction::from_row(out.data(), cfg_.n_wds));
      };
      ++avg_updates_;
      const double beta = 1.0 / std::sqrt(static_cast<double>(avg_updates_));
      v_avg_ = (1.0 - beta) * v_avg_ + beta * (c + greedy_q(r.next) - greedy_q(s));
    }
    soft_update_targets();
  }
  update_lambda(lambda_, r.metrics.energy, steps_, cfg_);
  return r.metrics;
}

// ---------------------------------------------------------------- schedulers

namespace {

class MyopicScheduler final : public Scheduler {
 public:
  MyopicScheduler(bool local, const SimConfig& cfg, const AgentConfig& acfg,
                  const MyopicOptions& opt)
      : local_(local),
        cfg_(cfg),
        opt_(opt),
        lambda_(LagrangeMultipliers::uniform(cfg.n_wds, acfg.lambda_init, acfg.lambda_max,
                                             acfg.eta_scale)),
        est_(ArrivalEstimates::from_config(cfg, acfg.estimate_decay)) {}

  StepMetrics step(Environment& env) override {
    const Action a = local_ ? lpo_policy(env.state(), lambda_, est_, cfg_, opt_)
                            : coo_policy(env.state(), lambda_, est_, cfg_, opt_);
    StepResult r = env.step(a);
    est_.observe(r.events);
    update_lambda(lambda_, r.metrics.energy, ++steps_, cfg_);
    return r.metrics;
  }
  double lambda_mean() const override { return mean(lambda_.lambda); }

  static double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  }

 private:
  bool local_;
  SimConfig cfg_;
  MyopicOptions opt_;
  LagrangeMultipliers lambda_;
  ArrivalEstimates est_;
  long steps_ = 0;
};

class DpdsScheduler final : public Scheduler {
 public:
  DpdsScheduler(const SimConfig& cfg, const AgentConfig& acfg) : agent_(cfg, acfg) {}
  StepMetrics step(Environment& env) override { return agent_.train_step(env); }
  double lambda_mean() const override {
    return MyopicScheduler::mean(agent_.multipliers().lambda);
  }
  TrainStats stats() const override { return agent_.last_stats(); }

 private:
  DpdsAgent agent_;
};

class DdpgScheduler final : public Scheduler {
 public:
  DdpgScheduler(const SimConfig& cfg, const AgentConfig& acfg, bool average)
      : agent_(cfg, acfg, average) {}
  StepMetrics step(Environment& env) override { return agent_.train_step(env); }
  double lambda_mean() const override {
    return MyopicScheduler::mean(agent_.multipliers().lambda);
  }
  TrainStats stats() const override { return agent_.last_stats(); }

 private:
  DdpgAgent agent_;
};

}  // namespace

std::unique_ptr<Scheduler> make_scheduler(PolicyKind kind, const SimConfig& cfg,
                                          const AgentConfig& acfg, const MyopicOptions& opt) {
  switch (kind) {
    case PolicyKind::Lpo: return std::make_unique<MyopicScheduler>(true, cfg, acfg, opt);
    case PolicyKind::Coo: return std::make_unique<MyopicScheduler>(false, cfg, acfg, opt);
    case PolicyKind::Dpds: {
      AgentConfig a = acfg;
      a.objective = Objective::Aoi;
      return std::make_unique<DpdsScheduler>(cfg, a);
    }
    case PolicyKind::Dpl: {
      AgentConfig a = acfg;
      a.objective = Objective::Delay;
      return std::make_unique<DpdsScheduler>(cfg, a);
    }
    case PolicyKind::Addpg: return std::make_unique<DdpgScheduler>(cfg, acfg, true);
    case PolicyKind::Dddpg: return std::make_unique<DdpgScheduler>(cfg, acfg, false);
  }
  throw std::invalid_argument("make_scheduler: unknown policy kind");
}

}  // namespace aoimec
