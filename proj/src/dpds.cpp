#include "aoimec/dpds.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "binio.hpp"

namespace aoimec {

// ---------------------------------------------------------------- features

StateFeaturizer::StateFeaturizer(const SimConfig& cfg, double a_scale, double q_scale,
                                 bool empty_flag)
    : n_(cfg.n_wds),
      empty_flag_(empty_flag),
      bits_scale_(cfg.task_bits_max),
      a_scale_(a_scale),
      q_scale_(q_scale) {
  if (a_scale <= 0.0 || q_scale <= 0.0)
    throw std::invalid_argument("StateFeaturizer: scales must be positive");
  double d_min = cfg.distance(0), d_max = d_min;
  for (int i = 1; i < cfg.n_wds; ++i) {
    d_min = std::min(d_min, cfg.distance(i));
    d_max = std::max(d_max, cfg.distance(i));
  }
  // Fading between 1e-3 and 10 covers all but ~5e-5 of the Exp(1) mass.
  log_h_lo_ = std::log(channel_gain(d_max, 1e-3, cfg));
  const double log_h_hi = std::log(channel_gain(d_min, 10.0, cfg));
  log_h_span_ = std::max(log_h_hi - log_h_lo_, 1e-9);
}

double StateFeaturizer::gain_feature(double h) const {
  return (std::log(std::max(h, 1e-300)) - log_h_lo_) / log_h_span_;
}

void StateFeaturizer::encode(const SystemState& s, double* row) const {
  if (s.n_wds() != n_) throw std::invalid_argument("StateFeaturizer: wrong number of WDs");
  for (int i = 0; i < n_; ++i) {
    const WDState& w = s.per_wd[static_cast<std::size_t>(i)];
    double* r = row + i * per_wd();
    r[0] = w.hol_remaining_bits / bits_scale_;
    r[1] = static_cast<double>(w.aoi_slots) / a_scale_;
    r[2] = static_cast<double>(w.queue_len) / q_scale_;
    r[3] = gain_feature(w.channel_gain);
    if (empty_flag_) r[4] = w.queue_len == 0 ? 1.0 : 0.0;
  }
}

void StateFeaturizer::encode(const PostDecisionState& s, double* row) const {
  if (s.n_wds() != n_) throw std::invalid_argument("StateFeaturizer: wrong number of WDs");
  for (int i = 0; i < n_; ++i) {
    const WDPostState& w = s.per_wd[static_cast<std::size_t>(i)];
    double* r = row + i * per_wd();
    r[0] = w.hol_remaining_bits / bits_scale_;
    r[1] = static_cast<double>(w.aoi_slots) / a_scale_;
    r[2] = static_cast<double>(w.queue_len) / q_scale_;
    r[3] = gain_feature(w.channel_gain);
    if (empty_flag_) r[4] = w.empty ? 1.0 : 0.0;
  }
}

nn::Matrix StateFeaturizer::encode(const std::vector<const SystemState*>& batch) const {
  nn::Matrix x(static_cast<Eigen::Index>(batch.size()), size());
  for (std::size_t b = 0; b < batch.size(); ++b)
    encode(*batch[b], x.row(static_cast<Eigen::Index>(b)).data());
  return x;
}

nn::Matrix StateFeaturizer::encode(const std::vector<const PostDecisionState*>& batch) const {
  nn::Matrix x(static_cast<Eigen::Index>(batch.size()), size());
  for (std::size_t b = 0; b < batch.size(); ++b)
    encode(*batch[b], x.row(static_cast<Eigen::Index>(b)).data());
  return x;
}

// ---------------------------------------------------------------- actions

NormalizedAction NormalizedAction::from_row(const double* row, int n) {
  NormalizedAction na;
  na.fhat.assign(row, row + n);
  na.phat.assign(row + n, row + 2 * n);
  na.what.assign(row + 2 * n, row + 3 * n);
  return na;
}

void NormalizedAction::to_row(double* row) const {
  const int n = n_wds();
  std::copy(fhat.begin(), fhat.end(), row);
  std::copy(phat.begin(), phat.end(), row + n);
  std::copy(what.begin(), what.end(), row + 2 * n);
}

Action denormalize(const NormalizedAction& na, const SimConfig& cfg) {
  const int n = na.n_wds();
  if (n != cfg.n_wds) throw std::invalid_argument("denormalize: wrong number of WDs");
  Action a = Action::zeros(n);
  double total = 0.0;
  for (double w : na.what) total += std::max(w, 0.0);
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    a.freq[k] = std::clamp(na.fhat[k], 0.0, 1.0) * cfg.max_freq[k];
    a.power[k] = std::clamp(na.phat[k], 0.0, 1.0) * cfg.max_power[k];
    a.bandwidth[k] = total > 0.0 ? cfg.bs_bandwidth * (std::max(na.what[k], 0.0) / total)
                                 : cfg.bs_bandwidth / n;
  }
  return a;
}

void chain_denormalize(const NormalizedAction& na, const ActionGradient& g, const SimConfig& cfg,
                       double* out_row) {
  const int n = na.n_wds();
  double total = 0.0, weighted = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    total += std::max(na.what[k], 0.0);
    weighted += g.bandwidth[k] * std::max(na.what[k], 0.0);
  }
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    out_row[i] = g.freq[k] * cfg.max_freq[k];
    out_row[n + i] = g.power[k] * cfg.max_power[k];
    out_row[2 * n + i] =
        total > 0.0 ? cfg.bs_bandwidth / total * (g.bandwidth[k] - weighted / total) : 0.0;
  }
}

CapacityPartials capacity_partials(const SystemState& s, const Action& a, int wd,
                                   const SimConfig& cfg) {
  const auto k = static_cast<std::size_t>(wd);
  const double dt = cfg.slot_seconds;
  const double ln2 = std::log(2.0);
  const double p = std::clamp(a.power[k], 0.0, cfg.max_power[k]);
  const double bw = std::clamp(a.bandwidth[k], 0.0, cfg.bs_bandwidth);
  const double h = s.per_wd[k].channel_gain;
  CapacityPartials c;
  c.df = dt / cfg.cycles_per_bit;
  c.dp = bw * dt * h / ((cfg.noise_power + p * h) * ln2);
  c.dw = dt * std::log1p(p * h / cfg.noise_power) / ln2;
  return c;
}

double hol_capacity_derivative(const WDPostState& w, const SimConfig& cfg) {
  if (w.empty) return 0.0;
  if (cfg.drain_mode == DrainMode::Clamp && w.completions > 0) return 0.0;
  return -1.0;
}

// ---------------------------------------------------------------- replay

SystemState replay_view(const SystemState& s, const SimConfig& cfg) {
  SystemState out;
  out.slot = s.slot;
  out.per_wd.reserve(s.per_wd.size());
  for (std::size_t i = 0; i < s.per_wd.size(); ++i) {
    const WDState& w = s.per_wd[i];
    WDState v;
    v.hol_remaining_bits = w.hol_remaining_bits;
    v.aoi_slots = w.aoi_slots;
    v.queue_len = w.queue_len;
    v.channel_gain = w.channel_gain;
    const double reach =
        local_bits(cfg.max_freq[i], cfg) +
        tx_rate(cfg.max_power[i], cfg.bs_bandwidth, w.channel_gain, cfg) * cfg.slot_seconds;
    // Keep tasks until their bits exceed the reach; the last one kept is the
    // post-decision head whatever the action. Clamp mode needs only two.
    double bits = 0.0;
    for (const Task& t : w.task_queue) {
      v.task_queue.push_back(t);
      bits += t.remaining_bits;
      if (v.task_queue.size() >= 2 && (bits > reach || cfg.drain_mode == DrainMode::Clamp)) break;
    }
    out.per_wd.push_back(std::move(v));
  }
  return out;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
}

void ReplayBuffer::push(Experience e) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(e));
    cursor_ = items_.size() % capacity_;
  } else {
    items_[cursor_] = std::move(e);
    cursor_ = (cursor_ + 1) % capacity_;
  }
}

std::vector<const Experience*> ReplayBuffer::sample(std::size_t k, std::mt19937_64& rng) const {
  if (items_.empty()) throw std::logic_error("ReplayBuffer::sample: buffer is empty");
  std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
  std::vector<const Experience*> out(k);
  for (auto& p : out) p = &items_[pick(rng)];
  return out;
}

namespace {

void put_state(std::ostream& out, const SystemState& s) {
  binio::put<std::int64_t>(out, s.slot);
  binio::put<std::uint64_t>(out, s.per_wd.size());
  for (const auto& w : s.per_wd) {
    binio::put(out, w.hol_remaining_bits);
    binio::put<std::int64_t>(out, w.aoi_slots);
    binio::put(out, w.channel_gain);
    binio::put<std::int64_t>(out, w.queue_len);
    binio::put<std::uint64_t>(out, w.task_queue.size());
    for (const Task& t : w.task_queue) {
      binio::put<std::int64_t>(out, t.gen_slot);
      binio::put(out, t.size_bits);
      binio::put(out, t.remaining_bits);
    }
  }
}

SystemState get_state(std::istream& in) {
  SystemState s;
  s.slot = binio::get<std::int64_t>(in);
  const auto n = binio::get<std::uint64_t>(in);
  if (n > 100000) throw std::runtime_error("checkpoint: implausible WD count");
  s.per_wd.resize(n);
  for (auto& w : s.per_wd) {
    w.hol_remaining_bits = binio::get<double>(in);
    w.aoi_slots = binio::get<std::int64_t>(in);
    w.channel_gain = binio::get<double>(in);
    const auto len = binio::get<std::int64_t>(in);
    const auto q = binio::get<std::uint64_t>(in);
    if (q > (1ULL << 32)) throw std::runtime_error("checkpoint: implausible queue length");
    w.task_queue.resize(q);
    for (Task& t : w.task_queue) {
      t.gen_slot = binio::get<std::int64_t>(in);
      t.size_bits = binio::get<double>(in);
      t.remaining_bits = binio::get<double>(in);
    }
    if (len < 0 || static_cast<std::uint64_t>(len) < q)
      throw std::runtime_error("checkpoint: queue length below stored task count");
    w.queue_len = static_cast<int>(len);
  }
  return s;
}

}  // namespace

void ReplayBuffer::save(std::ostream& out) const {
  binio::put<std::uint64_t>(out, capacity_);
  binio::put<std::uint64_t>(out, cursor_);
  binio::put<std::uint64_t>(out, items_.size());
  for (const Experience& e : items_) {
    put_state(out, e.state);
    binio::put_vec(out, e.norm_action.fhat);
    binio::put_vec(out, e.norm_action.phat);
    binio::put_vec(out, e.norm_action.what);
    put_state(out, e.next_state);
    binio::put(out, e.stored_cost);
  }
}

void ReplayBuffer::load(std::istream& in) {
  const auto capacity = binio::get<std::uint64_t>(in);
  const auto cursor = binio::get<std::uint64_t>(in);
  const auto count = binio::get<std::uint64_t>(in);
  if (capacity == 0 || count > capacity || cursor >= capacity)
    throw std::runtime_error("ReplayBuffer::load: inconsistent header");
  std::vector<Experience> items(count);
  for (Experience& e : items) {
    e.state = get_state(in);
    e.norm_action.fhat = binio::get_vec<double>(in);
    e.norm_action.phat = binio::get_vec<double>(in);
    e.norm_action.what = binio::get_vec<double>(in);
    e.next_state = get_state(in);
    e.stored_cost = binio::get<double>(in);
  }
  capacity_ = capacity;
  cursor_ = cursor;
  items_ = std::move(items);
}

// ---------------------------------------------------------------- agent

DpdsAgent::DpdsAgent(const SimConfig& cfg, const AgentConfig& acfg)
    : cfg_(cfg),
      acfg_(acfg),
      feat_(cfg, acfg.a_scale, acfg.q_scale, !acfg.strict_arch),
      rng_(acfg.seed),
      lambda_(LagrangeMultipliers::uniform(cfg.n_wds, acfg.lambda_init, acfg.lambda_max,
                                           acfg.eta_scale)),
      est_(ArrivalEstimates::from_config(cfg, acfg.estimate_decay)),
      buffer_(acfg.buffer_capacity) {
  if (acfg.batch_size <= 0) throw std::invalid_argument("DpdsAgent: batch_size must be positive");
  if (acfg.omega < 0.0 || acfg.omega > 1.0)
    throw std::invalid_argument("DpdsAgent: omega must lie in [0, 1]");
  actor_ = nn::Mlp(nn::actor_arch(feat_.size(), cfg.n_wds, acfg.hidden), rng_);
  value_ = nn::Mlp(nn::value_arch(feat_.size(), acfg.hidden), rng_);
  actor_target_ = actor_;
  value_target_ = value_;
}

std::pair<NormalizedAction, Action> DpdsAgent::select_action(const SystemState& s) {
  nn::Matrix x(1, feat_.size());
  feat_.encode(s, x.data());
  const nn::Matrix out = actor_.evaluate(x, nn::Mode::Infer);
  NormalizedAction na = NormalizedAction::from_row(out.data(), cfg_.n_wds);
  Action a = denormalize(na, cfg_);
  return {std::move(na), std::move(a)};
}

double DpdsAgent::cost(const SystemState& s, const PostDecisionState& pds) const {
  return redesigned_cost(s, pds, lambda_, est_, cfg_, acfg_.objective);
}

double DpdsAgent::experience_cost(const Experience& e) const {
  return cost(e.state, apply_action(e.state, denormalize(e.norm_action, cfg_), cfg_));
}

std::vector<double> DpdsAgent::critic_targets(const std::vector<const Experience*>& batch) const {
  const int n = cfg_.n_wds;
  std::vector<const SystemState*> next(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) next[b] = &batch[b]->next_state;
  const nn::Matrix na_next = actor_target_.evaluate(feat_.encode(next), nn::Mode::Infer);

  std::vector<PostDecisionState> pds(batch.size());
  std::vector<const PostDecisionState*> pds_ptr(batch.size());
  std::vector<double> y(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto na = NormalizedAction::from_row(na_next.row(static_cast<Eigen::Index>(b)).data(), n);
    pds[b] = apply_action(*next[b], denormalize(na, cfg_), cfg_);
    pds_ptr[b] = &pds[b];
    y[b] = cost(*next[b], pds[b]);
  }
  const nn::Matrix v = value_target_.evaluate(feat_.encode(pds_ptr), nn::Mode::Infer);
  for (std::size_t b = 0; b < batch.size(); ++b)
    y[b] += v(static_cast<Eigen::Index>(b), 0) - v_avg_target_;
  return y;
}

double DpdsAgent::critic_update(const std::vector<const Experience*>& batch) {
  if (batch.empty()) return 0.0;
  const std::vector<double> y = critic_targets(batch);
  std::vector<PostDecisionState> pds(batch.size());
  std::vector<const PostDecisionState*> pds_ptr(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    pds[b] = apply_action(batch[b]->state, denormalize(batch[b]->norm_action, cfg_), cfg_);
    pds_ptr[b] = &pds[b];
  }
  nn::ForwardCache cache;
  const nn::Matrix pred = value_.forward(feat_.encode(pds_ptr), nn::Mode::Train, &cache);
  const auto bsz = static_cast<double>(batch.size());
  nn::Matrix upstream(pred.rows(), 1);
  double loss = 0.0;
  for (Eigen::Index b = 0; b < pred.rows(); ++b) {
    const double err = pred(b, 0) - y[static_cast<std::size_t>(b)];
    loss += err * err;
    upstream(b, 0) = 2.0 * err / bsz;
  }
  const nn::Gradients g = value_.backward(cache, upstream);
  value_.adam_step(g.params, acfg_.value_lr);
  return loss / bsz;
}

namespace {

struct ActorPass {
  nn::Matrix upstream;  // dJ / d(actor output)
  double objective = 0.0;
};

// Objective mean_b C(s_b, a_b) + V~(f_k(s_b, a_b)) and its gradient with
// respect to the normalized actions in `out`.
ActorPass actor_pass(const DpdsAgent& agent, const std::vector<const SystemState*>& states,
                     const nn::Matrix& out) {
  const SimConfig& cfg = agent.sim_config();
  const StateFeaturizer& feat = agent.featurizer();
  const int n = cfg.n_wds;
  const auto bsz = static_cast<double>(states.size());

  std::vector<NormalizedAction> na(states.size());
  std::vector<Action> act(states.size());
  std::vector<PostDecisionState> pds(states.size());
  std::vector<const PostDecisionState*> pds_ptr(states.size());
  ActorPass r;
  for (std::size_t b = 0; b < states.size(); ++b) {
    na[b] = NormalizedAction::from_row(out.row(static_cast<Eigen::Index>(b)).data(), n);
    act[b] = denormalize(na[b], cfg);
    pds[b] = apply_action(*states[b], act[b], cfg);
    pds_ptr[b] = &pds[b];
    r.objective += agent.cost(*states[b], pds[b]);
  }

  nn::ForwardCache vcache;
  const nn::Matrix v =
      agent.value_net().evaluate(feat.encode(pds_ptr), nn::Mode::Infer, &vcache);
  r.objective = (r.objective + v.sum()) / bsz;
  const nn::Matrix ones = nn::Matrix::Constant(v.rows(), 1, 1.0 / bsz);
  const nn::Matrix dv_dx = agent.value_net().backward(vcache, ones).input;

  r.upstream.resize(out.rows(), out.cols());
  for (std::size_t b = 0; b < states.size(); ++b) {
    const auto row = static_cast<Eigen::Index>(b);
    ActionGradient g = cost_grad_action(*states[b], act[b], agent.multipliers(),
                                        agent.estimates_view(), cfg,
                                        agent.agent_config().objective);
    for (int i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      g.freq[k] /= bsz;
      g.power[k] /= bsz;
      g.bandwidth[k] /= bsz;
      const double dhol = hol_capacity_derivative(pds[b].per_wd[k], cfg);
      if (dhol == 0.0) continue;
      const double dv_dcap = dv_dx(row, feat.hol_column(i)) * feat.hol_scale() * dhol;
      const CapacityPartials cp = capacity_partials(*states[b], act[b], i, cfg);
      g.freq[k] += dv_dcap * cp.df;
      g.power[k] += dv_dcap * cp.dp;
      g.bandwidth[k] += dv_dcap * cp.dw;
    }
    chain_denormalize(na[b], g, cfg, r.upstream.row(row).data());
  }
  return r;
}

}  // namespace

double DpdsAgent::actor_update(const std::vector<const Experience*>& batch) {
  if (batch.empty()) return 0.0;
  std::vector<const SystemState*> states(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) states[b] = &batch[b]->state;
  nn::ForwardCache cache;
  const nn::Matrix out = actor_.forward(feat_.encode(states), nn::Mode::Train, &cache);
  const ActorPass pass = actor_pass(*this, states, out);
  const nn::Gradients g = actor_.backward(cache, pass.upstream);
  actor_.adam_step(g.params, acfg_.actor_lr);
  return std::sqrt(g.params.squared_norm());
}

nn::ParamSet DpdsAgent::actor_gradient(const std::vector<const SystemState*>& states) const {
  nn::ForwardCache cache;
  const nn::Matrix out = actor_.evaluate(feat_.encode(states), nn::Mode::Train, &cache);
  return actor_.backward(cache, actor_pass(*this, states, out).upstream).params;
}

double DpdsAgent::actor_objective(const std::vector<const SystemState*>& states) const {
  const nn::Matrix out = actor_.evaluate(feat_.encode(states), nn::Mode::Train);
  return actor_pass(*this, states, out).objective;
}

double DpdsAgent::state_value(const SystemState& s) const {
  nn::Matrix x(1, feat_.size());
  feat_.encode(s, x.data());
  const nn::Matrix out = actor_.evaluate(x, nn::Mode::Infer);
  const auto na = NormalizedAction::from_row(out.data(), cfg_.n_wds);
  const PostDecisionState pds = apply_action(s, denormalize(na, cfg_), cfg_);
  nn::Matrix xp(1, feat_.size());
  feat_.encode(pds, xp.data());
  return cost(s, pds) + value_.evaluate(xp, nn::Mode::Infer)(0, 0) - v_avg_;
}

double DpdsAgent::next_beta() {
  ++avg_updates_;
  if (beta_override_ >= 0.0) {
    const double b = beta_override_;
    beta_override_ = -1.0;
    return b;
  }
  return 1.0 / std::sqrt(static_cast<double>(avg_updates_));
}

void DpdsAgent::avg_reward_update(const SystemState& s, const NormalizedAction& taken,
                                  const SystemState& s_next) {
  const double c = cost(s, apply_action(s, denormalize(taken, cfg_), cfg_));
  const double td = c + state_value(s_next) - state_value(s);
  const double beta = next_beta();
  v_avg_ = (1.0 - beta) * v_avg_ + beta * td;
}

void DpdsAgent::soft_update_targets() {
  value_target_.soft_update(value_, acfg_.omega);
  actor_target_.soft_update(actor_, acfg_.omega);
  v_avg_target_ = acfg_.omega * v_avg_ + (1.0 - acfg_.omega) * v_avg_target_;
}

StepMetrics DpdsAgent::train_step(Environment& env) {
  const SystemState s = env.state();
  auto [na, action] = select_action(s);
  StepResult r = env.step(action);
  est_.observe(r.events);
  buffer_.push(Experience{replay_view(s, cfg_), na, replay_view(r.next, cfg_), 0.0});
  ++steps_;

  stats_.trained = buffer_.size() >= std::max<std::size_t>(acfg_.warmup, 1);
  if (stats_.trained) {
    const auto batch = buffer_.sample(static_cast<std::size_t>(acfg_.batch_size), rng_);
    stats_.critic_loss = critic_update(batch);
    stats_.actor_grad_norm = actor_update(batch);
    avg_reward_update(s, na, r.next);
    soft_update_targets();
  }
  update_lambda(lambda_, r.metrics.energy, steps_, cfg_);
  return r.metrics;
}

// ---------------------------------------------------------------- checkpoint

namespace {
constexpr const char* kMagic = "AOIDPDS 2";
}

void DpdsAgent::save(std::ostream& out, bool with_buffer) const {
  out << kMagic << '\n';
  actor_.save(out);
  actor_target_.save(out);
  value_.save(out);
  value_target_.save(out);
  binio::put(out, v_avg_);
  binio::put(out, v_avg_target_);
  binio::put<std::int64_t>(out, avg_updates_);
  binio::put<std::int64_t>(out, steps_);
  binio::put_vec(out, lambda_.lambda);
  binio::put_vec(out, est_.rate_est);
  binio::put_vec(out, est_.mean_bits_est);
  binio::put_vec(out, est_.tasks_seen);
  std::ostringstream rng_text;
  rng_text << rng_;
  binio::put_str(out, rng_text.str());
  binio::put<std::uint8_t>(out, with_buffer ? 1 : 0);
  if (with_buffer) buffer_.save(out);
  if (!out) throw std::runtime_error("DpdsAgent::save: write failed");
}

void DpdsAgent::load(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMagic)
    throw std::runtime_error("DpdsAgent::load: not an agent checkpoint");
  nn::Mlp nets[4] = {nn::Mlp::load(in), nn::Mlp::load(in), nn::Mlp::load(in), nn::Mlp::load(in)};
  if (!(nets[0].arch() == actor_.arch()) || !(nets[1].arch() == actor_.arch()) ||
      !(nets[2].arch() == value_.arch()) || !(nets[3].arch() == value_.arch()))
    throw std::runtime_error("DpdsAgent::load: architecture mismatch");
  const double v = binio::get<double>(in);
  const double v_t = binio::get<double>(in);
  const long updates = static_cast<long>(binio::get<std::int64_t>(in));
  const long steps = static_cast<long>(binio::get<std::int64_t>(in));
  auto lambda = binio::get_vec<double>(in);
  auto rate = binio::get_vec<double>(in);
  auto bits = binio::get_vec<double>(in);
  auto seen = binio::get_vec<long>(in);
  const auto n = static_cast<std::size_t>(cfg_.n_wds);
  if (lambda.size() != n || rate.size() != n || bits.size() != n || seen.size() != n)
    throw std::runtime_error("DpdsAgent::load: WD count mismatch");
  std::istringstream rng_text(binio::get_str(in));
  std::mt19937_64 rng;
  rng_text >> rng;
  if (!rng_text) throw std::runtime_error("DpdsAgent::load: bad generator state");
  ReplayBuffer buffer(acfg_.buffer_capacity);
  if (binio::get<std::uint8_t>(in)) buffer.load(in);

  actor_ = std::move(nets[0]);
  actor_target_ = std::move(nets[1]);
  value_ = std::move(nets[2]);
  value_target_ = std::move(nets[3]);
  v_avg_ = v;
  v_avg_target_ = v_t;
  avg_updates_ = updates;
  steps_ = steps;
  lambda_.lambda = std::move(lambda);
  est_.rate_est = std::move(rate);
  est_.mean_bits_est = std::move(bits);
  est_.tasks_seen = std::move(seen);
  rng_ = rng;
  buffer_ = std::move(buffer);
}

}  // namespace aoimec
