#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "aoimec/config.hpp"
#include "aoimec/cost.hpp"
#include "aoimec/env.hpp"
#include "aoimec/neural.hpp"

namespace aoimec {

/// Hyper-parameters shared by the learning agents.
struct AgentConfig {
  int hidden = 128;
  double actor_lr = 1e-3;
  double value_lr = 2e-3;
  double omega = 0.005;
  int batch_size = 64;
  std::size_t buffer_capacity = 100000;
  std::size_t warmup = 1000;
  double lambda_init = 5000.0;
  double lambda_max = 1e6;
  double eta_scale = 0.01;
  bool strict_arch = true;
  double a_scale = 50.0;
  double q_scale = 20.0;
  double estimate_decay = 0.999;
  std::uint64_t seed = 1;
  Objective objective = Objective::Aoi;
  // DDPG baselines only.
  double discount = 0.99;
  double exploration_noise = 0.1;
  bool ddpg_redesigned_cost = false;
};

/// Maps states and post-decision states to O(1) network inputs:
/// per WD [d_r / d_max, a / a_scale, q / q_scale, log-gain in [0, 1] (, empty)].
class StateFeaturizer {
 public:
  StateFeaturizer() = default;
  StateFeaturizer(const SimConfig& cfg, double a_scale, double q_scale, bool empty_flag);

  int per_wd() const { return empty_flag_ ? 5 : 4; }
  int size() const { return n_ * per_wd(); }
  int hol_column(int wd) const { return wd * per_wd(); }
  /// d(feature at hol_column) / d(remaining bits).
  double hol_scale() const { return 1.0 / bits_scale_; }

  void encode(const SystemState& s, double* row) const;
  void encode(const PostDecisionState& s, double* row) const;
  nn::Matrix encode(const std::vector<const SystemState*>& batch) const;
  nn::Matrix encode(const std::vector<const PostDecisionState*>& batch) const;

 private:
  double gain_feature(double h) const;

  int n_ = 0;
  bool empty_flag_ = false;
  double bits_scale_ = 1.0, a_scale_ = 1.0, q_scale_ = 1.0;
  double log_h_lo_ = 0.0, log_h_span_ = 1.0;
};

/// Actor output in [0, 1]^{3N}: CPU share, power share, bandwidth share.
struct NormalizedAction {
  std::vector<double> fhat, phat, what;

  static NormalizedAction from_row(const double* row, int n);
  void to_row(double* row) const;
  int n_wds() const { return static_cast<int>(fhat.size()); }
};

/// f = fhat f^max, P = phat P^max, W = W^max what / sum(what) (equal shares
/// when every what is zero), so sum W = W^max.
Action denormalize(const NormalizedAction& na, const SimConfig& cfg);

/// Chains dJ/d(action) back to dJ/d(normalized action) through denormalize.
void chain_denormalize(const NormalizedAction& na, const ActionGradient& g, const SimConfig& cfg,
                       double* out_row);

/// d(capacity)/d(f, P, W) of WD i under action a.
struct CapacityPartials {
  double df = 0.0, dp = 0.0, dw = 0.0;
};
CapacityPartials capacity_partials(const SystemState& s, const Action& a, int wd,
                                   const SimConfig& cfg);

/// Straight-through derivative of the post-decision HOL remainder with
/// respect to the offered capacity: -1 on the continuous branch, 0 once the
/// queue is exhausted (or, under Clamp, once the HOL task completes).
double hol_capacity_derivative(const WDPostState& w, const SimConfig& cfg);

/// Copy of `s` whose task lists keep only the prefix one slot at full
/// capacity could reach (queue_len is kept), so f_k of the copy equals f_k of
/// `s` for every feasible action while long queues stay cheap to store.
SystemState replay_view(const SystemState& s, const SimConfig& cfg);

struct Experience {
  SystemState state;
  NormalizedAction norm_action;
  SystemState next_state;
  double stored_cost = 0.0;  // used only by the DDPG baselines
};

/// Fixed-capacity FIFO ring of experiences with uniform sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 100000);

  void push(Experience e);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::size_t cursor() const { return cursor_; }
  const Experience& at(std::size_t i) const { return items_.at(i); }
  /// Uniform with replacement.
  std::vector<const Experience*> sample(std::size_t k, std::mt19937_64& rng) const;

  void save(std::ostream& out) const;
  void load(std::istream& in);

 private:
  std::size_t capacity_;
  std::size_t cursor_ = 0;
  std::vector<Experience> items_;
};

struct TrainStats {
  double critic_loss = 0.0;
  double actor_grad_norm = 0.0;
  bool trained = false;
};

/// Deep post-decision-state learner: actor, PDS value network, their targets,
/// and the average-cost estimate with its target.
class DpdsAgent {
 public:
  DpdsAgent(const SimConfig& cfg, const AgentConfig& acfg);

  std::pair<NormalizedAction, Action> select_action(const SystemState& s);

  /// Redesigned cost of (s, pds) under the current multipliers and estimates.
  double cost(const SystemState& s, const PostDecisionState& pds) const;
  /// Recomputes f_k and the cost of a stored experience.
  double experience_cost(const Experience& e) const;

  /// Mean over the batch of (C + V~_T(f_k) - v_T) targets, exposed for tests.
  std::vector<double> critic_targets(const std::vector<const Experience*>& batch) const;
  double critic_update(const std::vector<const Experience*>& batch);
  /// Returns the gradient norm with respect to the actor parameters.
  double actor_update(const std::vector<const Experience*>& batch);
  /// Gradient of actor_objective with respect to the actor parameters.
  nn::ParamSet actor_gradient(const std::vector<const SystemState*>& states) const;
  /// Mean of C(s, pi(s)) + V~(f_k(s, pi(s))) over a batch of states, with the
  /// actor in train mode (no running-stat update); the actor's objective.
  double actor_objective(const std::vector<const SystemState*>& states) const;
  /// Relative value V(s) = C(s, pi(s)) + V~(f_k(s, pi(s))) - v using infer mode.
  double state_value(const SystemState& s) const;
  void avg_reward_update(const SystemState& s, const NormalizedAction& taken,
                         const SystemState& s_next);
  void soft_update_targets();

  StepMetrics train_step(Environment& env);

  void save(std::ostream& out, bool with_buffer) const;
  void load(std::istream& in);

  const SimConfig& sim_config() const { return cfg_; }
  const AgentConfig& agent_config() const { return acfg_; }
  const StateFeaturizer& featurizer() const { return feat_; }
  nn::Mlp& actor() { return actor_; }
  nn::Mlp& actor_target() { return actor_target_; }
  nn::Mlp& value_net() { return value_; }
  nn::Mlp& value_target() { return value_target_; }
  const nn::Mlp& actor() const { return actor_; }
  const nn::Mlp& value_net() const { return value_; }
  double v_avg() const { return v_avg_; }
  double v_avg_target() const { return v_avg_target_; }
  void set_v_avg(double v) { v_avg_ = v; }
  void set_v_avg_target(double v) { v_avg_target_ = v; }
  /// Overrides the 1/sqrt(t) schedule for the next avg_reward_update (tests).
  void set_beta_override(double beta) { beta_override_ = beta; }
  LagrangeMultipliers& multipliers() { return lambda_; }
  const LagrangeMultipliers& multipliers() const { return lambda_; }
  ArrivalEstimates& estimates() { return est_; }
  const ArrivalEstimates& estimates_view() const { return est_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  ReplayBuffer& buffer() { return buffer_; }
  const TrainStats& last_stats() const { return stats_; }
  long steps() const { return steps_; }

 private:
  double next_beta();

  SimConfig cfg_;
  AgentConfig acfg_;
  StateFeaturizer feat_;
  std::mt19937_64 rng_;
  nn::Mlp actor_, actor_target_, value_, value_target_;
  double v_avg_ = 0.0, v_avg_target_ = 0.0;
  long avg_updates_ = 0;
  double beta_override_ = -1.0;
  LagrangeMultipliers lambda_;
  ArrivalEstimates est_;
  ReplayBuffer buffer_;
  TrainStats stats_;
  long steps_ = 0;
};

}  // namespace aoimec
