#pragma once

#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "aoimec/config.hpp"
#include "aoimec/cost.hpp"
#include "aoimec/dpds.hpp"
#include "aoimec/env.hpp"
#include "aoimec/neural.hpp"

namespace aoimec {

enum class PolicyKind { Dpds, Lpo, Coo, Dpl, Addpg, Dddpg };

PolicyKind parse_policy(const std::string& name);
std::string policy_name(PolicyKind kind);
/// Energy-budget scaling the harness applies before a run: 3 for LPO, 2 for
/// COO, 1 otherwise.
double default_budget_multiplier(PolicyKind kind);

struct MyopicOptions {
  int grid_points = 201;
  /// Run busy WDs at full frequency (LPO) or full power (COO) instead of
  /// optimizing the magnitude.
  bool fixed_max = false;
};

/// Local processing only: P = W = 0, each f_i minimizes the WD's share of the
/// redesigned cost over a grid on [0, f^max_i] (plus the energy-budget and
/// queue-drain break points).
Action lpo_policy(const SystemState& s, const LagrangeMultipliers& lm, const ArrivalEstimates& est,
                  const SimConfig& cfg, const MyopicOptions& opt = {});

/// Offloading only: f = 0, bandwidth split equally among busy WDs, each P_i
/// minimizes the WD's share of the redesigned cost over a grid on [0, P^max_i].
Action coo_policy(const SystemState& s, const LagrangeMultipliers& lm, const ArrivalEstimates& est,
                  const SimConfig& cfg, const MyopicOptions& opt = {});

/// Plain DDPG with a Q(s, a) critic. Average-reward (A-DDPG) tracks v and
/// its target; discounted (D-DDPG) uses y = c + discount * Q_T(s', pi_T(s')).
class DdpgAgent {
 public:
  DdpgAgent(const SimConfig& cfg, const AgentConfig& acfg, bool average_reward);

  std::pair<NormalizedAction, Action> select_action(const SystemState& s, bool explore);
  /// Cost recorded in the buffer at collection time.
  double collection_cost(const SystemState& s, const PostDecisionState& pds) const;

  std::vector<double> critic_targets(const std::vector<const Experience*>& batch) const;
  double critic_update(const std::vector<const Experience*>& batch);
  double actor_update(const std::vector<const Experience*>& batch);
  double q_value(const SystemState& s, const NormalizedAction& na) const;
  void soft_update_targets();

  StepMetrics train_step(Environment& env);

  const SimConfig& sim_config() const { return cfg_; }
  nn::Mlp& actor() { return actor_; }
  nn::Mlp& critic() { return critic_; }
  nn::Mlp& actor_target() { return actor_target_; }
  nn::Mlp& critic_target() { return critic_target_; }
  bool average_reward() const { return average_; }
  double v_avg() const { return v_avg_; }
  double v_avg_target() const { return v_avg_target_; }
  LagrangeMultipliers& multipliers() { return lambda_; }
  const LagrangeMultipliers& multipliers() const { return lambda_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  const TrainStats& last_stats() const { return stats_; }

 private:
  nn::Matrix critic_input(const std::vector<const SystemState*>& states,
                          const nn::Matrix& actions) const;

  SimConfig cfg_;
  AgentConfig acfg_;
  bool average_;
  StateFeaturizer feat_;
  std::mt19937_64 rng_;
  nn::Mlp actor_, actor_target_, critic_, critic_target_;
  double v_avg_ = 0.0, v_avg_target_ = 0.0;
  long avg_updates_ = 0;
  LagrangeMultipliers lambda_;
  ArrivalEstimates est_;
  ReplayBuffer buffer_;
  TrainStats stats_;
  long steps_ = 0;
};

/// One scheduling policy driven slot by slot (acting and, if it learns,
/// training) against an environment.
class Scheduler {
 public:
  virtual ~Scheduler() = default;
  virtual StepMetrics step(Environment& env) = 0;
  virtual double lambda_mean() const = 0;
  virtual TrainStats stats() const { return {}; }
};

/// Builds the scheduler for `kind`. `cfg` must already carry the energy
/// budgets the policy should respect.
std::unique_ptr<Scheduler> make_scheduler(PolicyKind kind, const SimConfig& cfg,
                                          const AgentConfig& acfg, const MyopicOptions& opt = {});

}  // namespace aoimec
