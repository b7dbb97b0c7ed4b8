#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <utility>
#include <vector>

#include "aoimec/config.hpp"
#include "aoimec/cost.hpp"
#include "aoimec/env.hpp"

namespace aoimec::tabular {

/// Bins for the per-WD state (d_r, a, q, h) and grids for the per-WD action.
/// A value v falls into bin upper_bound(edges, v); n edges give n + 1 bins.
struct Discretization {
  std::vector<double> hol_edges;   // bits
  long a_cap = 10;                 // a is clipped to [0, a_cap]
  int q_cap = 3;                   // q is clipped to [0, q_cap]
  std::vector<double> gain_edges;  // log-spaced
  std::vector<double> freq_levels;   // fractions of f^max, include 0 and 1
  std::vector<double> power_levels;  // fractions of P^max, include 0 and 1
  std::vector<double> share_levels;  // bandwidth weights, normalized per action

  int hol_bins() const { return static_cast<int>(hol_edges.size()) + 1; }
  int gain_bins() const { return static_cast<int>(gain_edges.size()) + 1; }
  long per_wd_states() const;
  /// Checks every invariant; throws ConfigError.
  void validate() const;
};

/// Even bit edges over [task_bits_min, task_bits_max], log-spaced gain edges
/// over the layout's plausible gain range, and `levels`-point action grids.
Discretization make_discretization(const SimConfig& cfg, int hol_bins = 5, long a_cap = 10,
                                   int q_cap = 3, int gain_bins = 4, int levels = 5);

/// Row-major over WDs of (d_r bin, a, q, h bin).
long state_count(const Discretization& d, int n_wds);
long state_index(const SystemState& s, const Discretization& d);
long pds_index(const PostDecisionState& s, const Discretization& d);

/// Joint action grid: every per-WD (f, P, share) combination. Shares are
/// normalized to sum to W^max; an all-zero share vector gives zero bandwidth.
std::vector<Action> joint_actions(const Discretization& d, const SimConfig& cfg);

/// Exact distribution of the discretized next state given a post-decision
/// state: (state index, probability) pairs summing to 1.
std::vector<std::pair<long, double>> next_state_distribution(const PostDecisionState& pds,
                                                             const Discretization& d,
                                                             const SimConfig& cfg);

/// Finite MDP with dense transition and cost arrays.
struct ExplicitMdp {
  int states = 0;
  int actions = 0;
  std::vector<double> p;     // [s][a][s']
  std::vector<double> cost;  // [s][a]

  double prob(int s, int a, int s2) const {
    return p[(static_cast<std::size_t>(s) * actions + a) * states + s2];
  }
  double c(int s, int a) const { return cost[static_cast<std::size_t>(s) * actions + a]; }
  void validate() const;
};

/// MDP whose transition factors through a known post-decision map:
/// s -(a, known)-> post[s][a] -(unknown)-> s' ~ pu[post][.].
struct PdsMdp {
  int states = 0;
  int actions = 0;
  int post_states = 0;
  std::vector<int> post;     // [s][a]
  std::vector<double> pu;    // [post][s']
  std::vector<double> cost;  // [s][a]

  int f(int s, int a) const { return post[static_cast<std::size_t>(s) * actions + a]; }
  double c(int s, int a) const { return cost[static_cast<std::size_t>(s) * actions + a]; }
  double pu_prob(int k, int s2) const { return pu[static_cast<std::size_t>(k) * states + s2]; }
  ExplicitMdp composite() const;
  void validate() const;
  /// Samples s' given the post-decision state k.
  int sample_next(int k, std::mt19937_64& rng) const;
};

struct RviResult {
  double avg_cost = 0.0;
  std::vector<double> relative_values;  // reference state 0 has value 0
  std::vector<int> policy;
  long sweeps = 0;
};

/// Relative value iteration until the span of the Bellman residual is below
/// `tol`. Throws std::runtime_error after `max_sweeps`.
RviResult rvi_oracle(const ExplicitMdp& mdp, double tol = 1e-10, long max_sweeps = 1000000);

/// beta(t) = 1 / sqrt(t), t >= 1.
double step_size(long t);

struct PdsTable {
  std::vector<double> value;  // V~ per post-decision index
  std::vector<long> visits;
  double avg_cost = 0.0;
  long t = 0;

  explicit PdsTable(std::size_t size = 0) : value(size, 0.0), visits(size, 0) {}
  void save(std::ostream& out, const Discretization* disc = nullptr) const;
  static PdsTable load(std::istream& in);
};

struct QTable {
  int states = 0;
  int actions = 0;
  std::vector<double> q;
  std::vector<long> visits;
  double avg_cost = 0.0;
  long t = 0;

  QTable() = default;
  QTable(int s, int a)
      : states(s), actions(a), q(static_cast<std::size_t>(s) * a, 0.0),
        visits(q.size(), 0) {}
  double& at(int s, int a) { return q[static_cast<std::size_t>(s) * actions + a]; }
  double at(int s, int a) const { return q[static_cast<std::size_t>(s) * actions + a]; }
  double min_q(int s) const;
  int argmin(int s) const;  // lowest index on ties
  void save(std::ostream& out) const;
  static QTable load(std::istream& in);
};

// -------- learners on explicit PDS problems

/// argmin_a c(s, a) + V~(f(s, a)), lowest index on ties.
int greedy_action(const PdsMdp& mdp, const PdsTable& table, int s);
/// V(s) = min_a {c(s, a) + V~(f(s, a))} - v.
double state_value(const PdsMdp& mdp, const PdsTable& table, int s);
/// One stochastic-approximation step on V~(f(s, a)) and v. A negative
/// `beta` uses 1 / sqrt(t) with t counted by the table.
void pds_learn_step(const PdsMdp& mdp, PdsTable& table, int s, int a, int s_next,
                    double beta = -1.0);
/// Runs greedy PDS learning for `steps` transitions from state 0.
PdsTable run_pds_learning(const PdsMdp& mdp, long steps, std::uint64_t seed);

/// Q(s,a) <- (1-b) Q + b (c - v + min Q(s')); v <- (1-b) v + b (c + min Q(s') - min Q(s)).
void q_learn_step(QTable& qt, int s, int a, double cost, int s_next, double beta = -1.0);
/// epsilon-greedy Q-learning with epsilon(t) = max(0.01, 1 / sqrt(t)).
QTable run_q_learning(const ExplicitMdp& mdp, long steps, std::uint64_t seed);

// -------- learners on the discretized environment (small N only)

struct GreedyChoice {
  std::size_t index = 0;
  Action action;
  double objective = 0.0;
};

/// Exhaustive search of redesigned_cost(s, a) + V~(pds_index(f_k(s, a))) over
/// `actions`; lowest index on ties.
GreedyChoice greedy_action_pds(const SystemState& s, const PdsTable& table,
                               const LagrangeMultipliers& lm, const ArrivalEstimates& est,
                               const Discretization& disc, const SimConfig& cfg,
                               const std::vector<Action>& actions);

/// PDS update for one observed transition (s, pds, s_next) of the environment.
void pds_learn_step(const SystemState& s, const PostDecisionState& pds,
                    const SystemState& s_next, PdsTable& table, const LagrangeMultipliers& lm,
                    const ArrivalEstimates& est, const Discretization& disc, const SimConfig& cfg,
                    const std::vector<Action>& actions, double beta = -1.0);

}  // namespace aoimec::tabular
