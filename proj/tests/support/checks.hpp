// Deterministic property checks shared by the acceptance binary and the
// `selftest` subcommand. Every tolerance is fixed here.
#pragma once

#include <string>
#include <vector>

#include "aoimec/config.hpp"
#include "aoimec/tabular.hpp"

namespace checks {

inline constexpr double kDualityTol = 1e-10;
inline constexpr double kNetGradTol = 1e-4;
inline constexpr double kCostGradTol = 1e-6;
inline constexpr double kActorGradTol = 1e-3;
inline constexpr double kTabularTol = 0.05;
inline constexpr double kBandwidthTol = 1e-9;
inline constexpr double kTrackingTol = 1e-9;

struct Outcome {
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

/// Env AoI vs the event-log oracle over `slots` slots with random actions.
Outcome env_oracle(long slots = 10000, unsigned seed = 7);
/// Clamp-mode transitions vs the case-by-case oracle, exhaustive small grid.
Outcome transition_cases();
/// offload_energy(tx_rate * dt) == P dt over random draws.
Outcome rate_energy_duality(int draws = 10000, unsigned seed = 11);
/// Backprop vs central differences on random nets of every layer type.
Outcome network_gradients(int seeds = 20);
/// cost_grad_action vs central differences of redesigned_cost.
Outcome cost_gradients(int draws = 500, unsigned seed = 3);
/// Actor-parameter gradient vs central differences of the actor objective.
Outcome actor_objective_gradient(unsigned seed = 5);
/// FLOP closed forms for N in 1..200 and the N = 100 figure.
Outcome flop_closed_forms();
/// Tabular PDS learning vs relative value iteration on the 2x2 toy.
Outcome tabular_pds(long steps = 100000, unsigned seed = 1);
/// Bandwidth sum, multiplier projection, and target-tracking decay.
Outcome feasibility_and_tracking(unsigned seed = 9);

/// Two states, two actions; the action picks the post-decision state.
aoimec::tabular::PdsMdp toy_pds_mdp();

/// Small cell used by the gradient checks: one WD at 40 m.
aoimec::SimConfig one_wd_config();

}  // namespace checks
