#pragma once

#include <vector>

#include "aoimec/config.hpp"
#include "aoimec/env.hpp"

namespace aoimec {

/// What the per-WD state term of the cost measures.
///  Aoi:   a_i, with an expected reduction of bits / (mean_bits * rate).
///  Delay: q_i, with an expected reduction of bits / mean_bits (completions).
enum class Objective { Aoi, Delay };

struct LagrangeMultipliers {
  std::vector<double> lambda;
  double lambda_max = 1e6;
  double eta_scale = 1.0;  // multiplies the base schedule 100 * min(1, 10 / ln(t + 1))

  static LagrangeMultipliers uniform(int n, double init, double lambda_max = 1e6,
                                     double eta_scale = 1.0);
  double eta(long slot) const;
};

/// Exponential moving averages of the per-WD arrival rate and task size,
/// seeded from the configured values.
struct ArrivalEstimates {
  std::vector<double> rate_est;
  std::vector<double> mean_bits_est;
  std::vector<long> tasks_seen;
  double decay = 0.999;

  static ArrivalEstimates from_config(const SimConfig& cfg, double decay = 0.999);
  void observe(const RandomEvents& ev);
};

/// Per-WD partial derivatives of a scalar with respect to the action.
struct ActionGradient {
  std::vector<double> freq;
  std::vector<double> power;
  std::vector<double> bandwidth;

  static ActionGradient zeros(int n);
};

/// sum_i state_term_i + sum_i lambda_i (E_i - E^max_i).
double lagrangian_cost(const SystemState& s, const PostDecisionState& pds,
                       const LagrangeMultipliers& lm, const SimConfig& cfg,
                       Objective obj = Objective::Aoi);

/// Expected drop of the state term when `bits` are drained at WD `wd`.
double expected_reduction(double bits, int wd, const ArrivalEstimates& est, Objective obj);

/// sum_i (state_term_i - expected_reduction_i) + sum_i lambda_i max(0, E_i - E^max_i).
/// The reduction uses the bits actually drained, so capacity offered to an
/// empty queue earns nothing.
double redesigned_cost(const SystemState& s, const PostDecisionState& pds,
                       const LagrangeMultipliers& lm, const ArrivalEstimates& est,
                       const SimConfig& cfg, Objective obj = Objective::Aoi);

/// Convenience overload: evaluates f_k(s, a) first.
double redesigned_cost(const SystemState& s, const Action& a, const LagrangeMultipliers& lm,
                       const ArrivalEstimates& est, const SimConfig& cfg,
                       Objective obj = Objective::Aoi);

/// Analytic gradient of redesigned_cost with respect to (f, P, W). At the
/// energy kink E_i == E^max_i and at queue exhaustion the subgradient 0 is used.
ActionGradient cost_grad_action(const SystemState& s, const Action& a,
                                const LagrangeMultipliers& lm, const ArrivalEstimates& est,
                                const SimConfig& cfg, Objective obj = Objective::Aoi);

/// lambda_i <- clip(lambda_i + eta(t) (E_i - E^max_i), 0, lambda_max).
void update_lambda(LagrangeMultipliers& lm, const std::vector<double>& energy, long slot,
                   const SimConfig& cfg);

}  // namespace aoimec
