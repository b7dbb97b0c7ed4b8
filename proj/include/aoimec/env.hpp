#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "aoimec/config.hpp"

namespace aoimec {

struct Task {
  long gen_slot = 0;
  double size_bits = 0.0;
  double remaining_bits = 0.0;
};

/// Observable per-WD state plus the FCFS task list behind it.
/// Invariants: queue_len == task_queue.size() (replay views keep only a
/// prefix, see replay_view); an empty queue has zero HOL bits and zero AoI;
/// otherwise aoi_slots == slot - task_queue.front().gen_slot.
struct WDState {
  double hol_remaining_bits = 0.0;
  long aoi_slots = 0;
  int queue_len = 0;
  double channel_gain = 0.0;
  std::vector<Task> task_queue;

  double queued_bits() const;
};

struct SystemState {
  std::vector<WDState> per_wd;
  long slot = 0;

  int n_wds() const { return static_cast<int>(per_wd.size()); }
};

struct Action {
  std::vector<double> freq;       // Hz
  std::vector<double> power;      // W
  std::vector<double> bandwidth;  // Hz

  static Action zeros(int n);
  int n_wds() const { return static_cast<int>(freq.size()); }
};

struct WDPostState {
  double hol_remaining_bits = 0.0;
  long aoi_slots = 0;  // relative to the slot the action was taken in
  int queue_len = 0;
  double channel_gain = 0.0;
  bool empty = true;
  int completions = 0;
  double local_bits = 0.0;      // capacity offered by the CPU
  double offload_bits = 0.0;    // capacity offered by the uplink
  double processed_bits = 0.0;  // bits actually drained from the queue
  double local_energy = 0.0;
  double offload_energy = 0.0;
  std::vector<Task> task_queue;

  double energy() const { return local_energy + offload_energy; }
};

/// Deterministic image of a state under an action, before random events.
struct PostDecisionState {
  std::vector<WDPostState> per_wd;
  long slot = 0;
  int clamped = 0;  // action coordinates pulled back into their box

  int n_wds() const { return static_cast<int>(per_wd.size()); }
};

struct RandomEvents {
  std::vector<int> arrivals;
  std::vector<double> new_task_bits;
  std::vector<double> fading;
};

struct StepMetrics {
  long slot = 0;
  std::vector<long> aoi;  // a_i(t) of the state the action was applied to
  std::vector<double> local_energy;
  std::vector<double> offload_energy;
  std::vector<double> energy;
  std::vector<double> processed_bits;
  std::vector<int> completions;
  std::vector<int> arrivals;
  int clamped = 0;

  double mean_aoi() const;
  double mean_energy() const;
};

// Physical layer.
double local_bits(double freq, const SimConfig& cfg);
double local_energy(double local_bits, const SimConfig& cfg);
double channel_gain(double distance, double fading, const SimConfig& cfg);
double tx_rate(double power, double bandwidth, double gain, const SimConfig& cfg);
double offload_energy(double offload_bits, double bandwidth, double gain, const SimConfig& cfg);

/// Empty queues at slot 0 with channels drawn from `fading`.
SystemState initial_state(const SimConfig& cfg, const std::vector<double>& fading);

/// Drains `bits[i]` from WD i's queue according to cfg.drain_mode. Energy and
/// capacity fields of the result are left at zero.
PostDecisionState apply_processing(const SystemState& s, const std::vector<double>& bits,
                                   const SimConfig& cfg);

/// f_k(s, a): clamps the action into its box, converts it into bits, and
/// drains the queues.
PostDecisionState apply_action(const SystemState& s, const Action& a, const SimConfig& cfg);

/// Appends arrivals, refreshes AoI and channel gains, and moves to slot + 1.
SystemState advance(const PostDecisionState& pds, const RandomEvents& ev, const SimConfig& cfg);

StepMetrics metrics_of(const SystemState& s, const PostDecisionState& pds);

struct StepResult {
  PostDecisionState pds;
  RandomEvents events;
  SystemState next;
  StepMetrics metrics;
};

/// Seeded MEC cell. Copyable; copies continue the same random stream.
class Environment {
 public:
  explicit Environment(SimConfig cfg);

  const SimConfig& config() const { return cfg_; }
  const SystemState& state() const { return state_; }
  void set_state(SystemState s) { state_ = std::move(s); }

  RandomEvents sample_events();
  StepResult step(const Action& a);

 private:
  SimConfig cfg_;
  std::mt19937_64 rng_;
  SystemState state_;
};

}  // namespace aoimec
