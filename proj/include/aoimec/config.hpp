#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace aoimec {

/// Raised for malformed or inconsistent configuration. The message always
/// names the offending key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Position {
  double x = 0.0;
  double y = 0.0;
};

/// How processing capacity beyond the head-of-line task is treated.
///  CarryOver: leftover capacity drains the next queued tasks in the same slot.
///  Clamp:     at most the HOL remainder is processed (one completion per slot).
enum class DrainMode { CarryOver, Clamp };

/// Physical parameters of the cell. Per-WD vectors always have length n_wds
/// after validate().
struct SimConfig {
  int n_wds = 5;
  double slot_seconds = 0.01;      // s
  double cycles_per_bit = 1000.0;  // cycles/bit
  double energy_eff = 1e-28;       // J s^2 / cycle^3
  double noise_power = 1e-11;      // W
  double pathloss_exp = 3.8;
  double bs_bandwidth = 20e6;  // Hz
  std::vector<double> max_freq;       // Hz
  std::vector<double> max_power;      // W
  std::vector<double> energy_budget;  // J per slot
  std::vector<double> arrival_rate;   // probability per slot
  double task_bits_min = 20e3;
  double task_bits_max = 50e3;
  double area_side = 100.0;  // m, WDs are placed in [0, side]^2
  Position bs_position{50.0, 50.0};
  std::vector<Position> wd_positions;
  std::uint64_t layout_seed = 1;
  long horizon_slots = 20000;
  std::uint64_t rng_seed = 1;
  DrainMode drain_mode = DrainMode::CarryOver;

  double distance(int wd) const;
  double mean_task_bits() const { return 0.5 * (task_bits_min + task_bits_max); }

  /// Fills per-WD vectors given as a single value, samples positions from
  /// layout_seed when absent, and checks every invariant.
  void finalize();
  void validate() const;
};

/// Full-scale cell: 15 WDs, 20 MHz, 1e5 slots.
SimConfig full_config();
/// CI-scale cell: 5 WDs sharing 5/15 of the full-scale bandwidth, 2e4 slots.
SimConfig desk_config();

/// Flat `key = value` file with `#` comments.
class KeyValueFile {
 public:
  static KeyValueFile parse(const std::string& text);
  static KeyValueFile load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  const std::string& raw(const std::string& key) const;
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

  double get_double(const std::string& key, double fallback) const;
  long get_long(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;

  /// Throws ConfigError naming the first key not in `known`.
  void require_known(const std::vector<std::string>& known) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// Applies the simulation keys of `kv` on top of `base` and finalizes.
SimConfig sim_config_from(const KeyValueFile& kv, SimConfig base);

/// Keys understood by sim_config_from.
const std::vector<std::string>& sim_config_keys();

/// Resolved config (positions included) in the key-value format.
std::string to_key_value(const SimConfig& cfg);

}  // namespace aoimec
