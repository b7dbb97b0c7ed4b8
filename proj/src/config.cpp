#include "aoimec/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

namespace aoimec {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    double v = std::stod(text, &used);
    if (trim(text.substr(used)).empty()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("config key '" + key + "': expected a number, got '" + text + "'");
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void broadcast(std::vector<double>& v, int n, const char* key) {
  if (v.size() == 1 && n > 1) v.assign(static_cast<std::size_t>(n), v.front());
  if (static_cast<int>(v.size()) != n)
    throw ConfigError(std::string("config key '") + key + "': expected 1 or n_wds values");
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += fmt(v[i]);
  }
  return out;
}

}  // namespace

double SimConfig::distance(int wd) const {
  const auto& p = wd_positions.at(static_cast<std::size_t>(wd));
  return std::hypot(p.x - bs_position.x, p.y - bs_position.y);
}

void SimConfig::finalize() {
  if (n_wds < 1) throw ConfigError("config key 'n_wds': must be >= 1");
  broadcast(max_freq, n_wds, "max_freq");
  broadcast(max_power, n_wds, "max_power");
  broadcast(energy_budget, n_wds, "energy_budget");
  broadcast(arrival_rate, n_wds, "arrival_rate");
  if (wd_positions.empty()) {
    std::mt19937_64 rng(layout_seed);
    std::uniform_real_distribution<double> coord(0.0, area_side);
    wd_positions.reserve(static_cast<std::size_t>(n_wds));
    while (static_cast<int>(wd_positions.size()) < n_wds) {
      Position p{coord(rng), coord(rng)};
      // A WD on top of the BS has an undefined path loss.
      if (std::hypot(p.x - bs_position.x, p.y - bs_position.y) < 1.0) continue;
      wd_positions.push_back(p);
    }
  }
  validate();
}

void SimConfig::validate() const {
  auto positive = [](double v, const char* key) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw ConfigError(std::string("config key '") + key + "': must be positive and finite");
  };
  if (n_wds < 1) throw ConfigError("config key 'n_wds': must be >= 1");
  positive(slot_seconds, "slot_seconds");
  positive(cycles_per_bit, "cycles_per_bit");
  positive(energy_eff, "energy_eff");
  positive(noise_power, "noise_power");
  positive(pathloss_exp, "pathloss_exp");
  positive(bs_bandwidth, "bs_bandwidth");
  positive(task_bits_min, "task_bits_min");
  positive(task_bits_max, "task_bits_max");
  positive(area_side, "area_side");
  if (task_bits_min > task_bits_max)
    throw ConfigError("config key 'task_bits_min': must not exceed task_bits_max");
  if (horizon_slots < 0) throw ConfigError("config key 'horizon_slots': must be >= 0");
  const auto n = static_cast<std::size_t>(n_wds);
  for (const auto* key : {"max_freq", "max_power", "energy_budget", "arrival_rate"}) {
    const std::vector<double>& v = std::string(key) == "max_freq"        ? max_freq
                                   : std::string(key) == "max_power"     ? max_power
                                   : std::string(key) == "energy_budget" ? energy_budget
                                                                         : arrival_rate;
    if (v.size() != n) throw ConfigError(std::string("config key '") + key + "': wrong length");
    for (double x : v) positive(x, key);
  }
  for (double p : arrival_rate)
    if (p >= 1.0) throw ConfigError("config key 'arrival_rate': must lie in (0, 1)");
  if (wd_positions.size() != n) throw ConfigError("config key 'wd_positions': wrong length");
  for (int i = 0; i < n_wds; ++i)
    if (!(distance(i) > 0.0))
      throw ConfigError("config key 'wd_positions': WD " + std::to_string(i) +
                        " is collocated with the BS");
}

SimConfig full_config() {
  SimConfig cfg;
  cfg.n_wds = 15;
  cfg.bs_bandwidth = 20e6;
  cfg.max_freq = {2e9};
  cfg.max_power = {1.0};
  cfg.energy_budget = {0.1 * cfg.slot_seconds};
  cfg.arrival_rate = {0.3};
  cfg.horizon_slots = 100000;
  cfg.layout_seed = 2024;
  cfg.finalize();
  return cfg;
}

SimConfig desk_config() {
  SimConfig cfg;
  cfg.n_wds = 5;
  cfg.bs_bandwidth = 20e6 * 5.0 / 15.0;
  cfg.max_freq = {2e9};
  cfg.max_power = {1.0};
  cfg.energy_budget = {0.1 * cfg.slot_seconds};
  cfg.arrival_rate = {0.3};
  cfg.horizon_slots = 20000;
  cfg.layout_seed = 2024;
  cfg.finalize();
  return cfg;
}

KeyValueFile KeyValueFile::parse(const std::string& text) {
  KeyValueFile kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    kv.values_[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValueFile KeyValueFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

const std::string& KeyValueFile::raw(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("config key '" + key + "' is missing");
  return it->second;
}

double KeyValueFile::get_double(const std::string& key, double fallback) const {
  return has(key) ? parse_double(key, raw(key)) : fallback;
}

long KeyValueFile::get_long(const std::string& key, long fallback) const {
  if (!has(key)) return fallback;
  double v = parse_double(key, raw(key));
  if (v != std::floor(v)) throw ConfigError("config key '" + key + "': expected an integer");
  return static_cast<long>(v);
}

bool KeyValueFile::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  std::string v = raw(key);
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + raw(key) + "'");
}

std::string KeyValueFile::get_string(const std::string& key, const std::string& fallback) const {
  return has(key) ? raw(key) : fallback;
}

std::vector<double> KeyValueFile::get_doubles(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split(raw(key), ',')) out.push_back(parse_double(key, item));
  if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
  return out;
}

void KeyValueFile::require_known(const std::vector<std::string>& known) const {
  for (const auto& [key, value] : values_)
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError("unknown config key '" + key + "'");
}

const std::vector<std::string>& sim_config_keys() {
  static const std::vector<std::string> keys = {
      "n_wds",         "slot_seconds",  "cycles_per_bit", "energy_eff",    "noise_power",
      "pathloss_exp",  "bs_bandwidth",  "max_freq",       "max_power",     "energy_budget",
      "arrival_rate",  "task_bits_min", "task_bits_max",  "area_side",     "bs_position",
      "wd_positions",  "layout_seed",   "horizon_slots",  "rng_seed",      "drain_mode"};
  return keys;
}

SimConfig sim_config_from(const KeyValueFile& kv, SimConfig cfg) {
  const int old_n = cfg.n_wds;
  cfg.n_wds = static_cast<int>(kv.get_long("n_wds", cfg.n_wds));
  cfg.slot_seconds = kv.get_double("slot_seconds", cfg.slot_seconds);
  cfg.cycles_per_bit = kv.get_double("cycles_per_bit", cfg.cycles_per_bit);
  cfg.energy_eff = kv.get_double("energy_eff", cfg.energy_eff);
  cfg.noise_power = kv.get_double("noise_power", cfg.noise_power);
  cfg.pathloss_exp = kv.get_double("pathloss_exp", cfg.pathloss_exp);
  cfg.bs_bandwidth = kv.get_double("bs_bandwidth", cfg.bs_bandwidth);
  cfg.task_bits_min = kv.get_double("task_bits_min", cfg.task_bits_min);
  cfg.task_bits_max = kv.get_double("task_bits_max", cfg.task_bits_max);
  cfg.area_side = kv.get_double("area_side", cfg.area_side);
  cfg.horizon_slots = kv.get_long("horizon_slots", cfg.horizon_slots);
  cfg.rng_seed = static_cast<std::uint64_t>(kv.get_long("rng_seed", static_cast<long>(cfg.rng_seed)));

  // Per-WD vectors inherited from a profile with a different N collapse to
  // their first value before broadcasting.
  auto per_wd = [&](const char* key, std::vector<double>& v) {
    if (kv.has(key)) {
      v = kv.get_doubles(key);
    } else if (cfg.n_wds != old_n && !v.empty()) {
      v.assign(1, v.front());
    }
  };
  per_wd("max_freq", cfg.max_freq);
  per_wd("max_power", cfg.max_power);
  per_wd("energy_budget", cfg.energy_budget);
  per_wd("arrival_rate", cfg.arrival_rate);

  if (kv.has("bs_position")) {
    auto xy = kv.get_doubles("bs_position");
    if (xy.size() != 2) throw ConfigError("config key 'bs_position': expected 'x, y'");
    cfg.bs_position = {xy[0], xy[1]};
  }
  bool relayout = cfg.n_wds != old_n;
  if (kv.has("layout_seed")) {
    cfg.layout_seed = static_cast<std::uint64_t>(kv.get_long("layout_seed", 0));
    relayout = true;
  }
  if (kv.has("area_side") || kv.has("bs_position")) relayout = true;
  if (kv.has("wd_positions")) {
    cfg.wd_positions.clear();
    for (const auto& pair : split(kv.raw("wd_positions"), ';')) {
      auto xy = split(pair, ',');
      if (xy.size() != 2) throw ConfigError("config key 'wd_positions': expected 'x, y; x, y; ...'");
      cfg.wd_positions.push_back(
          {parse_double("wd_positions", xy[0]), parse_double("wd_positions", xy[1])});
    }
  } else if (relayout) {
    cfg.wd_positions.clear();
  }

  if (kv.has("drain_mode")) {
    const auto& mode = kv.raw("drain_mode");
    if (mode == "carry_over") cfg.drain_mode = DrainMode::CarryOver;
    else if (mode == "clamp") cfg.drain_mode = DrainMode::Clamp;
    else throw ConfigError("config key 'drain_mode': expected carry_over or clamp");
  }
  cfg.finalize();
  return cfg;
}

std::string to_key_value(const SimConfig& cfg) {
  std::ostringstream os;
  os << "n_wds = " << cfg.n_wds << "\n"
     << "slot_seconds = " << fmt(cfg.slot_seconds) << "\n"
     << "cycles_per_bit = " << fmt(cfg.cycles_per_bit) << "\n"
     << "energy_eff = " << fmt(cfg.energy_eff) << "\n"
     << "noise_power = " << fmt(cfg.noise_power) << "\n"
     << "pathloss_exp = " << fmt(cfg.pathloss_exp) << "\n"
     << "bs_bandwidth = " << fmt(cfg.bs_bandwidth) << "\n"
     << "max_freq = " << join(cfg.max_freq) << "\n"
     << "max_power = " << join(cfg.max_power) << "\n"
     << "energy_budget = " << join(cfg.energy_budget) << "\n"
     << "arrival_rate = " << join(cfg.arrival_rate) << "\n"
     << "task_bits_min = " << fmt(cfg.task_bits_min) << "\n"
     << "task_bits_max = " << fmt(cfg.task_bits_max) << "\n"
     << "area_side = " << fmt(cfg.area_side) << "\n"
     << "bs_position = " << fmt(cfg.bs_position.x) << ", " << fmt(cfg.bs_position.y) << "\n"
     << "wd_positions = ";
  for (std::size_t i = 0; i < cfg.wd_positions.size(); ++i) {
    if (i) os << "; ";
    os << fmt(cfg.wd_positions[i].x) << ", " << fmt(cfg.wd_positions[i].y);
  }
  os << "\n"
     << "layout_seed = " << cfg.layout_seed << "\n"
     << "horizon_slots = " << cfg.horizon_slots << "\n"
     << "rng_seed = " << cfg.rng_seed << "\n"
     << "drain_mode = " << (cfg.drain_mode == DrainMode::Clamp ? "clamp" : "carry_over") << "\n";
  return os.str();
}

}  // namespace aoimec
