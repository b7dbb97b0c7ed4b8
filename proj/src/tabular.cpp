#include "aoimec/tabular.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "binio.hpp"

namespace aoimec::tabular {

namespace {

int bin_of(const std::vector<double>& edges, double v) {
  return static_cast<int>(std::upper_bound(edges.begin(), edges.end(), v) - edges.begin());
}

void check_grid(const std::vector<double>& g, const char* name) {
  if (g.size() < 2) throw ConfigError(std::string(name) + ": needs at least two levels");
  for (std::size_t k = 1; k < g.size(); ++k)
    if (!(g[k] > g[k - 1])) throw ConfigError(std::string(name) + ": must be increasing");
  if (g.front() != 0.0 || g.back() != 1.0)
    throw ConfigError(std::string(name) + ": must start at 0 and end at 1");
}

void check_edges(const std::vector<double>& e, const char* name) {
  for (std::size_t k = 1; k < e.size(); ++k)
    if (!(e[k] > e[k - 1])) throw ConfigError(std::string(name) + ": edges must be increasing");
}

std::vector<double> levels(int n) {
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) g[static_cast<std::size_t>(k)] = static_cast<double>(k) / (n - 1);
  return g;
}

long wd_index(int hol_bin, long a, int q, int gain_bin, const Discretization& d) {
  const long a_levels = d.a_cap + 1, q_levels = d.q_cap + 1;
  return ((static_cast<long>(hol_bin) * a_levels + a) * q_levels + q) * d.gain_bins() + gain_bin;
}

}  // namespace

long Discretization::per_wd_states() const {
  return static_cast<long>(hol_bins()) * (a_cap + 1) * (q_cap + 1) * gain_bins();
}

void Discretization::validate() const {
  check_edges(hol_edges, "hol_edges");
  check_edges(gain_edges, "gain_edges");
  if (a_cap < 1) throw ConfigError("a_cap: must be >= 1");
  if (q_cap < 1) throw ConfigError("q_cap: must be >= 1");
  check_grid(freq_levels, "freq_levels");
  check_grid(power_levels, "power_levels");
  check_grid(share_levels, "share_levels");
}

Discretization make_discretization(const SimConfig& cfg, int hol_bins, long a_cap, int q_cap,
                                   int gain_bins, int levels_per_dim) {
  if (hol_bins < 1 || gain_bins < 1 || levels_per_dim < 2)
    throw ConfigError("discretization: bin and level counts must be positive");
  Discretization d;
  d.a_cap = a_cap;
  d.q_cap = q_cap;
  // Bin 0 holds the empty queue (d_r = 0); the rest split (0, task_bits_max].
  if (hol_bins > 1) {
    d.hol_edges.push_back(0.5);
    for (int k = 1; k < hol_bins - 1; ++k)
      d.hol_edges.push_back(cfg.task_bits_max * k / (hol_bins - 1));
  }
  double d_min = cfg.distance(0), d_max = d_min;
  for (int i = 1; i < cfg.n_wds; ++i) {
    d_min = std::min(d_min, cfg.distance(i));
    d_max = std::max(d_max, cfg.distance(i));
  }
  const double lo = std::log(channel_gain(d_max, 0.1, cfg));
  const double hi = std::log(channel_gain(d_min, 3.0, cfg));
  for (int k = 1; k < gain_bins; ++k) d.gain_edges.push_back(std::exp(lo + (hi - lo) * k / gain_bins));
  d.freq_levels = levels(levels_per_dim);
  d.power_levels = levels(levels_per_dim);
  d.share_levels = levels(levels_per_dim);
  d.validate();
  return d;
}

long state_count(const Discretization& d, int n_wds) {
  long total = 1;
  for (int i = 0; i < n_wds; ++i) {
    if (total > std::numeric_limits<long>::max() / d.per_wd_states())
      throw ConfigError("discretization: state space too large");
    total *= d.per_wd_states();
  }
  return total;
}

long state_index(const SystemState& s, const Discretization& d) {
  long idx = 0;
  for (const WDState& w : s.per_wd)
    idx = idx * d.per_wd_states() +
          wd_index(bin_of(d.hol_edges, w.hol_remaining_bits), std::min(w.aoi_slots, d.a_cap),
                   std::min(w.queue_len, d.q_cap), bin_of(d.gain_edges, w.channel_gain), d);
  return idx;
}

long pds_index(const PostDecisionState& s, const Discretization& d) {
  long idx = 0;
  for (const WDPostState& w : s.per_wd)
    idx = idx * d.per_wd_states() +
          wd_index(bin_of(d.hol_edges, w.hol_remaining_bits), std::min(w.aoi_slots, d.a_cap),
                   std::min(w.queue_len, d.q_cap), bin_of(d.gain_edges, w.channel_gain), d);
  return idx;
}

std::vector<Action> joint_actions(const Discretization& d, const SimConfig& cfg) {
  const int n = cfg.n_wds;
  const std::size_t nf = d.freq_levels.size(), np = d.power_levels.size(),
                    nw = d.share_levels.size();
  const std::size_t per = nf * np * nw;
  std::size_t total = 1;
  for (int i = 0; i < n; ++i) {
    if (total > 10000000 / per) throw ConfigError("discretization: joint action grid too large");
    total *= per;
  }
  std::vector<Action> out;
  out.reserve(total);
  for (std::size_t code = 0; code < total; ++code) {
    Action a = Action::zeros(n);
    std::size_t rest = code;
    double share_sum = 0.0;
    for (int i = n - 1; i >= 0; --i) {
      const auto k = static_cast<std::size_t>(i);
      const std::size_t c = rest % per;
      rest /= per;
      a.freq[k] = d.freq_levels[c / (np * nw)] * cfg.max_freq[k];
      a.power[k] = d.power_levels[(c / nw) % np] * cfg.max_power[k];
      a.bandwidth[k] = d.share_levels[c % nw];
      share_sum += a.bandwidth[k];
    }
    for (double& w : a.bandwidth) w = share_sum > 0.0 ? cfg.bs_bandwidth * w / share_sum : 0.0;
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<std::pair<long, double>> next_state_distribution(const PostDecisionState& pds,
                                                             const Discretization& d,
                                                             const SimConfig& cfg) {
  // Per-WD marginals are independent; combine them as a product.
  std::map<long, double> joint{{0, 1.0}};
  for (int i = 0; i < pds.n_wds(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    const WDPostState& w = pds.per_wd[k];
    const double p = cfg.arrival_rate[k];
    std::vector<std::pair<long, double>> local;

    // Fading: h' = h0 rho with rho ~ Exp(1).
    const double h0 = channel_gain(cfg.distance(i), 1.0, cfg);
    std::vector<double> gain_p(static_cast<std::size_t>(d.gain_bins()));
    for (int b = 0; b < d.gain_bins(); ++b) {
      const double lo = b == 0 ? 0.0 : d.gain_edges[static_cast<std::size_t>(b - 1)] / h0;
      const double hi = b + 1 == d.gain_bins() ? std::numeric_limits<double>::infinity()
                                               : d.gain_edges[static_cast<std::size_t>(b)] / h0;
      // Bin b holds edges[b-1] <= h < edges[b].
      gain_p[static_cast<std::size_t>(b)] = std::exp(-lo) - (std::isinf(hi) ? 0.0 : std::exp(-hi));
    }

    auto emit = [&](int hol_bin, long a, int q, double prob) {
      for (int b = 0; b < d.gain_bins(); ++b)
        local.emplace_back(
            wd_index(hol_bin, std::min(a, d.a_cap), std::min(q, d.q_cap), b, d),
            prob * gain_p[static_cast<std::size_t>(b)]);
    };

    if (!w.empty) {
      const int hol_bin = bin_of(d.hol_edges, w.hol_remaining_bits);
      emit(hol_bin, w.aoi_slots + 1, w.queue_len, 1.0 - p);
      emit(hol_bin, w.aoi_slots + 1, w.queue_len + 1, p);
    } else {
      emit(bin_of(d.hol_edges, 0.0), 0, 0, 1.0 - p);
      // New task size ~ U[min, max] spread over the d_r bins.
      const double lo = cfg.task_bits_min, hi = cfg.task_bits_max;
      for (int b = 0; b < d.hol_bins(); ++b) {
        const double e_lo =
            b == 0 ? -std::numeric_limits<double>::infinity() : d.hol_edges[static_cast<std::size_t>(b - 1)];
        const double e_hi = b + 1 == d.hol_bins() ? std::numeric_limits<double>::infinity()
                                                  : d.hol_edges[static_cast<std::size_t>(b)];
        const double overlap = std::max(0.0, std::min(hi, e_hi) - std::max(lo, e_lo));
        const double frac = hi > lo ? overlap / (hi - lo) : (lo >= e_lo && lo < e_hi ? 1.0 : 0.0);
        if (frac > 0.0) emit(b, 1, 1, p * frac);
      }
    }

    std::map<long, double> next;
    for (const auto& [idx, pr] : joint)
      for (const auto& [li, lp] : local)
        if (pr * lp > 0.0) next[idx * d.per_wd_states() + li] += pr * lp;
    joint = std::move(next);
  }
  return {joint.begin(), joint.end()};
}

// ---------------------------------------------------------------- explicit MDPs

void ExplicitMdp::validate() const {
  if (states <= 0 || actions <= 0) throw std::invalid_argument("ExplicitMdp: empty");
  if (p.size() != static_cast<std::size_t>(states) * actions * states ||
      cost.size() != static_cast<std::size_t>(states) * actions)
    throw std::invalid_argument("ExplicitMdp: array sizes do not match dimensions");
  for (int s = 0; s < states; ++s)
    for (int a = 0; a < actions; ++a) {
      double total = 0.0;
      for (int s2 = 0; s2 < states; ++s2) {
        if (prob(s, a, s2) < 0.0) throw std::invalid_argument("ExplicitMdp: negative probability");
        total += prob(s, a, s2);
      }
      if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument("ExplicitMdp: rows must sum to 1");
    }
}

void PdsMdp::validate() const {
  if (states <= 0 || actions <= 0 || post_states <= 0)
    throw std::invalid_argument("PdsMdp: empty");
  if (post.size() != static_cast<std::size_t>(states) * actions ||
      pu.size() != static_cast<std::size_t>(post_states) * states ||
      cost.size() != static_cast<std::size_t>(states) * actions)
    throw std::invalid_argument("PdsMdp: array sizes do not match dimensions");
  for (int k : post)
    if (k < 0 || k >= post_states) throw std::invalid_argument("PdsMdp: post index out of range");
  for (int k = 0; k < post_states; ++k) {
    double total = 0.0;
    for (int s = 0; s < states; ++s) total += pu_prob(k, s);
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("PdsMdp: rows must sum to 1");
  }
}

ExplicitMdp PdsMdp::composite() const {
  validate();
  ExplicitMdp m;
  m.states = states;
  m.actions = actions;
  m.cost = cost;
  m.p.assign(static_cast<std::size_t>(states) * actions * states, 0.0);
  for (int s = 0; s < states; ++s)
    for (int a = 0; a < actions; ++a)
      for (int s2 = 0; s2 < states; ++s2)
        m.p[(static_cast<std::size_t>(s) * actions + a) * states + s2] = pu_prob(f(s, a), s2);
  return m;
}

int PdsMdp::sample_next(int k, std::mt19937_64& rng) const {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  for (int s = 0; s < states; ++s) {
    acc += pu_prob(k, s);
    if (u < acc) return s;
  }
  return states - 1;
}

RviResult rvi_oracle(const ExplicitMdp& mdp, double tol, long max_sweeps) {
  mdp.validate();
  const int ns = mdp.states, na = mdp.actions;
  std::vector<double> h(static_cast<std::size_t>(ns), 0.0), th(h.size());
  RviResult r;
  r.policy.assign(h.size(), 0);
  // Aperiodicity transform: T_tau h = (1 - tau) h + tau T h keeps the same
  // gain and relative values while guaranteeing convergence.
  const double tau = 0.5;
  for (long sweep = 1; sweep <= max_sweeps; ++sweep) {
    for (int s = 0; s < ns; ++s) {
      double best = std::numeric_limits<double>::infinity();
      int arg = 0;
      for (int a = 0; a < na; ++a) {
        double q = mdp.c(s, a);
        for (int s2 = 0; s2 < ns; ++s2) q += mdp.prob(s, a, s2) * h[static_cast<std::size_t>(s2)];
        if (q < best) {
          best = q;
          arg = a;
        }
      }
      th[static_cast<std::size_t>(s)] = best;
      r.policy[static_cast<std::size_t>(s)] = arg;
    }
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int s = 0; s < ns; ++s) {
      const double diff = th[static_cast<std::size_t>(s)] - h[static_cast<std::size_t>(s)];
      lo = std::min(lo, diff);
      hi = std::max(hi, diff);
    }
    if (hi - lo < tol) {
      r.avg_cost = 0.5 * (lo + hi);
      r.relative_values = h;
      r.sweeps = sweep;
      return r;
    }
    const double ref = th[0];
    for (std::size_t s = 0; s < h.size(); ++s)
      h[s] = (1.0 - tau) * h[s] + tau * (th[s] - ref);
  }
  throw std::runtime_error("rvi_oracle: span of the Bellman residual still >= " +
                           std::to_string(tol) + " after " + std::to_string(max_sweeps) +
                           " sweeps (is the MDP unichain?)");
}

double step_size(long t) { return 1.0 / std::sqrt(static_cast<double>(std::max(t, 1L))); }

// ---------------------------------------------------------------- tables

namespace {
constexpr const char* kPdsMagic = "AOIPDS";
constexpr const char* kQMagic = "AOIQT";
}  // namespace

void PdsTable::save(std::ostream& out, const Discretization* disc) const {
  out << kPdsMagic << " 1 " << value.size() << ' ' << t;
  if (disc) {
    out << " hol";
    for (double e : disc->hol_edges) out << ' ' << e;
    out << " a_cap " << disc->a_cap << " q_cap " << disc->q_cap << " gain";
    for (double e : disc->gain_edges) out << ' ' << e;
  }
  out << '\n';
  binio::put(out, avg_cost);
  binio::put_vec(out, value);
  binio::put_vec(out, visits);
  if (!out) throw std::runtime_error("PdsTable::save: write failed");
}

PdsTable PdsTable::load(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("PdsTable::load: missing header");
  std::istringstream hs(line);
  std::string magic;
  int version = 0;
  std::size_t size = 0;
  long t = 0;
  hs >> magic >> version >> size >> t;
  if (!hs || magic != kPdsMagic || version != 1)
    throw std::runtime_error("PdsTable::load: bad header");
  PdsTable table;
  table.t = t;
  table.avg_cost = binio::get<double>(in);
  table.value = binio::get_vec<double>(in);
  table.visits = binio::get_vec<long>(in);
  if (table.value.size() != size || table.visits.size() != size)
    throw std::runtime_error("PdsTable::load: size mismatch");
  return table;
}

double QTable::min_q(int s) const { return at(s, argmin(s)); }

int QTable::argmin(int s) const {
  int best = 0;
  for (int a = 1; a < actions; ++a)
    if (at(s, a) < at(s, best)) best = a;
  return best;
}

void QTable::save(std::ostream& out) const {
  out << kQMagic << " 1 " << states << ' ' << actions << ' ' << t << '\n';
  binio::put(out, avg_cost);
  binio::put_vec(out, q);
  binio::put_vec(out, visits);
  if (!out) throw std::runtime_error("QTable::save: write failed");
}

QTable QTable::load(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("QTable::load: missing header");
  std::istringstream hs(line);
  std::string magic;
  int version = 0, s = 0, a = 0;
  long t = 0;
  hs >> magic >> version >> s >> a >> t;
  if (!hs || magic != kQMagic || version != 1 || s <= 0 || a <= 0)
    throw std::runtime_error("QTable::load: bad header");
  QTable qt(s, a);
  qt.t = t;
  qt.avg_cost = binio::get<double>(in);
  qt.q = binio::get_vec<double>(in);
  qt.visits = binio::get_vec<long>(in);
  if (qt.q.size() != static_cast<std::size_t>(s) * a || qt.visits.size() != qt.q.size())
    throw std::runtime_error("QTable::load: size mismatch");
  return qt;
}

// ---------------------------------------------------------------- learners

int greedy_action(const PdsMdp& mdp, const PdsTable& table, int s) {
  int best = 0;
  double best_v = std::numeric_limits<double>::infinity();
  for (int a = 0; a < mdp.actions; ++a) {
    const double v = mdp.c(s, a) + table.value[static_cast<std::size_t>(mdp.f(s, a))];
    if (v < best_v) {
      best_v = v;
      best = a;
    }
  }
  return best;
}

double state_value(const PdsMdp& mdp, const PdsTable& table, int s) {
  const int a = greedy_action(mdp, table, s);
  return mdp.c(s, a) + table.value[static_cast<std::size_t>(mdp.f(s, a))] - table.avg_cost;
}

void pds_learn_step(const PdsMdp& mdp, PdsTable& table, int s, int a, int s_next, double beta) {
  ++table.t;
  const double b = beta >= 0.0 ? beta : step_size(table.t);
  const double v_s = state_value(mdp, table, s);
  const double v_next = state_value(mdp, table, s_next);
  const auto k = static_cast<std::size_t>(mdp.f(s, a));
  table.value[k] = (1.0 - b) * table.value[k] + b * v_next;
  ++table.visits[k];
  table.avg_cost = (1.0 - b) * table.avg_cost + b * (mdp.c(s, a) + v_next - v_s);
}

PdsTable run_pds_learning(const PdsMdp& mdp, long steps, std::uint64_t seed) {
  mdp.validate();
  std::mt19937_64 rng(seed);
  PdsTable table(static_cast<std::size_t>(mdp.post_states));
  int s = 0;
  for (long t = 0; t < steps; ++t) {
    const int a = greedy_action(mdp, table, s);
    const int s_next = mdp.sample_next(mdp.f(s, a), rng);
    pds_learn_step(mdp, table, s, a, s_next);
    s = s_next;
  }
  return table;
}

void q_learn_step(QTable& qt, int s, int a, double cost, int s_next, double beta) {
  ++qt.t;
  const double b = beta >= 0.0 ? beta : step_size(qt.t);
  const double min_next = qt.min_q(s_next);
  const double min_here = qt.min_q(s);
  double& q = qt.at(s, a);
  q = (1.0 - b) * q + b * (cost - qt.avg_cost + min_next);
  ++qt.visits[static_cast<std::size_t>(s) * qt.actions + a];
  qt.avg_cost = (1.0 - b) * qt.avg_cost + b * (cost + min_next - min_here);
}

QTable run_q_learning(const ExplicitMdp& mdp, long steps, std::uint64_t seed) {
  mdp.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> any(0, mdp.actions - 1);
  QTable qt(mdp.states, mdp.actions);
  int s = 0;
  for (long t = 1; t <= steps; ++t) {
    const double eps = std::max(0.01, step_size(t));
    const int a = u(rng) < eps ? any(rng) : qt.argmin(s);
    double acc = 0.0, r = u(rng);
    int s_next = mdp.states - 1;
    for (int s2 = 0; s2 < mdp.states; ++s2) {
      acc += mdp.prob(s, a, s2);
      if (r < acc) {
        s_next = s2;
        break;
      }
    }
    q_learn_step(qt, s, a, mdp.c(s, a), s_next);
    s = s_next;
  }
  return qt;
}

GreedyChoice greedy_action_pds(const SystemState& s, const PdsTable& table,
                               const LagrangeMultipliers& lm, const ArrivalEstimates& est,
                               const Discretization& disc, const SimConfig& cfg,
                               const std::vector<Action>& actions) {
  if (actions.empty()) throw std::invalid_argument("greedy_action_pds: empty action grid");
  GreedyChoice best;
  best.objective = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < actions.size(); ++k) {
    const PostDecisionState pds = apply_action(s, actions[k], cfg);
    const double v = redesigned_cost(s, pds, lm, est, cfg) +
                     table.value.at(static_cast<std::size_t>(pds_index(pds, disc)));
    if (v < best.objective) {
      best.objective = v;
      best.index = k;
    }
  }
  best.action = actions[best.index];
  return best;
}

void pds_learn_step(const SystemState& s, const PostDecisionState& pds,
                    const SystemState& s_next, PdsTable& table, const LagrangeMultipliers& lm,
                    const ArrivalEstimates& est, const Discretization& disc, const SimConfig& cfg,
                    const std::vector<Action>& actions, double beta) {
  ++table.t;
  const double b = beta >= 0.0 ? beta : step_size(table.t);
  const double v_s =
      greedy_action_pds(s, table, lm, est, disc, cfg, actions).objective - table.avg_cost;
  const double v_next =
      greedy_action_pds(s_next, table, lm, est, disc, cfg, actions).objective - table.avg_cost;
  const auto k = static_cast<std::size_t>(pds_index(pds, disc));
  const double c = redesigned_cost(s, pds, lm, est, cfg);
  table.value.at(k) = (1.0 - b) * table.value[k] + b * v_next;
  ++table.visits[k];
  table.avg_cost = (1.0 - b) * table.avg_cost + b * (c + v_next - v_s);
}

}  // namespace aoimec::tabular
