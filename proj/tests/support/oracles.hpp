// Independent reference implementations used by the unit tests, the
// acceptance binary and `aoimec selftest`. Nothing here calls into the code
// it is meant to check beyond reading plain inputs and outputs.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

namespace oracle {

/// Age of information rebuilt from arrival and completion counts only:
/// a_i(t) = t - min{gen : gen < t, finish >= t}, 0 when no such task.
class AoiEventLog {
 public:
  explicit AoiEventLog(int n) : gen_(static_cast<std::size_t>(n)), done_(gen_.size(), 0) {}

  /// Age at the start of slot `t`, before slot t's completions are recorded.
  long aoi(int wd, long t) const {
    const auto& g = gen_[static_cast<std::size_t>(wd)];
    const std::size_t first_open = done_[static_cast<std::size_t>(wd)];
    if (first_open >= g.size() || g[first_open] >= t) return 0;
    return t - g[first_open];
  }

  /// Records what happened during slot `t`.
  void record(int wd, long t, int completions, bool arrival) {
    auto k = static_cast<std::size_t>(wd);
    done_[k] += static_cast<std::size_t>(completions);
    if (done_[k] > gen_[k].size()) done_[k] = gen_[k].size() + 1;  // flags over-completion
    if (arrival) gen_[k].push_back(t);
  }

  bool consistent(int wd) const {
    const auto k = static_cast<std::size_t>(wd);
    return done_[k] <= gen_[k].size();
  }
  std::size_t open_tasks(int wd) const {
    const auto k = static_cast<std::size_t>(wd);
    return gen_[k].size() - std::min(done_[k], gen_[k].size());
  }

 private:
  std::vector<std::vector<long>> gen_;
  std::vector<std::size_t> done_;
};

/// One WD under the one-completion-per-slot rule, written case by case:
///  completion with tasks left behind  -> next task's remainder, a + 1 - gap
///  completion that empties the queue  -> arrival ? (size, 1) : (0, 0)
///  no completion                      -> d_r - processed, a + 1
/// `gaps[k]` is gen(task k+1) - gen(task k) for the queued tasks.
struct CaseInput {
  double hol_bits = 0.0;
  long aoi = 0;
  int queue_len = 0;
  std::vector<double> next_sizes;  // sizes of tasks behind the HOL
  std::vector<long> gaps;
  double processed = 0.0;  // offered capacity
  bool arrival = false;
  double arrival_bits = 0.0;
};

struct CaseOutput {
  double hol_bits = 0.0;
  long aoi = 0;
  int queue_len = 0;
  int completions = 0;
};

inline CaseOutput transition_case(const CaseInput& in) {
  CaseOutput out;
  const int g = in.arrival ? 1 : 0;
  if (in.queue_len == 0) {
    out.queue_len = g;
    out.hol_bits = in.arrival ? in.arrival_bits : 0.0;
    out.aoi = g;
    return out;
  }
  if (in.processed >= in.hol_bits) {
    out.completions = 1;
    out.queue_len = in.queue_len - 1 + g;
    if (in.queue_len >= 2) {
      out.hol_bits = in.next_sizes[0];
      out.aoi = in.aoi + 1 - in.gaps[0];
    } else {
      out.hol_bits = in.arrival ? in.arrival_bits : 0.0;
      out.aoi = g;
    }
    return out;
  }
  out.queue_len = in.queue_len + g;
  out.hol_bits = in.hol_bits - in.processed;
  out.aoi = in.aoi + 1;
  return out;
}

/// Central difference of a scalar function of one coordinate.
inline double central_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// |a - b| / max(|a|, |b|, floor).
inline double rel_error(double a, double b, double floor = 1e-12) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Average-cost optimum of a finite MDP by solving the Bellman equations for
/// every deterministic stationary policy (tiny problems only).
/// p[s][a][s'] transition probabilities, c[s][a] costs.
inline double brute_force_average_cost(const std::vector<std::vector<std::vector<double>>>& p,
                                       const std::vector<std::vector<double>>& c) {
  const std::size_t ns = p.size();
  const std::size_t na = c.front().size();
  std::size_t policies = 1;
  for (std::size_t s = 0; s < ns; ++s) policies *= na;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t code = 0; code < policies; ++code) {
    std::vector<std::size_t> act(ns);
    std::size_t rest = code;
    for (std::size_t s = 0; s < ns; ++s) {
      act[s] = rest % na;
      rest /= na;
    }
    // Stationary distribution by power iteration of the induced chain.
    std::vector<double> mu(ns, 1.0 / static_cast<double>(ns));
    for (int it = 0; it < 100000; ++it) {
      std::vector<double> nxt(ns, 0.0);
      for (std::size_t s = 0; s < ns; ++s)
        for (std::size_t t = 0; t < ns; ++t) nxt[t] += mu[s] * p[s][act[s]][t];
      // Lazy step keeps periodic chains convergent.
      double diff = 0.0;
      for (std::size_t s = 0; s < ns; ++s) {
        const double v = 0.5 * (mu[s] + nxt[s]);
        diff = std::max(diff, std::abs(v - mu[s]));
        mu[s] = v;
      }
      if (diff < 1e-15) break;
    }
    double avg = 0.0;
    for (std::size_t s = 0; s < ns; ++s) avg += mu[s] * c[s][act[s]];
    best = std::min(best, avg);
  }
  return best;
}

}  // namespace oracle
