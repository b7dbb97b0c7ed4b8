#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <string>

#include "aoimec/harness.hpp"
#include "aoimec/neural.hpp"
#include "checks.hpp"

namespace py = pybind11;
using namespace aoimec;

namespace {

using Overrides = std::map<std::string, std::string>;

ExperimentConfig make_config(const std::string& profile, const Overrides& overrides) {
  KeyValueFile kv;
  kv.set("profile", profile);
  for (const auto& [k, v] : overrides) kv.set(k, v);
  return experiment_config_from(kv);
}

py::dict summary_dict(const RunSummary& s) {
  py::dict d;
  d["policy"] = s.policy;
  d["seed"] = s.seed;
  d["n_wds"] = s.n_wds;
  d["slots"] = s.slots;
  d["mean_budget"] = s.mean_budget;
  d["mean_aoi"] = s.mean_aoi;
  d["mean_energy"] = s.mean_energy;
  d["violation_fraction"] = s.violation_fraction;
  d["first_window_aoi"] = s.first_window_aoi;
  d["final_window_aoi"] = s.final_window_aoi;
  d["final_window_energy"] = s.final_window_energy;
  d["lambda_final"] = s.lambda_final;
  return d;
}

py::dict trace_dict(const std::vector<TraceRow>& rows) {
  std::vector<long> slot_begin, slots;
  std::vector<double> aoi, energy, lambda, running_aoi, running_energy;
  for (const auto& r : rows) {
    slot_begin.push_back(r.slot_begin);
    slots.push_back(r.slots);
    aoi.push_back(r.mean_aoi());
    energy.push_back(r.mean_energy());
    lambda.push_back(r.lambda_mean);
    running_aoi.push_back(r.running_aoi);
    running_energy.push_back(r.running_energy);
  }
  py::dict d;
  d["slot_begin"] = slot_begin;
  d["slots"] = slots;
  d["mean_aoi"] = aoi;
  d["mean_energy"] = energy;
  d["lambda_mean"] = lambda;
  d["running_aoi"] = running_aoi;
  d["running_energy"] = running_energy;
  return d;
}

py::list cells_list(const std::vector<SweepCell>& cells) {
  py::list out;
  for (const auto& c : cells) {
    py::dict d;
    d["parameter"] = c.parameter;
    d["policy"] = policy_name(c.policy);
    d["median_aoi"] = c.median_aoi();
    d["median_energy"] = c.median_energy();
    d["median_final_aoi"] = c.median_final_aoi();
    py::list runs;
    for (const auto& r : c.runs) runs.append(summary_dict(r));
    d["runs"] = runs;
    out.append(d);
  }
  return out;
}

std::vector<PolicyKind> policies(const std::vector<std::string>& names) {
  std::vector<PolicyKind> out;
  for (const auto& n : names) out.push_back(parse_policy(n));
  return out;
}

py::dict state_dict(const SystemState& s) {
  std::vector<long> aoi;
  std::vector<int> q;
  std::vector<double> hol, gain;
  for (const auto& w : s.per_wd) {
    aoi.push_back(w.aoi_slots);
    q.push_back(w.queue_len);
    hol.push_back(w.hol_remaining_bits);
    gain.push_back(w.channel_gain);
  }
  py::dict d;
  d["slot"] = s.slot;
  d["aoi"] = aoi;
  d["queue_len"] = q;
  d["hol_remaining_bits"] = hol;
  d["channel_gain"] = gain;
  return d;
}

}  // namespace

PYBIND11_MODULE(_aoimec, m) {
  m.doc() = "AoI-aware edge-computing scheduling: simulator, learners, experiments";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def(
      "config_text",
      [](const std::string& profile, const Overrides& o) { return to_key_value(make_config(profile, o)); },
      py::arg("profile") = "desk", py::arg("overrides") = Overrides{},
      "Resolved experiment configuration as key = value text.");

  m.def(
      "run",
      [](const std::string& profile, const std::string& policy, std::uint64_t seed,
         const std::string& out_dir, const Overrides& o) {
        ExperimentConfig cfg = make_config(profile, o);
        cfg.policy = parse_policy(policy);
        RunResult r;
        {
          py::gil_scoped_release release;
          r = run_experiment(cfg, seed, out_dir);
        }
        py::dict d;
        d["summary"] = summary_dict(r.summary);
        d["trace"] = trace_dict(r.trace);
        return d;
      },
      py::arg("profile") = "smoke", py::arg("policy") = "dpds", py::arg("seed") = 1,
      py::arg("out_dir") = "", py::arg("overrides") = Overrides{},
      "Runs one seeded experiment and returns its summary and trace.");

  m.def(
      "sweep_n",
      [](const std::string& profile, const std::vector<int>& ns,
         const std::vector<std::string>& pol, const std::vector<std::uint64_t>& seeds, int jobs,
         const Overrides& o) {
        const ExperimentConfig cfg = make_config(profile, o);
        std::vector<SweepCell> cells;
        {
          py::gil_scoped_release release;
          cells = sweep_n(cfg, ns, policies(pol), seeds, jobs);
        }
        return cells_list(cells);
      },
      py::arg("profile"), py::arg("ns"), py::arg("policies"), py::arg("seeds"),
      py::arg("jobs") = 1, py::arg("overrides") = Overrides{});

  m.def(
      "sweep_budget",
      [](const std::string& profile, const std::vector<double>& multipliers,
         const std::vector<std::string>& pol, const std::vector<std::uint64_t>& seeds, int jobs,
         const Overrides& o) {
        const ExperimentConfig cfg = make_config(profile, o);
        std::vector<SweepCell> cells;
        {
          py::gil_scoped_release release;
          cells = sweep_budget(cfg, multipliers, policies(pol), seeds, jobs);
        }
        return cells_list(cells);
      },
      py::arg("profile"), py::arg("multipliers"), py::arg("policies"), py::arg("seeds"),
      py::arg("jobs") = 1, py::arg("overrides") = Overrides{});

  py::class_<Environment>(m, "Environment", "Seeded MEC cell stepped with explicit actions.")
      .def(py::init([](const std::string& profile, std::uint64_t seed, const Overrides& o) {
             SimConfig sim = make_config(profile, o).sim;
             sim.rng_seed = seed;
             return Environment(sim);
           }),
           py::arg("profile") = "desk", py::arg("seed") = 1, py::arg("overrides") = Overrides{})
      .def_property_readonly("n_wds", [](const Environment& e) { return e.config().n_wds; })
      .def_property_readonly("max_freq", [](const Environment& e) { return e.config().max_freq; })
      .def_property_readonly("max_power",
                             [](const Environment& e) { return e.config().max_power; })
      .def_property_readonly("bandwidth",
                             [](const Environment& e) { return e.config().bs_bandwidth; })
      .def_property_readonly("energy_budget",
                             [](const Environment& e) { return e.config().energy_budget; })
      .def("state", [](const Environment& e) { return state_dict(e.state()); })
      .def(
          "step",
          [](Environment& e, const std::vector<double>& freq, const std::vector<double>& power,
             const std::vector<double>& bandwidth) {
            Action a;
            a.freq = freq;
            a.power = power;
            a.bandwidth = bandwidth;
            const StepResult r = e.step(a);
            py::dict d;
            d["aoi"] = r.metrics.aoi;
            d["energy"] = r.metrics.energy;
            d["processed_bits"] = r.metrics.processed_bits;
            d["completions"] = r.metrics.completions;
            d["arrivals"] = r.metrics.arrivals;
            d["clamped"] = r.metrics.clamped;
            return d;
          },
          py::arg("freq"), py::arg("power"), py::arg("bandwidth"),
          "Applies one action and returns the slot's metrics.");

  m.def(
      "actor_flops",
      [](int n, int hidden) { return flop_count(nn::actor_arch(4 * n, n, hidden), nn::Pass::Forward); },
      py::arg("n_wds"), py::arg("hidden") = 128, "Forward-pass FLOPs of the actor network.");
  m.def(
      "value_flops",
      [](int n, int hidden) { return flop_count(nn::value_arch(4 * n, hidden), nn::Pass::Forward); },
      py::arg("n_wds"), py::arg("hidden") = 128, "Forward-pass FLOPs of the value network.");

  m.def(
      "selftest",
      [](bool quick) {
        py::gil_scoped_release release;
        std::vector<std::tuple<std::string, bool, std::string>> out;
        const auto add = [&](const char* name, const checks::Outcome& o) {
          out.emplace_back(name, o.pass, o.detail);
        };
        add("env-oracle", checks::env_oracle(quick ? 2000 : 10000));
        add("transition-cases", checks::transition_cases());
        add("rate-energy-duality", checks::rate_energy_duality(quick ? 1000 : 10000));
        add("network-gradients", checks::network_gradients(quick ? 3 : 20));
        add("cost-gradients", checks::cost_gradients(quick ? 100 : 500));
        add("actor-gradient", checks::actor_objective_gradient());
        add("flop-closed-forms", checks::flop_closed_forms());
        add("tabular-pds", checks::tabular_pds());
        add("feasibility-tracking", checks::feasibility_and_tracking());
        return out;
      },
      py::arg("quick") = true, "Property checks as (name, passed, detail) tuples.");
}
