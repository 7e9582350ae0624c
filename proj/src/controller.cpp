#include "splitsim/controller.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "json.hpp"

namespace splitsim {

using nlohmann::json;

void validate(const ControllerPolicy& policy) {
  if (!(policy.window_s > 0.0)) throw ValidationError("policy.window_s must be > 0");
  if (!(policy.decision_period_s > 0.0))
    throw ValidationError("policy.decision_period_s must be > 0");
  if (policy.hysteresis_pct < 0.0)
    throw ValidationError("policy.hysteresis_pct must be >= 0");
  if (policy.switch_penalty_s < 0.0)
    throw ValidationError("policy.switch_penalty_s must be >= 0");
}

std::vector<double> estimate_rates(const std::vector<std::vector<double>>& arrival_times,
                                   double now_s, double window_s) {
  if (!(window_s > 0.0)) throw ValidationError("estimate_rates: window_s must be > 0");
  std::vector<double> rates(arrival_times.size(), 0.0);
  const double lo = now_s - window_s;
  for (std::size_t i = 0; i < arrival_times.size(); ++i) {
    const auto& ts = arrival_times[i];
    const auto hi_it = std::upper_bound(ts.begin(), ts.end(), now_s);
    const auto lo_it = std::upper_bound(ts.begin(), ts.end(), lo);
    rates[i] = static_cast<double>(hi_it - lo_it) / window_s;
  }
  return rates;
}

ReplayReport replay(const ProfileSet& set, const WorkloadSpec& workload,
                    const ControllerPolicy& policy, double horizon_s,
                    std::uint64_t seed, CacheMode cache_mode, AlphaMode alpha_mode,
                    const std::optional<Configuration>& initial) {
  validate(policy);
  validate(workload);
  if (!(horizon_s > 0.0)) throw ValidationError("replay: horizon_s must be > 0");

  // Tenants in workload order; every workload model must be profiled.
  std::vector<const ModelProfile*> models;
  std::vector<std::vector<RatePoint>> schedules;
  for (const auto& e : workload.entries) {
    const int idx = set.index_of(e.model);
    if (idx < 0) throw ValidationError("replay: unknown model " + e.model);
    models.push_back(&set.models[idx]);
    schedules.push_back(e.schedule);
  }
  const std::size_t n = models.size();
  if (n == 0) throw ValidationError("replay: empty workload");

  std::vector<int> cur_p(n, 0), cur_k(n, 0);
  if (initial) {
    for (std::size_t i = 0; i < n; ++i) {
      auto pit = initial->partitions.find(models[i]->name);
      if (pit == initial->partitions.end())
        throw ValidationError("replay: initial configuration missing " + models[i]->name);
      cur_p[i] = pit->second;
      auto kit = initial->cores.find(models[i]->name);
      cur_k[i] = kit == initial->cores.end() ? 0 : kit->second;
    }
  } else {
    // The deployment is assumed to begin at the statically optimal
    // configuration for the initial rates; exact when the space is small.
    std::vector<double> rates0(n);
    for (std::size_t i = 0; i < n; ++i)
      rates0[i] = workload.rate_at(models[i]->name, 0.0);
    AllocationResult start;
    try {
      start = brute_force_optimize(models, rates0, set.hardware, alpha_mode, 200'000);
    } catch (const GuardError&) {
      start = greedy_optimize(models, rates0, set.hardware, alpha_mode);
    }
    cur_p = start.partitions;
    cur_k = start.cores;
  }

  SystemState state;
  state.hw = set.hardware;
  state.alpha_mode = alpha_mode;
  for (std::size_t i = 0; i < n; ++i) state.tenants.push_back({models[i], 0.0});
  state.partitions = cur_p;
  state.cores = cur_k;

  PipelineSim sim(state, schedules, cache_mode, seed, /*arrival_budget=*/-1,
                  /*warmup=*/0, horizon_s, std::nullopt);

  ReplayReport rep;
  rep.horizon_s = horizon_s;
  rep.seed = seed;
  for (std::size_t i = 0; i < n; ++i) rep.model_names.push_back(models[i]->name);

  for (double t = policy.decision_period_s; t <= horizon_s + 1e-9;
       t += policy.decision_period_s) {
    sim.run_until(t);
    // Clip the window to the observed timeline so early estimates are not
    // biased low by the empty span before t = 0.
    const double window = std::min(policy.window_s, t);
    const std::vector<double> rates = estimate_rates(sim.arrival_log(), t, window);

    const auto t0 = std::chrono::steady_clock::now();
    const LatencyEstimate current =
        evaluate_candidate(models, rates, set.hardware, cur_p, cur_k, alpha_mode);
    const AllocationResult cand =
        greedy_optimize(models, rates, set.hardware, alpha_mode);
    const auto t1 = std::chrono::steady_clock::now();

    bool do_switch = false;
    if (cand.feasible && !(cand.partitions == cur_p && cand.cores == cur_k)) {
      if (!std::isfinite(current.objective)) {
        do_switch = true;
      } else if (current.objective > 0.0) {
        const double improvement_pct =
            (current.objective - cand.objective) / current.objective * 100.0;
        do_switch = improvement_pct > policy.hysteresis_pct;
      }
    }
    if (do_switch) {
      cur_p = cand.partitions;
      cur_k = cand.cores;
      sim.set_config(cur_p, cur_k, policy.switch_penalty_s);
      ++rep.switches;
    }

    EpochRecord rec;
    rec.t = t;
    rec.rates = rates;
    rec.objective_current = current.objective;
    rec.objective_candidate = cand.objective;
    rec.switched = do_switch;
    rec.partitions = cur_p;
    rec.cores = cur_k;
    rec.decision_wall_us =
        std::chrono::duration<double, std::micro>(t1 - t0).count();
    double lat_sum = 0.0;
    std::int64_t lat_n = 0;
    for (const auto& c : sim.completions()) {
      if (c.t > t - policy.window_s && c.t <= t) {
        lat_sum += c.e2e_s;
        ++lat_n;
      }
    }
    rec.completed_in_window = lat_n;
    rec.window_mean_latency_s = lat_n > 0 ? lat_sum / lat_n : 0.0;
    rep.epochs.push_back(std::move(rec));
  }

  sim.run_all();
  rep.sim = sim.build_report();
  return rep;
}

std::string ReplayReport::to_jsonl(bool stable_output) const {
  std::string out;
  for (const auto& e : epochs) {
    json rates = json::object();
    json parts = json::object();
    json cores = json::object();
    for (std::size_t i = 0; i < model_names.size(); ++i) {
      rates[model_names[i]] = e.rates[i];
      parts[model_names[i]] = e.partitions[i];
      cores[model_names[i]] = e.cores[i];
    }
    json j{{"type", "epoch"},
           {"t", e.t},
           {"rates", rates},
           {"objective_current", e.objective_current},
           {"objective_candidate", e.objective_candidate},
           {"switched", e.switched},
           {"partitions", parts},
           {"cores", cores},
           {"window_mean_latency_s", e.window_mean_latency_s},
           {"completed_in_window", e.completed_in_window},
           {"decision_wall_us", stable_output ? 0.0 : e.decision_wall_us}};
    out += j.dump() + "\n";
  }
  json summary{{"type", "summary"},
               {"horizon_s", horizon_s},
               {"seed", seed},
               {"switches", switches},
               {"mean_latency_s", sim.mean_latency_s},
               {"total_completed", sim.total_completed}};
  out += summary.dump() + "\n";
  return out;
}

}  // namespace splitsim
