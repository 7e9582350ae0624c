#include "splitsim/commands.hpp"

#include <cmath>

#include "json.hpp"
#include "splitsim/allocator.hpp"
#include "splitsim/controller.hpp"
#include "splitsim/scenarios.hpp"
#include "splitsim/validation.hpp"

namespace splitsim {

using nlohmann::json;

namespace {

struct LoadedScenario {
  ProfileSet set;
  std::vector<const ModelProfile*> models;  // workload order
  std::vector<double> rates;
  std::vector<std::string> names;
};

LoadedScenario load_scenario(const std::string& profile_path,
                             const std::string& workload_path, double at_s) {
  LoadedScenario sc;
  sc.set = load_profiles(profile_path);
  const WorkloadSpec workload = load_workload(workload_path);
  for (const auto& e : workload.entries) {
    const int idx = sc.set.index_of(e.model);
    if (idx < 0) throw ValidationError("workload references unknown model: " + e.model);
    sc.models.push_back(&sc.set.models[idx]);
    sc.rates.push_back(workload.rate_at(e.model, at_s));
    sc.names.push_back(e.model);
  }
  if (sc.models.empty()) throw ValidationError("workload lists no models");
  return sc;
}

std::pair<std::vector<int>, std::vector<int>> resolve_config(
    const LoadedScenario& sc, const std::string& config_path, bool optimize,
    AlphaMode mode) {
  if (optimize) {
    const AllocationResult r = greedy_optimize(sc.models, sc.rates, sc.set.hardware, mode);
    return {r.partitions, r.cores};
  }
  if (config_path.empty())
    throw ValidationError("either a configuration file or --optimize is required");
  const Configuration cfg = load_configuration(config_path);
  std::vector<int> p, k;
  for (const auto& name : sc.names) {
    auto pit = cfg.partitions.find(name);
    if (pit == cfg.partitions.end())
      throw ValidationError("configuration missing partition for " + name);
    p.push_back(pit->second);
    auto kit = cfg.cores.find(name);
    k.push_back(kit == cfg.cores.end() ? 0 : kit->second);
  }
  return {p, k};
}

SystemState assemble_state(const LoadedScenario& sc, const std::vector<int>& partitions,
                           const std::vector<int>& cores, AlphaMode mode) {
  SystemState s;
  s.hw = sc.set.hardware;
  s.alpha_mode = mode;
  for (std::size_t i = 0; i < sc.models.size(); ++i)
    s.tenants.push_back({sc.models[i], sc.rates[i]});
  s.partitions = partitions;
  s.cores = cores;
  return s;
}

json estimate_to_json(const LoadedScenario& sc, const SystemState& state,
                      const LatencyEstimate& est) {
  json models = json::object();
  for (std::size_t i = 0; i < sc.names.size(); ++i) {
    models[sc.names[i]] = {{"rate_rps", sc.rates[i]},
                           {"partition", state.partitions[i]},
                           {"cores", state.cores[i]},
                           {"e2e_s", est.e2e_s[i]},
                           {"cpu_wait_s", est.cpu_wait_s[i]},
                           {"alpha", est.alpha[i]}};
  }
  return json{{"feasible", est.feasible},
              {"objective", est.objective},
              {"tpu_utilization", est.tpu_utilization},
              {"tpu_wait_s", est.tpu_wait_s},
              {"alpha_mode", to_string(state.alpha_mode)},
              {"models", models},
              {"violations", est.violations}};
}

std::string estimate_to_csv(const LoadedScenario& sc, const SystemState& state,
                            const LatencyEstimate& est) {
  std::string out = "model,rate_rps,partition,cores,e2e_s,tpu_wait_s,cpu_wait_s,alpha\n";
  char line[512];
  for (std::size_t i = 0; i < sc.names.size(); ++i) {
    std::snprintf(line, sizeof(line), "%s,%.10g,%d,%d,%.10g,%.10g,%.10g,%.10g\n",
                  sc.names[i].c_str(), sc.rates[i], state.partitions[i], state.cores[i],
                  est.e2e_s[i], est.tpu_wait_s, est.cpu_wait_s[i], est.alpha[i]);
    out += line;
  }
  std::snprintf(line, sizeof(line), "aggregate,,,,%.10g,%.10g,,%d\n", est.objective,
                est.tpu_utilization, est.feasible ? 1 : 0);
  out += line;
  return out;
}

json allocation_to_json(const LoadedScenario& sc, const AllocationResult& r,
                        const std::string& baseline, AlphaMode mode) {
  json parts = json::object();
  json cores = json::object();
  for (std::size_t i = 0; i < sc.names.size(); ++i) {
    parts[sc.names[i]] = r.partitions[i];
    cores[sc.names[i]] = r.cores[i];
  }
  json trace = json::array();
  for (const auto& step : r.trace)
    trace.push_back({{"step", step.step},
                     {"model", sc.names[step.model]},
                     {"h", step.h},
                     {"objective", step.objective}});
  return json{{"baseline", baseline},
              {"alpha_mode", to_string(mode)},
              {"feasible", r.feasible},
              {"objective", r.objective},
              {"config", {{"partitions", parts}, {"cores", cores}}},
              {"iterations", r.iterations},
              {"trace", trace},
              {"tpu_utilization", r.estimate.tpu_utilization},
              {"violations", r.estimate.violations}};
}

}  // namespace

CommandResult cmd_predict(const PredictArgs& args) {
  const AlphaMode mode = parse_alpha_mode(args.alpha_mode);
  const LoadedScenario sc = load_scenario(args.profile_path, args.workload_path, args.at_s);
  const auto [p, k] = resolve_config(sc, args.config_path, args.optimize, mode);
  const SystemState state = assemble_state(sc, p, k, mode);
  const LatencyEstimate est = objective(state);

  CommandResult res;
  res.output = args.format == "csv" ? estimate_to_csv(sc, state, est)
                                    : estimate_to_json(sc, state, est).dump(2) + "\n";
  res.exit_code = est.feasible ? 0 : 3;
  return res;
}

CommandResult cmd_optimize(const OptimizeArgs& args) {
  const LoadedScenario sc = load_scenario(args.profile_path, args.workload_path, args.at_s);
  const HardwareSpec& hw = sc.set.hardware;
  AllocationResult r;
  AlphaMode mode = AlphaMode::full;
  if (args.baseline == "greedy") {
    r = greedy_optimize(sc.models, sc.rates, hw, mode);
  } else if (args.baseline == "alpha-zero") {
    mode = AlphaMode::zero;
    r = greedy_optimize(sc.models, sc.rates, hw, mode);
  } else if (args.baseline == "brute") {
    r = brute_force_optimize(sc.models, sc.rates, hw, mode);
  } else if (args.baseline == "compiler") {
    r = compiler_baseline(sc.models, sc.rates, hw, mode);
  } else if (args.baseline == "threshold") {
    r = threshold_config(sc.models, sc.rates, hw, args.threshold_pct, mode);
  } else {
    throw ValidationError("unknown baseline: " + args.baseline);
  }

  CommandResult res;
  res.output = allocation_to_json(sc, r, args.baseline, mode).dump(2) + "\n";
  res.exit_code = r.feasible ? 0 : 3;
  return res;
}

CommandResult cmd_simulate(const SimulateArgs& args) {
  const AlphaMode mode = parse_alpha_mode(args.alpha_mode);
  const LoadedScenario sc = load_scenario(args.profile_path, args.workload_path, 0.0);
  const auto [p, k] = resolve_config(sc, args.config_path, args.optimize, mode);

  SimConfig cfg;
  cfg.state = assemble_state(sc, p, k, mode);
  cfg.cache_mode = parse_cache_mode(args.cache_mode);
  cfg.seed = args.seed;
  cfg.total_requests = args.requests;
  cfg.warmup_requests = args.warmup;
  if (args.horizon_s > 0.0) cfg.horizon_s = args.horizon_s;

  const SimReport rep = run_sim(cfg);
  CommandResult res;
  res.output = args.format == "csv" ? rep.to_csv() : rep.to_json();
  res.exit_code = 0;
  return res;
}

CommandResult cmd_validate(const ValidateArgs& args) {
  const ProfileSet set = load_profiles(args.profile_path);
  ValidationOptions opt;
  opt.rho_targets = args.rho_targets;
  opt.requests_per_cell = args.requests;
  opt.seed = args.seed;
  opt.cache_mode = parse_cache_mode(args.cache_mode);
  if (args.mode == "single") {
    opt.multi_tenant = false;
  } else if (args.mode == "multi") {
    opt.single_tenant = false;
  } else if (args.mode != "both") {
    throw ValidationError("unknown validation mode: " + args.mode);
  }
  const ValidationReport rep = run_validation(set, opt);
  CommandResult res;
  res.output = args.format == "json" ? rep.to_json() : rep.to_csv();
  return res;
}

CommandResult cmd_replay(const ReplayArgs& args) {
  const ProfileSet set = load_profiles(args.profile_path);
  const WorkloadSpec workload = load_workload(args.workload_path);
  ControllerPolicy policy;
  policy.window_s = args.window_s;
  policy.decision_period_s = args.period_s;
  policy.hysteresis_pct = args.hysteresis_pct;
  policy.switch_penalty_s = args.switch_penalty_s;
  const double horizon =
      args.horizon_s > 0.0 ? args.horizon_s : workload.last_change_s() + 300.0;
  const ReplayReport rep =
      replay(set, workload, policy, horizon, args.seed, parse_cache_mode(args.cache_mode),
             parse_alpha_mode(args.alpha_mode));
  CommandResult res;
  res.output = rep.to_jsonl(args.stable_output);
  return res;
}

CommandResult cmd_gen_profile(const GenProfileArgs& args) {
  CommandResult res;
  if (args.bundle) {
    res.output = serialize_profiles(bundled_profile_set());
    return res;
  }
  HardwareSpec hw{args.hw_sram_bytes, args.hw_bandwidth, args.hw_cores};
  SynthSpec spec{args.name, args.points,  args.bytes,      args.tpu_s,
                 args.cpu_s, args.decay,  args.input_bytes};
  ProfileSet set;
  set.hardware = hw;
  set.models.push_back(synth_profile(spec, hw));
  res.output = serialize_profiles(set);
  return res;
}

}  // namespace splitsim
