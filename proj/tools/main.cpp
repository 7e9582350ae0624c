#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "splitsim/allocator.hpp"
#include "splitsim/commands.hpp"

namespace {

// Relative -o paths resolve against SPLITSIM_OUT_DIR when it is set.
std::string resolve_output_path(const std::string& path) {
  const char* dir = std::getenv("SPLITSIM_OUT_DIR");
  if (!dir || path.empty()) return path;
  std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (std::filesystem::path(dir) / p).string();
}

int emit(const splitsim::CommandResult& result, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << result.output;
  } else {
    const std::string resolved = resolve_output_path(out_path);
    std::ofstream out(resolved);
    if (!out) {
      std::cerr << "error: cannot write " << resolved << "\n";
      return 1;
    }
    out << result.output;
  }
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latency modeling, optimization, and simulation for accelerator/CPU "
               "split inference under tight accelerator memory"};
  app.require_subcommand(1);

  std::string out_path;
  app.add_option("-o,--output", out_path, "Write output to this file instead of stdout")
      ->capture_default_str();

  splitsim::PredictArgs predict;
  auto* cmd_pred = app.add_subcommand("predict", "Analytic latency estimate for a configuration");
  cmd_pred->add_option("--profiles", predict.profile_path, "Profile JSON file")->required();
  cmd_pred->add_option("--workload", predict.workload_path, "Workload JSON file")->required();
  cmd_pred->add_option("--config", predict.config_path, "Configuration JSON file");
  cmd_pred->add_flag("--optimize", predict.optimize, "Derive the configuration greedily");
  cmd_pred->add_option("--at", predict.at_s, "Workload schedule instant to evaluate");
  cmd_pred->add_option("--alpha-mode", predict.alpha_mode, "full|zero");
  cmd_pred->add_option("--format", predict.format, "json|csv");

  splitsim::OptimizeArgs optimize;
  auto* cmd_opt = app.add_subcommand("optimize", "Joint partition/core optimization");
  cmd_opt->add_option("--profiles", optimize.profile_path, "Profile JSON file")->required();
  cmd_opt->add_option("--workload", optimize.workload_path, "Workload JSON file")->required();
  cmd_opt->add_option("--baseline", optimize.baseline,
                      "greedy|brute|compiler|threshold|alpha-zero");
  cmd_opt->add_option("--threshold-pct", optimize.threshold_pct,
                      "Parity margin for the threshold baseline");
  cmd_opt->add_option("--at", optimize.at_s, "Workload schedule instant to evaluate");

  splitsim::SimulateArgs simulate;
  auto* cmd_sim = app.add_subcommand("simulate", "Discrete-event pipeline simulation");
  cmd_sim->add_option("--profiles", simulate.profile_path, "Profile JSON file")->required();
  cmd_sim->add_option("--workload", simulate.workload_path, "Workload JSON file")->required();
  cmd_sim->add_option("--config", simulate.config_path, "Configuration JSON file");
  cmd_sim->add_flag("--optimize", simulate.optimize, "Derive the configuration greedily");
  cmd_sim->add_option("--seed", simulate.seed, "RNG seed");
  cmd_sim->add_option("--requests", simulate.requests, "Total arrivals to generate");
  cmd_sim->add_option("--warmup", simulate.warmup,
                      "Arrivals excluded from statistics (-1: default rule)");
  cmd_sim->add_option("--cache", simulate.cache_mode, "evict_on_switch|lru_bytes");
  cmd_sim->add_option("--alpha-mode", simulate.alpha_mode, "full|zero");
  cmd_sim->add_option("--horizon", simulate.horizon_s, "Stop simulating at this time");
  cmd_sim->add_option("--format", simulate.format, "json|csv");

  splitsim::ValidateArgs validate;
  auto* cmd_val = app.add_subcommand("validate", "Analytic-vs-simulation error grid");
  cmd_val->add_option("--profiles", validate.profile_path, "Profile JSON file")->required();
  cmd_val->add_option("--mode", validate.mode, "single|multi|both");
  cmd_val->add_option("--rho", validate.rho_targets, "Accelerator utilization targets");
  cmd_val->add_option("--requests", validate.requests, "Arrivals per grid cell");
  cmd_val->add_option("--seed", validate.seed, "RNG seed");
  cmd_val->add_option("--cache", validate.cache_mode, "evict_on_switch|lru_bytes");
  cmd_val->add_option("--format", validate.format, "csv|json");

  splitsim::ReplayArgs replay;
  auto* cmd_rep = app.add_subcommand("replay", "Online adaptation over a workload trace");
  cmd_rep->add_option("--profiles", replay.profile_path, "Profile JSON file")->required();
  cmd_rep->add_option("--workload", replay.workload_path, "Workload JSON file")->required();
  cmd_rep->add_option("--window", replay.window_s, "Rate-estimation window seconds");
  cmd_rep->add_option("--period", replay.period_s, "Decision period seconds");
  cmd_rep->add_option("--hysteresis", replay.hysteresis_pct,
                      "Minimum predicted improvement percent to switch");
  cmd_rep->add_option("--switch-penalty", replay.switch_penalty_s,
                      "Accelerator downtime charged per switch");
  cmd_rep->add_option("--horizon", replay.horizon_s,
                      "Replay horizon seconds (0: last change + 300)");
  cmd_rep->add_option("--seed", replay.seed, "RNG seed");
  cmd_rep->add_option("--cache", replay.cache_mode, "evict_on_switch|lru_bytes");
  cmd_rep->add_option("--alpha-mode", replay.alpha_mode, "full|zero");
  cmd_rep->add_flag("--stable-output", replay.stable_output,
                    "Zero measured wall times for byte-stable output");

  splitsim::GenProfileArgs gen;
  auto* cmd_gen = app.add_subcommand("gen-profile", "Generate a synthetic profile file");
  cmd_gen->add_flag("--bundle", gen.bundle, "Emit the bundled model corpus");
  cmd_gen->add_option("--name", gen.name, "Model name");
  cmd_gen->add_option("--points", gen.points, "Number of partition points");
  cmd_gen->add_option("--bytes", gen.bytes, "Total weight bytes");
  cmd_gen->add_option("--tpu-s", gen.tpu_s, "Total accelerator compute seconds");
  cmd_gen->add_option("--cpu-s", gen.cpu_s, "Total single-core CPU seconds");
  cmd_gen->add_option("--decay", gen.decay, "Accelerator advantage decay in (0,1]");
  cmd_gen->add_option("--input-bytes", gen.input_bytes, "Model input tensor bytes");
  cmd_gen->add_option("--hw-sram", gen.hw_sram_bytes, "Accelerator SRAM bytes");
  cmd_gen->add_option("--hw-bandwidth", gen.hw_bandwidth, "Host link bytes/s");
  cmd_gen->add_option("--hw-cores", gen.hw_cores, "CPU cores");

  for (auto* sub : app.get_subcommands(nullptr)) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (cmd_pred->parsed()) return emit(splitsim::cmd_predict(predict), out_path);
    if (cmd_opt->parsed()) return emit(splitsim::cmd_optimize(optimize), out_path);
    if (cmd_sim->parsed()) return emit(splitsim::cmd_simulate(simulate), out_path);
    if (cmd_val->parsed()) return emit(splitsim::cmd_validate(validate), out_path);
    if (cmd_rep->parsed()) return emit(splitsim::cmd_replay(replay), out_path);
    if (cmd_gen->parsed()) return emit(splitsim::cmd_gen_profile(gen), out_path);
  } catch (const splitsim::GuardError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const splitsim::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
