#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace splitsim {

/// Exit codes shared by all commands: 0 ok, 2 validation failure, 3
/// infeasible configuration, 4 enumeration guard, 1 unexpected error.
struct CommandResult {
  int exit_code = 0;
  std::string output;  // machine-readable payload (JSON/CSV/JSONL)
};

struct PredictArgs {
  std::string profile_path;
  std::string workload_path;
  std::string config_path;  // exclusive with optimize
  bool optimize = false;
  double at_s = 0.0;  // instant of the workload schedule to evaluate
  std::string alpha_mode = "full";
  std::string format = "json";  // json|csv
};
CommandResult cmd_predict(const PredictArgs& args);

struct OptimizeArgs {
  std::string profile_path;
  std::string workload_path;
  std::string baseline = "greedy";  // greedy|brute|compiler|threshold|alpha-zero
  double threshold_pct = 10.0;
  double at_s = 0.0;
};
CommandResult cmd_optimize(const OptimizeArgs& args);

struct SimulateArgs {
  std::string profile_path;
  std::string workload_path;
  std::string config_path;  // exclusive with optimize
  bool optimize = false;
  std::uint64_t seed = 1;
  std::int64_t requests = 100'000;
  std::int64_t warmup = -1;  // -1: default rule
  std::string cache_mode = "evict_on_switch";
  std::string alpha_mode = "full";
  double horizon_s = 0.0;  // 0: none
  std::string format = "json";  // json|csv
};
CommandResult cmd_simulate(const SimulateArgs& args);

struct ValidateArgs {
  std::string profile_path;
  std::string mode = "both";  // single|multi|both
  std::vector<double> rho_targets = {0.2, 0.5};
  std::int64_t requests = 100'000;
  std::uint64_t seed = 1;
  std::string cache_mode = "evict_on_switch";
  std::string format = "csv";  // csv|json
};
CommandResult cmd_validate(const ValidateArgs& args);

struct ReplayArgs {
  std::string profile_path;
  std::string workload_path;
  double window_s = 60.0;
  double period_s = 30.0;
  double hysteresis_pct = 5.0;
  double switch_penalty_s = 0.0;
  double horizon_s = 0.0;  // 0: last schedule change + 300 s
  std::uint64_t seed = 1;
  std::string cache_mode = "evict_on_switch";
  std::string alpha_mode = "full";
  bool stable_output = false;  // zero measured wall times in the JSONL
};
CommandResult cmd_replay(const ReplayArgs& args);

struct GenProfileArgs {
  bool bundle = false;  // emit the whole bundled corpus instead
  std::string name = "synthetic";
  int points = 0;
  std::int64_t bytes = 0;
  double tpu_s = 0.0;
  double cpu_s = 0.0;
  double decay = 0.6;
  std::int64_t input_bytes = 150528;
  std::int64_t hw_sram_bytes = 8'000'000;
  double hw_bandwidth = 320e6;
  int hw_cores = 4;
};
CommandResult cmd_gen_profile(const GenProfileArgs& args);

}  // namespace splitsim
