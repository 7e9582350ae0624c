#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "splitsim/allocator.hpp"
#include "splitsim/simulator.hpp"

namespace splitsim {

struct ControllerPolicy {
  double window_s = 60.0;          // sliding window for rate estimation
  double decision_period_s = 30.0; // distance between re-optimizations
  double hysteresis_pct = 5.0;     // minimum predicted improvement to switch
  double switch_penalty_s = 0.0;   // accelerator downtime charged per switch
};

void validate(const ControllerPolicy& policy);

/// Per-model arrival counts over (now - window, now], divided by the window.
/// `arrival_times` must be ascending per model. Models without arrivals get 0.
std::vector<double> estimate_rates(const std::vector<std::vector<double>>& arrival_times,
                                   double now_s, double window_s);

struct EpochRecord {
  double t = 0.0;
  std::vector<double> rates;           // sliding-window estimates
  double objective_current = 0.0;      // predicted, active configuration
  double objective_candidate = 0.0;    // predicted, re-optimized configuration
  bool switched = false;
  std::vector<int> partitions;         // configuration active after the epoch
  std::vector<int> cores;
  double window_mean_latency_s = 0.0;  // completions inside the window
  std::int64_t completed_in_window = 0;
  double decision_wall_us = 0.0;       // measured optimizer time
};

struct ReplayReport {
  std::vector<std::string> model_names;
  std::vector<EpochRecord> epochs;
  int switches = 0;
  double horizon_s = 0.0;
  std::uint64_t seed = 0;
  SimReport sim;  // end-of-run pipeline statistics

  /// JSON lines, one record per epoch plus a trailing summary record.
  /// `stable_output` zeroes the measured wall times so repeated runs are
  /// byte-identical.
  std::string to_jsonl(bool stable_output) const;
};

/// Drives the pipeline under the time-varying workload; every
/// decision_period_s the controller re-estimates rates from the arrival log,
/// re-optimizes, and switches configuration when the predicted improvement
/// exceeds the hysteresis. The starting configuration defaults to the
/// optimizer result for the rates scheduled at t = 0.
ReplayReport replay(const ProfileSet& set, const WorkloadSpec& workload,
                    const ControllerPolicy& policy, double horizon_s,
                    std::uint64_t seed, CacheMode cache_mode = CacheMode::evict_on_switch,
                    AlphaMode alpha_mode = AlphaMode::full,
                    const std::optional<Configuration>& initial = std::nullopt);

}  // namespace splitsim
