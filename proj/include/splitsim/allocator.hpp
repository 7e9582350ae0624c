#pragma once

#include <optional>
#include <span>
#include <vector>

#include "splitsim/analytic.hpp"
#include "splitsim/profiles.hpp"

namespace splitsim {

/// Raised when the exhaustive search space exceeds the enumeration guard.
class GuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TraceStep {
  int step = 0;
  int model = 0;      // tenant index of the committed move
  int h = 0;          // committed step size (1 or 2)
  double objective = 0.0;
};

struct AllocationResult {
  std::vector<int> partitions;
  std::vector<int> cores;
  double objective = 0.0;
  bool feasible = false;
  LatencyEstimate estimate;
  int iterations = 0;            // committed moves
  std::vector<TraceStep> trace;  // one entry per commit, objectives strictly decreasing
};

/// Proportional fair-share core assignment for a fixed partitioning: models
/// without a CPU suffix get 0 cores, every suffix model gets at least one,
/// and all max_cores are handed out by largest-remainder rounding of the
/// rate * suffix-time load shares. Returns nullopt when more models carry a
/// suffix than there are cores.
std::optional<std::vector<int>> prop_alloc(std::span<const ModelProfile* const> models,
                                           std::span<const double> rates,
                                           std::span<const int> partitions,
                                           int max_cores);

/// Greedy hill-climbing over joint (partition, cores): starts from all-CPU,
/// repeatedly evaluates moving one or two segments of a single model onto the
/// accelerator (cores re-derived via prop_alloc per candidate) and commits
/// the best strictly improving move until none remains.
AllocationResult greedy_optimize(std::span<const ModelProfile* const> models,
                                 std::span<const double> rates, const HardwareSpec& hw,
                                 AlphaMode mode = AlphaMode::full);

/// Exhaustive minimum over all partition vectors and feasible integer core
/// assignments; ties broken toward the lexicographically smallest (P, K).
/// Throws GuardError when the candidate count exceeds `guard`.
AllocationResult brute_force_optimize(std::span<const ModelProfile* const> models,
                                      std::span<const double> rates,
                                      const HardwareSpec& hw,
                                      AlphaMode mode = AlphaMode::full,
                                      std::int64_t guard = 10'000'000);

/// Scans segments from the deepest one toward the input and offloads a
/// segment to the CPU while its CPU time stays within threshold_pct of its
/// accelerator time; returns the resulting partition point.
int threshold_baseline(const ModelProfile& m, double threshold_pct = 10.0);

/// Everything fully on the accelerator (the stock co-compilation deployment).
AllocationResult compiler_baseline(std::span<const ModelProfile* const> models,
                                   std::span<const double> rates, const HardwareSpec& hw,
                                   AlphaMode mode = AlphaMode::full);

/// Per-model threshold partitions combined with prop_alloc cores.
AllocationResult threshold_config(std::span<const ModelProfile* const> models,
                                  std::span<const double> rates, const HardwareSpec& hw,
                                  double threshold_pct = 10.0,
                                  AlphaMode mode = AlphaMode::full);

/// Helper shared by the optimizers: evaluate a concrete (P, K) candidate.
LatencyEstimate evaluate_candidate(std::span<const ModelProfile* const> models,
                                   std::span<const double> rates,
                                   const HardwareSpec& hw, std::span<const int> partitions,
                                   std::span<const int> cores, AlphaMode mode);

}  // namespace splitsim
