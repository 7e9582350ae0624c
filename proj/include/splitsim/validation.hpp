#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "splitsim/analytic.hpp"
#include "splitsim/simulator.hpp"

namespace splitsim {

/// Solves per-model request rates so each model contributes an equal share of
/// accelerator load and the total accelerator utilization hits `rho_target`.
/// Partitions/cores come from `state`; rates in `state` are ignored. Requires
/// every tenant to have an accelerator prefix.
std::vector<double> solve_rates_for_rho(const SystemState& state, double rho_target);

struct ValidationCell {
  std::string label;                    // e.g. "inceptionv4" or "efficientnet+gpunet"
  std::vector<std::string> models;
  std::vector<int> partitions;
  std::vector<int> cores;
  double rho = 0.0;
};

struct ValidationRow {
  std::string mode;   // "single" or "multi"
  std::string label;
  std::string model;
  double rho = 0.0;
  double rate_rps = 0.0;
  int partition = 0;
  int cores = 0;
  double predicted_s = 0.0;
  double simulated_s = 0.0;
  double ape_pct = 0.0;
};

struct ValidationReport {
  std::vector<ValidationRow> rows;
  double mape_single_pct = 0.0;
  double mape_multi_pct = 0.0;
  std::int64_t requests_per_cell = 0;
  std::uint64_t seed = 0;

  std::string to_csv() const;
  std::string to_json(int indent = 2) const;
};

struct ValidationOptions {
  std::vector<double> rho_targets = {0.2, 0.5};
  std::int64_t requests_per_cell = 100'000;
  std::uint64_t seed = 1;
  CacheMode cache_mode = CacheMode::evict_on_switch;
  bool single_tenant = true;
  bool multi_tenant = true;
};

/// Default grid over a profile set: every model alone at two partitions
/// (full accelerator and ~70% of the way), plus the bundled two-model mixes
/// when their profiles are present.
std::vector<ValidationCell> default_validation_cells(const ProfileSet& set,
                                                     const ValidationOptions& opt);

/// Runs analytic prediction against the simulator for every cell and model,
/// reporting per-row absolute percentage errors and per-mode MAPE.
ValidationReport run_validation(const ProfileSet& set, const ValidationOptions& opt);

}  // namespace splitsim
